//! Run configuration: a single `[run]` table of flat `key = value` pairs.
//! Unknown keys are rejected so that a misspelled parameter never falls
//! back to a default silently.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{BoundaryCondition, EnergyParams, FieldError, Penalty};
use crate::geometry::{DomainGeometry, GeometryError, Shape};
use crate::mesh::TriMesh;
use crate::solver::{InitialKind, Method, SolveSchedule};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcSpec {
    Tangential,
    /// `u = tau` on the boundary.
    DirichletTau,
    /// `u = x^perp / |x^perp|` on the boundary.
    DirichletXperp,
}

impl FromStr for BcSpec {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s.trim() {
            "tangential" => Ok(BcSpec::Tangential),
            "dirichlet:tau" => Ok(BcSpec::DirichletTau),
            "dirichlet:xperp" => Ok(BcSpec::DirichletXperp),
            other => Err(ConfigError::Invalid(format!(
                "bc must be tangential, dirichlet:tau or dirichlet:xperp, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for BcSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BcSpec::Tangential => "tangential",
            BcSpec::DirichletTau => "dirichlet:tau",
            BcSpec::DirichletXperp => "dirichlet:xperp",
        })
    }
}

impl BcSpec {
    pub fn condition(&self, mesh: &TriMesh<f64>) -> BoundaryCondition<f64> {
        match self {
            BcSpec::Tangential => BoundaryCondition::TangentialAnchor,
            BcSpec::DirichletTau => BoundaryCondition::dirichlet_from(mesh, |_, _, tau| tau),
            BcSpec::DirichletXperp => BoundaryCondition::dirichlet_from(mesh, |x, _, _| x.perp().normalized()),
        }
    }
}

/// A start in the `starts` list: `hedgehog`, `random[:seed]` or
/// `vortex:x,y`.
#[derive(Clone, Debug, PartialEq)]
pub enum StartSpec {
    Hedgehog,
    Random(Option<u64>),
    Vortex(f64, f64),
}

impl FromStr for StartSpec {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let bad = || ConfigError::Invalid(format!("unrecognized start {s:?}"));
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h.trim(), Some(r.trim())),
            None => (s.trim(), None),
        };
        match (head, rest) {
            ("hedgehog", None) => Ok(StartSpec::Hedgehog),
            ("random", None) => Ok(StartSpec::Random(None)),
            ("random", Some(r)) => r.parse().map(|v| StartSpec::Random(Some(v))).map_err(|_| bad()),
            ("vortex", Some(r)) => {
                let xy: Vec<f64> = r
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad())?;
                match xy[..] {
                    [x, y] => Ok(StartSpec::Vortex(x, y)),
                    _ => Err(bad()),
                }
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rings {
    Auto,
    Fixed(usize),
}

impl Rings {
    /// `ceil(diameter / eps)` clamped to `[8, 96]`, i.e. a radial spacing
    /// of about eps/2 on the unit disk.
    pub fn resolve(&self, geom: &DomainGeometry<f64>, eps: f64) -> usize {
        match *self {
            Rings::Fixed(n) => n,
            Rings::Auto => ((geom.diameter() / eps).ceil() as usize).clamp(8, 96),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    run: RawRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum RawRings {
    Count(i64),
    Word(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    shape: Option<String>,
    penalty: Option<String>,
    bc: Option<String>,
    k: Option<f64>,
    eps: Option<f64>,
    rings: Option<RawRings>,
    eps_start: Option<f64>,
    eps_factor: Option<f64>,
    max_iters: Option<usize>,
    grad_tol: Option<f64>,
    armijo_c: Option<f64>,
    step_init: Option<f64>,
    method: Option<String>,
    output: Option<String>,
    seed: Option<u64>,
    starts: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub shape: String,
    pub penalty: Penalty,
    pub bc: BcSpec,
    pub k: f64,
    pub eps_target: f64,
    pub rings: Rings,
    pub eps_start: f64,
    pub eps_factor: f64,
    pub max_iters: usize,
    pub grad_tol: Option<f64>,
    pub armijo_c: f64,
    pub step_init: f64,
    pub method: Method,
    pub output: PathBuf,
    pub seed: u64,
    pub starts: Vec<StartSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            shape: "disk".into(),
            penalty: Penalty::Div,
            bc: BcSpec::Tangential,
            k: 1.0,
            eps_target: 0.05,
            rings: Rings::Auto,
            eps_start: 0.5,
            eps_factor: 0.7,
            max_iters: 20_000,
            grad_tol: None,
            armijo_c: 1e-4,
            step_init: 0.1,
            method: Method::Lbfgs,
            output: PathBuf::from("glvortex-out"),
            seed: 0,
            starts: vec![StartSpec::Hedgehog, StartSpec::Random(None), StartSpec::Random(None)],
        }
    }
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawFile = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let r = raw.run;
        let mut c = RunConfig::default();
        if let Some(s) = r.shape {
            c.shape = s;
        }
        if let Some(p) = r.penalty {
            c.penalty = match p.as_str() {
                "div" => Penalty::Div,
                "curl" => Penalty::Curl,
                other => {
                    return Err(ConfigError::Invalid(format!(
                        "penalty must be div or curl, got {other:?}"
                    )))
                }
            };
        }
        if let Some(b) = r.bc {
            c.bc = b.parse()?;
        }
        c.k = r.k.unwrap_or(c.k);
        c.eps_target = r.eps.unwrap_or(c.eps_target);
        c.rings = match r.rings {
            None => Rings::Auto,
            Some(RawRings::Word(w)) if w == "auto" => Rings::Auto,
            Some(RawRings::Word(w)) => {
                return Err(ConfigError::Invalid(format!(
                    "rings must be an integer or \"auto\", got {w:?}"
                )))
            }
            Some(RawRings::Count(n)) if n >= 4 => Rings::Fixed(n as usize),
            Some(RawRings::Count(n)) => return Err(ConfigError::Invalid(format!("rings must be at least 4, got {n}"))),
        };
        // without an explicit start the ladder begins at 0.5 or at the target
        c.eps_start = r.eps_start.unwrap_or(c.eps_start.max(c.eps_target));
        c.eps_factor = r.eps_factor.unwrap_or(c.eps_factor);
        c.max_iters = r.max_iters.unwrap_or(c.max_iters);
        c.grad_tol = r.grad_tol;
        c.armijo_c = r.armijo_c.unwrap_or(c.armijo_c);
        c.step_init = r.step_init.unwrap_or(c.step_init);
        if let Some(m) = r.method {
            c.method = match m.as_str() {
                "lbfgs" => Method::Lbfgs,
                "gd" | "gradient_descent" => Method::GradientDescent,
                other => {
                    return Err(ConfigError::Invalid(format!(
                        "method must be lbfgs or gd, got {other:?}"
                    )))
                }
            };
        }
        if let Some(o) = r.output {
            c.output = PathBuf::from(o);
        }
        c.seed = r.seed.unwrap_or(c.seed);
        if let Some(s) = r.starts {
            c.starts = s.iter().map(|x| x.parse()).collect::<Result<_, _>>()?;
        }
        c.validate()?;
        Ok(c)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        text.parse()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive("eps", self.eps_target)?;
        positive("k", self.k)?;
        positive("eps_start", self.eps_start)?;
        positive("armijo_c", self.armijo_c)?;
        positive("step_init", self.step_init)?;
        if let Some(t) = self.grad_tol {
            positive("grad_tol", t)?;
        }
        if self.eps_start < self.eps_target {
            return Err(ConfigError::Invalid(format!(
                "eps_start {} is below eps {}",
                self.eps_start, self.eps_target
            )));
        }
        if !(self.eps_factor > 0.0 && self.eps_factor < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "eps_factor must lie in (0, 1), got {}",
                self.eps_factor
            )));
        }
        if self.starts.is_empty() {
            return Err(ConfigError::Invalid("starts must not be empty".into()));
        }
        if self.max_iters == 0 {
            return Err(ConfigError::Invalid("max_iters must be positive".into()));
        }
        self.shape.parse::<Shape<f64>>()?;
        Ok(())
    }

    pub fn geometry(&self) -> Result<DomainGeometry<f64>, ConfigError> {
        Ok(DomainGeometry::new(self.shape.parse()?)?)
    }

    pub fn params(&self, mesh: &TriMesh<f64>) -> Result<EnergyParams<f64>, ConfigError> {
        Ok(EnergyParams::new(
            self.eps_target,
            self.k,
            self.penalty,
            self.bc.condition(mesh),
        )?)
    }

    pub fn schedule(&self) -> SolveSchedule<f64> {
        SolveSchedule {
            max_iters_per_stage: self.max_iters,
            grad_tol: self.grad_tol,
            armijo_c: self.armijo_c,
            step_init: self.step_init,
            seed: self.seed,
            method: self.method,
            ..SolveSchedule::continuation(self.eps_start, self.eps_target, self.eps_factor)
        }
    }

    /// Random starts without an explicit seed get `seed + 1`, `seed + 2`, ...
    pub fn initial_kinds(&self) -> Vec<InitialKind<f64>> {
        let mut next = self.seed;
        self.starts
            .iter()
            .map(|s| match *s {
                StartSpec::Hedgehog => InitialKind::TangentHedgehog,
                StartSpec::Random(Some(seed)) => InitialKind::RandomUnit(seed),
                StartSpec::Random(None) => {
                    next += 1;
                    InitialKind::RandomUnit(next)
                }
                StartSpec::Vortex(x, y) => InitialKind::InteriorVortex([x, y]),
            })
            .collect()
    }

    /// Output directory, with `GLVORTEX_OUT` taking precedence.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os("GLVORTEX_OUT") {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.output.clone(),
        }
    }

    /// Canonical TOML text; parsing it gives back the same config.
    pub fn to_toml(&self) -> String {
        let mut s = String::from("[run]\n");
        let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        kv("shape", quoted(&self.shape));
        kv(
            "penalty",
            quoted(match self.penalty {
                Penalty::Div => "div",
                Penalty::Curl => "curl",
            }),
        );
        kv("bc", quoted(&self.bc.to_string()));
        kv("k", float(self.k));
        kv("eps", float(self.eps_target));
        kv(
            "rings",
            match self.rings {
                Rings::Auto => quoted("auto"),
                Rings::Fixed(n) => n.to_string(),
            },
        );
        kv("eps_start", float(self.eps_start));
        kv("eps_factor", float(self.eps_factor));
        kv("max_iters", self.max_iters.to_string());
        if let Some(t) = self.grad_tol {
            kv("grad_tol", float(t));
        }
        kv("armijo_c", float(self.armijo_c));
        kv("step_init", float(self.step_init));
        kv(
            "method",
            quoted(match self.method {
                Method::Lbfgs => "lbfgs",
                Method::GradientDescent => "gd",
            }),
        );
        kv("output", quoted(&self.output.to_string_lossy()));
        kv("seed", self.seed.to_string());
        let starts: Vec<String> = self
            .starts
            .iter()
            .map(|s| {
                quoted(&match s {
                    StartSpec::Hedgehog => "hedgehog".to_string(),
                    StartSpec::Random(None) => "random".to_string(),
                    StartSpec::Random(Some(v)) => format!("random:{v}"),
                    StartSpec::Vortex(x, y) => format!("vortex:{},{}", float(*x), float(*y)),
                })
            })
            .collect();
        kv("starts", format!("[{}]", starts.join(", ")));
        s
    }
}

fn quoted(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

// Debug formatting of f64 round-trips and always carries a decimal point.
fn float(v: f64) -> String {
    format!("{v:?}")
}
