//! The self-check suite behind `glvortex verify`.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::config::ConfigError;
use crate::diagnostics::smooth::{MollifiedVortex, PolyField, TubularX};
use crate::diagnostics::{
    collar_symmetry_error, duality_gap, extend_field, gradient_check, legendre_hadamard, pokhozhaev_curl,
    pokhozhaev_div,
};
use crate::fields::{energy, EnergyParams, Penalty, VectorField};
use crate::geometry::{DomainGeometry, Shape};
use crate::mesh::{build_mesh, mirror_collar};
use crate::scalar::Vec2;

pub const CHECKS: [&str; 5] = ["gradient", "duality", "pokhozhaev", "extension", "legendre_hadamard"];

/// Tolerances; a check passes when its error is strictly below them.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub gradient_tol: f64,
    pub duality_tol: f64,
    pub pokhozhaev_tol: f64,
    pub extension_tol: f64,
    pub lh_samples: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            gradient_tol: 1e-6,
            duality_tol: 1e-12,
            pokhozhaev_tol: 1e-8,
            extension_tol: 1e-12,
            lh_samples: 10_000,
            seed: 0,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyFile {
    #[serde(default)]
    verify: VerifyConfig,
}

impl VerifyConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let f: VerifyFile = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Ok(f.verify)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, error: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name,
            error,
            tolerance,
            passed: error < tolerance,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<18} error {:.3e} (tol {:.1e})  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.error,
            self.tolerance,
            self.detail
        )
    }
}

fn disk() -> DomainGeometry<f64> {
    DomainGeometry::new(Shape::UnitDisk).expect("unit disk")
}

fn random_field(n: usize, rng: &mut ChaCha8Rng) -> VectorField<f64> {
    VectorField::new(
        (0..n)
            .map(|_| Vec2::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)))
            .collect(),
    )
}

/// Central differences on the 19-vertex disk mesh, both penalties.
pub fn check_gradient(cfg: &VerifyConfig) -> CheckResult {
    let g = disk();
    let m = build_mesh(&g, 2).expect("disk mesh");
    let mut worst = 0.0f64;
    for (i, pen) in [Penalty::Div, Penalty::Curl].into_iter().enumerate() {
        let p = EnergyParams::tangential(0.3, 1.5, pen).expect("params");
        worst = worst.max(gradient_check(&m, &p, 50, 1e-5, cfg.seed + i as u64).max_rel_error);
    }
    CheckResult::new(
        "gradient",
        worst,
        cfg.gradient_tol,
        format!("max relative error, 2 x 50 directions, {} vertices", m.vertex_count()),
    )
}

/// `|E_curl(u) - E_div(u^perp)| / (1 + E)` over 100 random fields.
pub fn check_duality(cfg: &VerifyConfig) -> CheckResult {
    let g = disk();
    let m = build_mesh(&g, 8).expect("disk mesh");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let eps = rng.gen_range(0.05..0.5);
        let k = rng.gen_range(0.1..5.0);
        let p = EnergyParams::tangential(eps, k, Penalty::Curl).expect("params");
        let u = random_field(m.vertex_count(), &mut rng);
        let e = energy(&u, &p, &m).expect("aligned").total;
        worst = worst.max(duality_gap(&u, &p, &m).expect("aligned") / (1.0 + e));
    }
    CheckResult::new("duality", worst, cfg.duality_tol, "100 random fields".into())
}

/// Closed forms, a mollified vortex and a boundary-centred ball, all at
/// quadrature order 256.
pub fn check_pokhozhaev(cfg: &VerifyConfig) -> CheckResult {
    let g = disk();
    let n = 256;
    let id = PolyField::identity();
    let rot = PolyField::rotation();
    let unit_div = EnergyParams::tangential(1.0, 1.0, Penalty::Div).expect("params");
    let unit_curl = EnergyParams::tangential(1.0, 1.0, Penalty::Curl).expect("params");
    let mut worst = 0.0f64;
    let mut note = |e: f64| worst = worst.max(if e.is_finite() { e } else { f64::INFINITY });

    // u = x (Div) and u = x^perp (Curl) about the origin with r = 1/2
    let closed = [9.0 * PI / 128.0, 37.0 * PI / 384.0, -5.0 * PI / 192.0];
    let rd = pokhozhaev_div(&id, &unit_div, &g, Vec2::zero(), 0.5, &id, n);
    let rc = pokhozhaev_curl(&rot, &unit_curl, &g, Vec2::zero(), 0.5, &id, n);
    for r in [rd, rc] {
        match r {
            Ok(r) => {
                note(r.mismatch);
                note((r.lhs - closed[0]).abs());
                note((r.rhs - closed[1]).abs());
                note((r.residual_term - closed[2]).abs());
            }
            Err(_) => note(f64::INFINITY),
        }
    }

    let vortex = MollifiedVortex {
        center: Vec2::new(0.05, 0.0),
        core: 0.1,
    };
    let p = EnergyParams::tangential(0.1, 1.0, Penalty::Div).expect("params");
    note(pokhozhaev_div(&vortex, &p, &g, Vec2::zero(), 0.5, &id, n).map_or(f64::INFINITY, |r| r.mismatch));

    let s0 = 0.3;
    let x = TubularX { geom: &g, s0 };
    let x0 = g.boundary_point(s0);
    for pen in [Penalty::Div, Penalty::Curl] {
        let p = EnergyParams::tangential(0.5, 1.0, pen).expect("params");
        let r = match pen {
            Penalty::Div => pokhozhaev_div(&rot, &p, &g, x0, 0.2, &x, n),
            Penalty::Curl => pokhozhaev_curl(&rot, &p, &g, x0, 0.2, &x, n),
        };
        note(r.map_or(f64::INFINITY, |r| r.mismatch));
    }

    CheckResult::new(
        "pokhozhaev",
        worst,
        cfg.pokhozhaev_tol,
        "closed forms, vortex, boundary ball; n = 256".into(),
    )
}

/// Collar symmetry of the reflection extension on disk and peanut meshes.
pub fn check_extension(cfg: &VerifyConfig) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = 0.0f64;
    for shape in ["disk", "ellipse:1,0.6", "peanut"] {
        let g = DomainGeometry::new(shape.parse().expect("shape")).expect("geometry");
        let m = build_mesh(&g, 12).expect("mesh");
        let c = match mirror_collar(&g, &m, g.tubular_width() * 0.5) {
            Ok(c) => c,
            Err(_) => {
                return CheckResult::new(
                    "extension",
                    f64::INFINITY,
                    cfg.extension_tol,
                    format!("{shape}: collar failed"),
                )
            }
        };
        let u = random_field(c.vertex_count(), &mut rng);
        let err = extend_field(&u, &c, &g).and_then(|ext| collar_symmetry_error(&u, &ext, &c, &g));
        worst = worst.max(err.unwrap_or(f64::INFINITY));
    }
    CheckResult::new(
        "extension",
        worst,
        cfg.extension_tol,
        "tau-even / n-odd on disk, ellipse, peanut".into(),
    )
}

/// Sampled Legendre-Hadamard minimum against the analytic bound. The
/// reported error is the largest `bound - min` (negative when it holds),
/// compared against zero.
pub fn check_legendre_hadamard(cfg: &VerifyConfig) -> CheckResult {
    let mut worst = f64::NEG_INFINITY;
    let mut tightest = f64::INFINITY;
    for shape in ["disk", "ellipse:1,0.6", "peanut"] {
        let g = DomainGeometry::<f64>::new(shape.parse().expect("shape")).expect("geometry");
        for k in [0.5, 1.0, 4.0] {
            let chk = legendre_hadamard(&g, k, cfg.lh_samples, cfg.seed);
            worst = worst.max(chk.analytic_bound - chk.min_form);
            tightest = tightest.min(chk.min_form / chk.analytic_bound);
        }
    }
    let mut r = CheckResult::new(
        "legendre_hadamard",
        worst,
        0.0,
        format!(
            "3 shapes x k in {{0.5, 1, 4}}, {} samples; min/bound >= {tightest:.3}",
            cfg.lh_samples
        ),
    );
    // too few samples is a configuration failure
    r.passed = worst <= 0.0 && cfg.lh_samples >= 100;
    r
}

/// Runs all checks, or the one named by `only`.
pub fn run_checks(cfg: &VerifyConfig, only: Option<&str>) -> Result<Vec<CheckResult>, String> {
    if let Some(name) = only {
        if !CHECKS.contains(&name) {
            return Err(format!("unknown check {name:?}; available: {}", CHECKS.join(", ")));
        }
    }
    let wanted = |n: &str| only.is_none_or(|o| o == n);
    let mut out = Vec::new();
    if wanted("gradient") {
        out.push(check_gradient(cfg));
    }
    if wanted("duality") {
        out.push(check_duality(cfg));
    }
    if wanted("pokhozhaev") {
        out.push(check_pokhozhaev(cfg));
    }
    if wanted("extension") {
        out.push(check_extension(cfg));
    }
    if wanted("legendre_hadamard") {
        out.push(check_legendre_hadamard(cfg));
    }
    Ok(out)
}
