//! Orchestration of single runs and eps sweeps, and their artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::fields::{apply_bc, discrete_operators, EnergyBreakdown, EnergyParams, VectorField};
use crate::geometry::DomainGeometry;
use crate::io::{read_field_csv, write_atomic, InputError};
use crate::mesh::{build_mesh, MeshError, TriMesh};
use crate::solver::{minimize, multistart_detailed, InitialKind, SolveSchedule, SolveTrace, SolverError};
use crate::svg::{envelope, outline_of, render_quiver, ReportMarks};
use crate::vortex::{analyze, VortexError, VortexReport};

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("malformed report {path}: {msg}")]
    Report { path: String, msg: String },
    #[error("mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error("{stage}: {source}")]
    Solver { stage: String, source: SolverError },
    #[error("vortex analysis at eps = {eps}: {source}")]
    Analysis { eps: f64, source: VortexError },
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) | AppError::Input(_) | AppError::Report { .. } | AppError::Mesh(_) => 2,
            AppError::Solver { .. } => 3,
            AppError::Analysis { .. } | AppError::Io { .. } => 4,
        }
    }
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<PathBuf, AppError> {
    write_atomic(&path, bytes).map_err(|source| AppError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Everything a single run produces.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub geom: DomainGeometry<f64>,
    pub mesh: TriMesh<f64>,
    pub params: EnergyParams<f64>,
    pub field: VectorField<f64>,
    pub trace: SolveTrace<f64>,
    pub report: VortexReport,
    pub starts: Vec<StartSummary>,
    pub winner: usize,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub kind: InitialKind<f64>,
    pub energy: Option<f64>,
    pub error: Option<String>,
}

impl RunOutcome {
    pub fn energy(&self) -> EnergyBreakdown<f64> {
        self.trace.final_energy().unwrap_or_default()
    }

    /// `eps * max |grad u|` over the triangles.
    pub fn eps_maxgrad(&self) -> f64 {
        let g = discrete_operators(&self.field, &self.mesh)
            .iter()
            .map(|o| o.grad_sq)
            .fold(0.0, f64::max)
            .sqrt();
        self.params.eps * g
    }

    /// `(1 / 8 eps^2) * integral (1 - |u|^2)^2`, half the potential term.
    pub fn potential_mass(&self) -> f64 {
        0.5 * self.energy().potential
    }
}

fn analyze_field(
    u: &VectorField<f64>,
    p: &EnergyParams<f64>,
    mesh: &TriMesh<f64>,
    geom: &DomainGeometry<f64>,
) -> Result<VortexReport, AppError> {
    analyze(u, p, mesh, geom).map_err(|source| AppError::Analysis { eps: p.eps, source })
}

/// Geometry, mesh and multistart continuation for one config.
pub fn solve(config: &RunConfig) -> Result<RunOutcome, AppError> {
    config.validate()?;
    let t0 = Instant::now();
    let geom = config.geometry()?;
    let mesh = build_mesh(&geom, config.rings.resolve(&geom, config.eps_target))?;
    let params = config.params(&mesh)?;
    let kinds = config.initial_kinds();
    let (winner, outcomes) =
        multistart_detailed(&params, &config.schedule(), &mesh, &geom, &kinds).map_err(|source| AppError::Solver {
            stage: format!("multistart continuation to eps = {}", config.eps_target),
            source,
        })?;
    let starts = outcomes
        .iter()
        .map(|o| StartSummary {
            kind: o.kind.clone(),
            energy: o
                .result
                .as_ref()
                .ok()
                .and_then(|(_, t)| t.final_energy())
                .map(|e| e.total),
            error: o.result.as_ref().err().map(|e| e.to_string()),
        })
        .collect();
    let (field, trace) = outcomes
        .into_iter()
        .nth(winner)
        .and_then(|o| o.result.ok())
        .expect("winner succeeded");
    let report = analyze_field(&field, &params, &mesh, &geom)?;
    Ok(RunOutcome {
        config: config.clone(),
        geom,
        mesh,
        params,
        field,
        trace,
        report,
        starts,
        winner,
        wall_time_s: t0.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub program: String,
    pub version: String,
    pub config: String,
    pub rings: usize,
    pub vertices: usize,
    pub starts: Vec<StartSummary>,
    pub winner: usize,
    pub energy: EnergyBreakdown<f64>,
    pub converged: bool,
    pub index_sum: String,
    pub artifacts: Vec<String>,
    pub wall_time_s: f64,
}

impl Manifest {
    pub fn config(&self) -> Result<RunConfig, ConfigError> {
        self.config.parse()
    }
}

/// Reads a run config, or the config echoed inside a manifest.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    if text.trim_start().starts_with('{') {
        let m: Manifest = serde_json::from_str(&text).map_err(|e| ConfigError::Parse(format!("manifest: {e}")))?;
        m.config()
    } else {
        text.parse()
    }
}

fn marks_of(report: &VortexReport) -> ReportMarks {
    // the report JSON is the contract between `run` and `plot`
    ReportMarks::from_json(&report.to_json()).expect("report JSON carries ball positions")
}

fn field_csv(u: &VectorField<f64>, mesh: &TriMesh<f64>) -> Vec<u8> {
    let mut buf = Vec::new();
    u.write_csv(mesh, &mut buf).expect("writing to memory");
    buf
}

fn trace_csv(trace: &SolveTrace<f64>) -> Vec<u8> {
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).expect("writing to memory");
    buf
}

/// Field, trace, report and plot of one solution into `dir`.
fn write_solution(out: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>, AppError> {
    let svg = render_quiver(
        &out.mesh
            .vertices
            .iter()
            .copied()
            .zip(out.field.values.iter().copied())
            .collect(),
        &marks_of(&out.report),
        &outline_of(&out.geom, 256),
    );
    Ok(vec![
        write(dir.join("field.csv"), &field_csv(&out.field, &out.mesh))?,
        write(dir.join("trace.csv"), &trace_csv(&out.trace))?,
        write(dir.join("vortex.json"), out.report.to_json().as_bytes())?,
        write(dir.join("quiver.svg"), svg.as_bytes())?,
    ])
}

/// Writes every artifact of `out` into `dir`; the manifest goes last.
pub fn write_run(out: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>, AppError> {
    let mut paths = write_solution(out, dir)?;
    let manifest = Manifest {
        program: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: out.config.to_toml(),
        rings: out.mesh.rings,
        vertices: out.mesh.vertex_count(),
        starts: out.starts.clone(),
        winner: out.winner,
        energy: out.energy(),
        converged: out.trace.converged(),
        index_sum: out.report.index_sum.to_string(),
        artifacts: paths
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
        wall_time_s: out.wall_time_s,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    paths.push(write(dir.join("manifest.json"), json.as_bytes())?);
    Ok(paths)
}

/// One sweep row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub eps: f64,
    pub rings: usize,
    pub total: f64,
    pub dirichlet: f64,
    pub penalty: f64,
    pub potential: f64,
    pub eps_maxgrad: f64,
    pub max_modulus: f64,
    pub potential_mass: f64,
    pub index_sum: String,
    pub converged: bool,
}

impl ScalingRow {
    pub fn of(out: &RunOutcome) -> Self {
        let e = out.energy();
        Self {
            eps: out.params.eps,
            rings: out.mesh.rings,
            total: e.total,
            dirichlet: e.dirichlet,
            penalty: e.penalty,
            potential: e.potential,
            eps_maxgrad: out.eps_maxgrad(),
            max_modulus: out.field.max_modulus(),
            potential_mass: out.potential_mass(),
            index_sum: out.report.index_sum.to_string(),
            converged: out.trace.converged(),
        }
    }
}

/// Rows sorted by decreasing eps with the fit `total = slope |ln eps| + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub rows: Vec<ScalingRow>,
    pub slope: f64,
    pub intercept: f64,
}

/// Ordinary least squares `y = slope x + intercept`; `None` for fewer
/// than two distinct abscissae.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs[..n].iter().sum::<f64>() / nf;
    let my = ys[..n].iter().sum::<f64>() / nf;
    let sxx: f64 = xs[..n].iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs[..n].iter().zip(&ys[..n]).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

impl ScalingRecord {
    pub fn from_rows(mut rows: Vec<ScalingRow>) -> Result<Self, ConfigError> {
        if rows.len() < 3 {
            return Err(ConfigError::Invalid(format!(
                "a sweep needs at least 3 eps values, got {}",
                rows.len()
            )));
        }
        rows.sort_by(|a, b| b.eps.total_cmp(&a.eps));
        let xs: Vec<f64> = rows.iter().map(|r| r.eps.ln().abs()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.total).collect();
        let (slope, intercept) =
            fit_line(&xs, &ys).ok_or_else(|| ConfigError::Invalid("sweep eps values must be distinct".into()))?;
        Ok(Self { rows, slope, intercept })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "eps,rings,total,dirichlet,penalty,potential,eps_maxgrad,max_modulus,potential_mass,index_sum,converged\n",
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{:e},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{}\n",
                r.eps,
                r.rings,
                r.total,
                r.dirichlet,
                r.penalty,
                r.potential,
                r.eps_maxgrad,
                r.max_modulus,
                r.potential_mass,
                r.index_sum,
                r.converged
            ));
        }
        s.push_str(&format!(
            "# slope {:.17e} intercept {:.17e}\n",
            self.slope, self.intercept
        ));
        s
    }
}

/// Parses `0.2,0.1,0.05` into a strictly decreasing list of at least 3.
pub fn parse_eps_list(s: &str) -> Result<Vec<f64>, ConfigError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| ConfigError::Invalid(format!("eps list {s:?}: {e}")))?;
    if v.len() < 3 {
        return Err(ConfigError::Invalid(format!(
            "eps list needs at least 3 values, got {}",
            v.len()
        )));
    }
    if v.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(ConfigError::Invalid("eps values must be positive".into()));
    }
    if v.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ConfigError::Invalid("eps list must be strictly decreasing".into()));
    }
    Ok(v)
}

/// Interpolates `u` from `from` onto the vertices of `to`.
fn transfer(u: &VectorField<f64>, from: &TriMesh<f64>, to: &TriMesh<f64>) -> VectorField<f64> {
    let loc = from.locator();
    VectorField::from_fn(to, |x| u.eval(from, &loc, x))
}

/// Warm-started chain: a multistart run at the first eps, then each later
/// eps continues from the previous minimizer (transferred to the finer
/// mesh) through the intermediate ladder values.
pub fn sweep(config: &RunConfig, eps_list: &[f64]) -> Result<(ScalingRecord, Vec<RunOutcome>), AppError> {
    let mut eps_sorted = eps_list.to_vec();
    eps_sorted.sort_by(|a, b| b.total_cmp(a));
    if eps_sorted.len() < 3 {
        return Err(
            ConfigError::Invalid(format!("a sweep needs at least 3 eps values, got {}", eps_sorted.len())).into(),
        );
    }
    let first = RunConfig {
        eps_target: eps_sorted[0],
        eps_start: config.eps_start.max(eps_sorted[0]),
        ..config.clone()
    };
    let mut outcomes = vec![solve(&first)?];
    for &eps in &eps_sorted[1..] {
        let t0 = Instant::now();
        let prev = outcomes.last().expect("first run");
        let cfg = RunConfig {
            eps_target: eps,
            eps_start: prev.params.eps,
            ..config.clone()
        };
        cfg.validate()?;
        let mesh = build_mesh(&prev.geom, cfg.rings.resolve(&prev.geom, eps))?;
        let params = cfg.params(&mesh)?;
        let mut u = transfer(&prev.field, &prev.mesh, &mesh);
        apply_bc(&mut u, &params.bc, &mesh);
        let sched: SolveSchedule<f64> = cfg.schedule();
        let mut trace = SolveTrace::default();
        for stage_eps in sched.eps_ladder().into_iter().skip(1) {
            let (next, t) =
                minimize(&u, &params.with_eps(stage_eps), &sched, &mesh).map_err(|source| AppError::Solver {
                    stage: format!("sweep row eps = {eps} (stage eps = {stage_eps})"),
                    source,
                })?;
            u = next;
            trace.stages.extend(t.stages);
        }
        let report = analyze_field(&u, &params, &mesh, &prev.geom)?;
        outcomes.push(RunOutcome {
            config: cfg,
            geom: prev.geom.clone(),
            mesh,
            params,
            field: u,
            trace,
            report,
            // warm started, so there is no list of starts
            starts: Vec::new(),
            winner: 0,
            wall_time_s: t0.elapsed().as_secs_f64(),
        });
    }
    let record = ScalingRecord::from_rows(outcomes.iter().map(ScalingRow::of).collect())?;
    Ok((record, outcomes))
}

/// Scaling CSV and JSON at the top of `dir`, one subdirectory per row.
pub fn write_sweep(record: &ScalingRecord, outcomes: &[RunOutcome], dir: &Path) -> Result<Vec<PathBuf>, AppError> {
    let mut paths = Vec::new();
    for out in outcomes {
        paths.extend(write_solution(out, &dir.join(format!("eps_{}", out.params.eps)))?);
    }
    paths.push(write(dir.join("scaling.csv"), record.to_csv().as_bytes())?);
    let json = serde_json::to_string_pretty(record).expect("record serializes");
    paths.push(write(dir.join("scaling.json"), json.as_bytes())?);
    Ok(paths)
}

/// `plot`: quiver SVG from a field CSV and a vortex report. Without a
/// shape the outline is the envelope of the field's vertices.
pub fn plot(field: &Path, report: &Path, shape: Option<&str>) -> Result<String, AppError> {
    let rows = read_field_csv(field)?;
    let rp = report.display().to_string();
    let text = std::fs::read_to_string(report).map_err(|source| InputError::Read {
        path: rp.clone(),
        source,
    })?;
    let marks = ReportMarks::from_json(&text).map_err(|e| AppError::Report {
        path: rp,
        msg: e.to_string(),
    })?;
    let outline = match shape {
        Some(s) => {
            let geom = DomainGeometry::new(s.parse().map_err(ConfigError::from)?).map_err(ConfigError::from)?;
            outline_of(&geom, 256)
        }
        None if !rows.is_empty() => envelope(&rows.iter().map(|r| r.0).collect::<Vec<_>>(), 128),
        None => outline_of(
            &DomainGeometry::new(crate::geometry::Shape::UnitDisk).map_err(ConfigError::from)?,
            256,
        ),
    };
    Ok(render_quiver(&rows, &marks, &outline))
}

pub fn write_plot(svg: &str, out: &Path) -> Result<PathBuf, AppError> {
    write(out.to_path_buf(), svg.as_bytes())
}
