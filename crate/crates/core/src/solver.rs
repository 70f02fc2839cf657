//! Energy minimization over the constrained discrete class.
//!
//! The admissible set (tangential anchoring or Dirichlet data) is a linear
//! subspace of the nodal values, so constrained gradients stay in it and
//! every accepted step is followed by a re-projection against drift.
//! Steps are accepted by Armijo backtracking, which makes the total energy
//! non-increasing within a stage.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{apply_bc, constrain_gradient, Assembly, EnergyBreakdown, EnergyParams, FieldError, VectorField};
use crate::geometry::DomainGeometry;
use crate::mesh::TriMesh;
use crate::scalar::{Scalar, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("line search failed after {halvings} halvings at eps = {eps}, iteration {iteration}")]
    Diverged {
        eps: f64,
        iteration: usize,
        halvings: usize,
    },
    #[error("every start diverged; last error: {0}")]
    AllDiverged(String),
    #[error("continuation start eps {start} is below the target {target}")]
    BadSchedule { start: f64, target: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Starting configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind<T> {
    /// Boundary tangent carried inward along rays from the star centre,
    /// cut off over a core of width eps at the centre.
    TangentHedgehog,
    /// Independent uniformly random unit vectors.
    RandomUnit(u64),
    /// `(x - c)^perp / |x - c|` with a core of width eps at `c`.
    InteriorVortex([T; 2]),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Projected steepest descent; each trial step starts at 1.3x the last
    /// accepted one.
    GradientDescent,
    /// Limited-memory BFGS on the admissible subspace.
    Lbfgs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveSchedule<T> {
    pub eps_start: T,
    pub eps_target: T,
    pub eps_factor: T,
    pub max_iters_per_stage: usize,
    /// Stopping threshold on the constrained gradient norm; `None` means
    /// `1e-6 * sqrt(vertex count)`.
    pub grad_tol: Option<T>,
    pub armijo_c: T,
    pub step_init: T,
    pub seed: u64,
    pub method: Method,
    pub lbfgs_memory: usize,
    /// Record every n-th iteration in the trace (the last one always).
    pub trace_stride: usize,
}

impl<T: Scalar> SolveSchedule<T> {
    /// Single stage at `eps`.
    pub fn single(eps: T) -> Self {
        Self {
            eps_start: eps,
            eps_target: eps,
            eps_factor: T::lit(0.7),
            max_iters_per_stage: 20_000,
            grad_tol: None,
            armijo_c: T::lit(1e-4),
            step_init: T::lit(0.1),
            seed: 0,
            method: Method::Lbfgs,
            lbfgs_memory: 8,
            trace_stride: 10,
        }
    }

    /// Continuation from `eps_start` down to `eps_target` by `eps_factor`.
    pub fn continuation(eps_start: T, eps_target: T, eps_factor: T) -> Self {
        Self {
            eps_start,
            eps_target,
            eps_factor,
            ..Self::single(eps_target)
        }
    }

    pub fn grad_tol_for(&self, vertices: usize) -> T {
        self.grad_tol
            .unwrap_or_else(|| T::lit(1e-6) * T::from_usize_lossy(vertices).sqrt())
    }

    /// The eps ladder `eps_start * factor^m`, ending exactly at the target.
    pub fn eps_ladder(&self) -> Vec<T> {
        let mut out = Vec::new();
        let mut e = self.eps_start;
        let slack = T::one() + T::lit(1e-9);
        while e > self.eps_target * slack && out.len() < 1000 {
            out.push(e);
            e = e * self.eps_factor;
        }
        out.push(self.eps_target);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord<T> {
    pub iter: usize,
    pub energy: EnergyBreakdown<T>,
    pub grad_norm: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord<T> {
    pub eps: T,
    pub iterations: usize,
    pub energy: EnergyBreakdown<T>,
    pub grad_norm: T,
    pub converged: bool,
    /// Largest energy change over accepted steps (never positive).
    pub max_accepted_increase: T,
    pub wall_time_s: f64,
    pub history: Vec<IterRecord<T>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace<T> {
    pub stages: Vec<StageRecord<T>>,
}

impl<T: Scalar> SolveTrace<T> {
    pub fn last(&self) -> Option<&StageRecord<T>> {
        self.stages.last()
    }

    pub fn converged(&self) -> bool {
        self.stages.last().is_some_and(|s| s.converged)
    }

    pub fn final_energy(&self) -> Option<EnergyBreakdown<T>> {
        self.stages.last().map(|s| s.energy)
    }

    /// CSV `stage,eps,iter,total,dirichlet,penalty,potential,gradnorm`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "stage,eps,iter,total,dirichlet,penalty,potential,gradnorm")?;
        for (si, s) in self.stages.iter().enumerate() {
            for r in &s.history {
                writeln!(
                    w,
                    "{},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    si,
                    s.eps.to_f64_lossy(),
                    r.iter,
                    r.energy.total.to_f64_lossy(),
                    r.energy.dirichlet.to_f64_lossy(),
                    r.energy.penalty.to_f64_lossy(),
                    r.energy.potential.to_f64_lossy(),
                    r.grad_norm.to_f64_lossy()
                )?;
            }
        }
        Ok(())
    }
}

/// Builds a starting field and enforces the boundary condition of `p`.
pub fn initial_field<T: Scalar>(
    kind: &InitialKind<T>,
    mesh: &TriMesh<T>,
    geom: &DomainGeometry<T>,
    p: &EnergyParams<T>,
    core: T,
) -> VectorField<T> {
    let c = geom.center();
    let mut u = match kind {
        InitialKind::TangentHedgehog => VectorField::new(
            mesh.vertices
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    if let Some(b) = mesh.boundary_of(i) {
                        return b.tangent;
                    }
                    let d = x - c;
                    let r = d.norm();
                    if r == T::zero() {
                        return Vec2::zero();
                    }
                    let (_, tau) = geom.frame_at_theta(d.angle());
                    tau * (r / core).min(T::one())
                })
                .collect(),
        ),
        InitialKind::RandomUnit(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            VectorField::new(
                (0..mesh.vertex_count())
                    .map(|_| {
                        let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                        Vec2::from_angle(T::lit(a))
                    })
                    .collect(),
            )
        }
        InitialKind::InteriorVortex([cx, cy]) => {
            let center = Vec2::new(*cx, *cy);
            VectorField::from_fn(mesh, |x| mollified_vortex(x - center, core))
        }
    };
    apply_bc(&mut u, &p.bc, mesh);
    u
}

/// `d^perp / sqrt(|d|^2 + core^2)`: degree-one vortex with a smooth core.
pub fn mollified_vortex<T: Scalar>(d: Vec2<T>, core: T) -> Vec2<T> {
    d.perp() / (d.norm_sq() + core * core).sqrt()
}

struct Objective<'a, T> {
    asm: Assembly<T>,
    p: &'a EnergyParams<T>,
    mesh: &'a TriMesh<T>,
}

impl<T: Scalar> Objective<'_, T> {
    fn eval(&self, u: &[Vec2<T>], g: &mut [Vec2<T>]) -> EnergyBreakdown<T> {
        let e = self.asm.evaluate(u, self.p.eps, self.p.k, self.p.penalty, Some(g));
        constrain_gradient(g, &self.p.bc, self.mesh);
        e
    }

    fn value(&self, u: &[Vec2<T>]) -> EnergyBreakdown<T> {
        self.asm.evaluate(u, self.p.eps, self.p.k, self.p.penalty, None)
    }
}

fn dot<T: Scalar>(a: &[Vec2<T>], b: &[Vec2<T>]) -> T {
    a.iter().zip(b).map(|(x, y)| x.dot(*y)).sum()
}

const MAX_HALVINGS: usize = 60;

/// Minimizes the energy at `p.eps` starting from `u0`.
pub fn minimize<T: Scalar>(
    u0: &VectorField<T>,
    p: &EnergyParams<T>,
    sched: &SolveSchedule<T>,
    mesh: &TriMesh<T>,
) -> Result<(VectorField<T>, SolveTrace<T>), SolverError> {
    u0.check_aligned(mesh)?;
    let mut u = u0.clone();
    apply_bc(&mut u, &p.bc, mesh);
    let stage = run_stage(&mut u, p, sched, mesh)?;
    Ok((u, SolveTrace { stages: vec![stage] }))
}

fn run_stage<T: Scalar>(
    u: &mut VectorField<T>,
    p: &EnergyParams<T>,
    sched: &SolveSchedule<T>,
    mesh: &TriMesh<T>,
) -> Result<StageRecord<T>, SolverError> {
    let start = Instant::now();
    let n = u.len();
    let obj = Objective {
        asm: Assembly::new(mesh),
        p,
        mesh,
    };
    let tol = sched.grad_tol_for(n);
    let stride = sched.trace_stride.max(1);
    let mut g = vec![Vec2::zero(); n];
    let mut e = obj.eval(&u.values, &mut g);
    let mut gnorm = dot(&g, &g).sqrt();
    let mut history = vec![IterRecord {
        iter: 0,
        energy: e,
        grad_norm: gnorm,
    }];
    let mut max_increase = T::neg_infinity();
    let mut step = sched.step_init;
    let mut trial = vec![Vec2::zero(); n];
    let mut g_new = vec![Vec2::zero(); n];
    let mut dir = vec![Vec2::zero(); n];
    let mut mem: LbfgsMemory<T> = LbfgsMemory::new(sched.lbfgs_memory.max(1));
    let mut iter = 0;
    let mut converged = gnorm <= tol;

    while !converged && iter < sched.max_iters_per_stage {
        iter += 1;
        let use_quasi_newton = sched.method == Method::Lbfgs && !mem.is_empty();
        if use_quasi_newton {
            mem.direction(&g, &mut dir);
            constrain_gradient(&mut dir, &p.bc, mesh);
        } else {
            dir.iter_mut().zip(&g).for_each(|(d, gi)| *d = -*gi);
        }
        let mut slope = dot(&g, &dir);
        if !(slope < T::zero()) {
            // not a descent direction: fall back to steepest descent
            mem.clear();
            dir.iter_mut().zip(&g).for_each(|(d, gi)| *d = -*gi);
            slope = dot(&g, &dir);
        }
        let mut alpha = match sched.method {
            Method::Lbfgs if use_quasi_newton => T::one(),
            Method::Lbfgs => sched.step_init.min(T::one() / gnorm.max(T::lit(1e-300))),
            Method::GradientDescent => step,
        };
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            for ((t, &ui), &di) in trial.iter_mut().zip(&u.values).zip(&dir) {
                *t = ui + di * alpha;
            }
            let et = obj.value(&trial);
            if et.total <= e.total + sched.armijo_c * alpha * slope {
                accepted = Some(et);
                break;
            }
            alpha = alpha * T::lit(0.5);
        }
        let Some(_) = accepted else {
            if use_quasi_newton {
                // retry this iteration with a steepest-descent step
                mem.clear();
                iter -= 1;
                continue;
            }
            if gnorm <= T::lit(100.0) * tol {
                // stalled at rounding level just above the tolerance
                break;
            }
            return Err(SolverError::Diverged {
                eps: p.eps.to_f64_lossy(),
                iteration: iter,
                halvings: MAX_HALVINGS,
            });
        };
        let mut next = VectorField::new(std::mem::take(&mut trial));
        apply_bc(&mut next, &p.bc, mesh);
        let e_new = obj.eval(&next.values, &mut g_new);
        max_increase = max_increase.max(e_new.total - e.total);
        if sched.method == Method::Lbfgs {
            let s: Vec<Vec2<T>> = next.values.iter().zip(&u.values).map(|(a, b)| *a - *b).collect();
            let y: Vec<Vec2<T>> = g_new.iter().zip(&g).map(|(a, b)| *a - *b).collect();
            mem.push(s, y);
        }
        trial = std::mem::replace(&mut u.values, next.values);
        std::mem::swap(&mut g, &mut g_new);
        e = e_new;
        gnorm = dot(&g, &g).sqrt();
        step = alpha * T::lit(1.3);
        converged = gnorm <= tol;
        if iter % stride == 0 || converged || iter == sched.max_iters_per_stage {
            history.push(IterRecord {
                iter,
                energy: e,
                grad_norm: gnorm,
            });
        }
    }
    if history.last().map(|r| r.iter) != Some(iter) {
        history.push(IterRecord {
            iter,
            energy: e,
            grad_norm: gnorm,
        });
    }
    Ok(StageRecord {
        eps: p.eps,
        iterations: iter,
        energy: e,
        grad_norm: gnorm,
        converged,
        max_accepted_increase: if max_increase.is_finite() {
            max_increase
        } else {
            T::zero()
        },
        wall_time_s: start.elapsed().as_secs_f64(),
        history,
    })
}

struct LbfgsMemory<T> {
    cap: usize,
    s: Vec<Vec<Vec2<T>>>,
    y: Vec<Vec<Vec2<T>>>,
    rho: Vec<T>,
}

impl<T: Scalar> LbfgsMemory<T> {
    fn new(cap: usize) -> Self {
        Self {
            cap,
            s: Vec::new(),
            y: Vec::new(),
            rho: Vec::new(),
        }
    }

    fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    fn clear(&mut self) {
        self.s.clear();
        self.y.clear();
        self.rho.clear();
    }

    fn push(&mut self, s: Vec<Vec2<T>>, y: Vec<Vec2<T>>) {
        let sy = dot(&s, &y);
        // skip pairs that would break positive definiteness
        if !(sy > T::lit(1e-12) * dot(&y, &y).sqrt() * dot(&s, &s).sqrt()) {
            return;
        }
        if self.s.len() == self.cap {
            self.s.remove(0);
            self.y.remove(0);
            self.rho.remove(0);
        }
        self.rho.push(T::one() / sy);
        self.s.push(s);
        self.y.push(y);
    }

    /// Two-loop recursion: `dir = -H g`.
    fn direction(&self, g: &[Vec2<T>], dir: &mut [Vec2<T>]) {
        dir.copy_from_slice(g);
        let m = self.s.len();
        let mut alpha = vec![T::zero(); m];
        for i in (0..m).rev() {
            let a = self.rho[i] * dot(&self.s[i], dir);
            alpha[i] = a;
            dir.iter_mut().zip(&self.y[i]).for_each(|(d, y)| *d -= *y * a);
        }
        let last = m - 1;
        let gamma = dot(&self.s[last], &self.y[last]) / dot(&self.y[last], &self.y[last]);
        dir.iter_mut().for_each(|d| *d = *d * gamma);
        for i in 0..m {
            let b = self.rho[i] * dot(&self.y[i], dir);
            let coef = alpha[i] - b;
            dir.iter_mut().zip(&self.s[i]).for_each(|(d, s)| *d += *s * coef);
        }
        dir.iter_mut().for_each(|d| *d = -*d);
    }
}

/// Solves the eps ladder of `sched`, warm-starting each stage.
pub fn continuation<T: Scalar>(
    kind: &InitialKind<T>,
    p_final: &EnergyParams<T>,
    sched: &SolveSchedule<T>,
    mesh: &TriMesh<T>,
    geom: &DomainGeometry<T>,
) -> Result<(VectorField<T>, SolveTrace<T>), SolverError> {
    if sched.eps_start < p_final.eps {
        return Err(SolverError::BadSchedule {
            start: sched.eps_start.to_f64_lossy(),
            target: p_final.eps.to_f64_lossy(),
        });
    }
    let sched = SolveSchedule {
        eps_target: p_final.eps,
        ..sched.clone()
    };
    let ladder = sched.eps_ladder();
    let mut u = initial_field(kind, mesh, geom, p_final, ladder[0]);
    let mut trace = SolveTrace::default();
    for eps in ladder {
        let p = p_final.with_eps(eps);
        let stage = run_stage(&mut u, &p, &sched, mesh)?;
        trace.stages.push(stage);
    }
    Ok((u, trace))
}

/// Result of one start within a multistart run.
#[derive(Clone, Debug)]
pub struct StartOutcome<T> {
    pub kind: InitialKind<T>,
    pub result: Result<(VectorField<T>, SolveTrace<T>), SolverError>,
}

/// Runs every start and returns the lowest-energy result together with
/// the index of the winning start and all outcomes.
pub fn multistart_detailed<T: Scalar>(
    p: &EnergyParams<T>,
    sched: &SolveSchedule<T>,
    mesh: &TriMesh<T>,
    geom: &DomainGeometry<T>,
    starts: &[InitialKind<T>],
) -> Result<(usize, Vec<StartOutcome<T>>), SolverError> {
    let outcomes: Vec<StartOutcome<T>> = starts
        .iter()
        .map(|k| StartOutcome {
            kind: k.clone(),
            result: continuation(k, p, sched, mesh, geom),
        })
        .collect();
    let mut best: Option<(usize, T)> = None;
    let mut last_err = String::from("no starts given");
    for (i, o) in outcomes.iter().enumerate() {
        match &o.result {
            Ok((_, trace)) => {
                let e = trace.final_energy().map(|e| e.total).unwrap_or(T::infinity());
                if best.is_none_or(|(_, b)| e < b) {
                    best = Some((i, e));
                }
            }
            Err(err) => last_err = err.to_string(),
        }
    }
    match best {
        Some((i, _)) => Ok((i, outcomes)),
        None => Err(SolverError::AllDiverged(last_err)),
    }
}

/// Lowest-energy continuation result over `starts`.
pub fn multistart<T: Scalar>(
    p: &EnergyParams<T>,
    sched: &SolveSchedule<T>,
    mesh: &TriMesh<T>,
    geom: &DomainGeometry<T>,
    starts: &[InitialKind<T>],
) -> Result<(VectorField<T>, SolveTrace<T>), SolverError> {
    let (best, mut outcomes) = multistart_detailed(p, sched, mesh, geom, starts)?;
    outcomes.swap_remove(best).result
}
