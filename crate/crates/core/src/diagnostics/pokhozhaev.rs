//! Pokhozhaev-type identities on `B_r(x0)` intersected with the domain,
//! with the PDE residual term that makes them hold for any smooth field.

use serde::{Deserialize, Serialize};

use super::smooth::SmoothField;
use super::DiagnosticsError;
use crate::fields::{EnergyParams, Penalty};
use crate::geometry::DomainGeometry;
use crate::quadrature::GaussLegendre;
use crate::scalar::{Mat2, Scalar, Vec2};
use crate::vortex::InteriorArc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResult<T> {
    /// Boundary integral.
    pub lhs: T,
    /// Interior integral.
    pub rhs: T,
    /// Interior integral of `<R(u), psi . grad u>` with `R` the residual of
    /// the Euler-Lagrange equation; zero when `u` has no second derivatives.
    pub residual_term: T,
    pub mismatch: T,
    pub quadrature_n: usize,
}

/// Writes rows `check,lhs,rhs,residual_term,mismatch,n`.
pub fn write_identity_csv<T: Scalar, W: std::io::Write>(
    rows: &[(String, IdentityResult<T>)],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "check,lhs,rhs,residual_term,mismatch,n")?;
    for (name, r) in rows {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            name,
            r.lhs.to_f64_lossy(),
            r.rhs.to_f64_lossy(),
            r.residual_term.to_f64_lossy(),
            r.mismatch.to_f64_lossy(),
            r.quadrature_n
        )?;
    }
    Ok(())
}

pub fn pokhozhaev_div<T: Scalar, U: SmoothField<T>, P: SmoothField<T>>(
    u: &U,
    p: &EnergyParams<T>,
    geom: &DomainGeometry<T>,
    center: Vec2<T>,
    r: T,
    psi: &P,
    quadrature_n: usize,
) -> Result<IdentityResult<T>, DiagnosticsError> {
    identity(u, p.eps, p.k, Penalty::Div, geom, center, r, psi, quadrature_n)
}

pub fn pokhozhaev_curl<T: Scalar, U: SmoothField<T>, P: SmoothField<T>>(
    u: &U,
    p: &EnergyParams<T>,
    geom: &DomainGeometry<T>,
    center: Vec2<T>,
    r: T,
    psi: &P,
    quadrature_n: usize,
) -> Result<IdentityResult<T>, DiagnosticsError> {
    identity(u, p.eps, p.k, Penalty::Curl, geom, center, r, psi, quadrature_n)
}

fn penalty_density<T: Scalar>(j: &Mat2<T>, penalty: Penalty) -> T {
    match penalty {
        Penalty::Div => j.m[0][0] + j.m[1][1],
        Penalty::Curl => j.m[1][0] - j.m[0][1],
    }
}

/// Energy density `e(u)` from the value and Jacobian.
pub fn energy_density<T: Scalar>(u: Vec2<T>, j: &Mat2<T>, eps: T, k: T, penalty: Penalty) -> T {
    let pen = penalty_density(j, penalty);
    let w = T::one() - u.norm_sq();
    T::lit(0.5) * j.frobenius_sq() + T::lit(0.5) * k * pen * pen + w * w / (T::lit(4.0) * eps * eps)
}

struct Densities<'a, T, U, P> {
    u: &'a U,
    psi: &'a P,
    eps: T,
    k: T,
    penalty: Penalty,
}

impl<T: Scalar, U: SmoothField<T>, P: SmoothField<T>> Densities<'_, T, U, P> {
    fn boundary(&self, x: Vec2<T>, n: Vec2<T>) -> T {
        let j = self.u.jacobian(x);
        let uv = self.u.value(x);
        let psi = self.psi.value(x);
        let e = energy_density(uv, &j, self.eps, self.k, self.penalty);
        let pen = penalty_density(&j, self.penalty);
        let dir = match self.penalty {
            Penalty::Div => n,
            Penalty::Curl => n.perp(),
        };
        let w = j.apply(psi);
        e * psi.dot(n) - (j.apply(n) + dir * (self.k * pen)).dot(w)
    }

    /// (interior density, residual density)
    fn interior(&self, x: Vec2<T>) -> (T, T) {
        let j = self.u.jacobian(x);
        let uv = self.u.value(x);
        let psi = self.psi.value(x);
        let dpsi = self.psi.jacobian(x);
        let e = energy_density(uv, &j, self.eps, self.k, self.penalty);
        let pen = penalty_density(&j, self.penalty);
        let mut stress = T::zero();
        for jj in 0..2 {
            for l in 0..2 {
                let g = j.m[0][jj] * j.m[0][l] + j.m[1][jj] * j.m[1][l];
                stress += dpsi.m[l][jj] * g;
            }
        }
        // <d_i psi, grad u^c>
        let pair = |i: usize, c: usize| dpsi.m[0][i] * j.m[c][0] + dpsi.m[1][i] * j.m[c][1];
        let cross = match self.penalty {
            Penalty::Div => pair(0, 0) + pair(1, 1),
            Penalty::Curl => pair(0, 1) - pair(1, 0),
        };
        let interior = e * dpsi.trace() - stress - self.k * pen * cross;
        let residual = if self.u.has_second_derivatives() {
            let h = self.u.hessian(x);
            let lap = Vec2::new(h[0].trace(), h[1].trace());
            let grad_pen = match self.penalty {
                Penalty::Div => Vec2::new(h[0].m[0][0] + h[1].m[1][0], h[0].m[0][1] + h[1].m[1][1]),
                Penalty::Curl => {
                    let g = Vec2::new(h[1].m[0][0] - h[0].m[1][0], h[1].m[0][1] - h[0].m[1][1]);
                    g.perp()
                }
            };
            let pot = uv * ((T::one() - uv.norm_sq()) / (self.eps * self.eps));
            let res = -lap - grad_pen * self.k - pot;
            res.dot(j.apply(psi))
        } else {
            T::zero()
        };
        (interior, residual)
    }
}

/// How close to the curve a centre must be to count as a boundary point.
const ON_CURVE: f64 = 1e-9;

#[allow(clippy::too_many_arguments)]
fn identity<T: Scalar, U: SmoothField<T>, P: SmoothField<T>>(
    u: &U,
    eps: T,
    k: T,
    penalty: Penalty,
    geom: &DomainGeometry<T>,
    center: Vec2<T>,
    r: T,
    psi: &P,
    n: usize,
) -> Result<IdentityResult<T>, DiagnosticsError> {
    if n < 8 {
        return Err(DiagnosticsError::QuadratureUnderflow { n });
    }
    let gl = GaussLegendre::<T>::new(n);
    let d = Densities {
        u,
        psi,
        eps,
        k,
        penalty,
    };
    let theta = geom.closest_theta(center);
    let foot = geom.point_at_theta(theta);
    let dist = foot.dist(center);

    let mut lhs = T::zero();
    let mut rhs = T::zero();
    let mut res = T::zero();
    let mut sector = |phi0: T, phi1: T, radius: &dyn Fn(T) -> T| {
        for (phi, wp) in gl.mapped(phi0, phi1) {
            let e = Vec2::from_angle(phi);
            let rmax = radius(phi);
            for (rho, wr) in gl.mapped(T::zero(), rmax) {
                let (a, b) = d.interior(center + e * rho);
                let w = wp * wr * rho;
                rhs += w * a;
                res += w * b;
            }
        }
    };

    if dist <= T::lit(ON_CURVE) {
        let s0 = geom.s_of_theta(theta);
        let arc = InteriorArc::new(geom, s0, r, r).ok_or(DiagnosticsError::ArcNotFound)?;
        let (_, tau) = geom.frame(s0);
        let phi_in = tau.angle();
        let mut phi_a = arc.phi_a;
        while phi_a < phi_in {
            phi_a += T::TAU();
        }
        while phi_a >= phi_in + T::TAU() {
            phi_a -= T::TAU();
        }
        let phi_b = phi_a + arc.sweep;
        let phi_out = phi_in + T::PI();
        if phi_b > phi_out {
            return Err(DiagnosticsError::BallNotStarShaped);
        }
        let chord = |phi: T| exit_distance(geom, foot, Vec2::from_angle(phi), r);
        sector(phi_in, phi_a, &chord);
        sector(phi_a, phi_b, &|_| r);
        sector(phi_b, phi_out, &chord);
        for (phi, w) in gl.mapped(phi_a, phi_b) {
            let e = Vec2::from_angle(phi);
            lhs += w * r * d.boundary(foot + e * r, e);
        }
        for (s, w) in gl.mapped(arc.s_b, arc.s_a) {
            let (nrm, _) = geom.frame(s);
            lhs += w * d.boundary(geom.boundary_point(s), nrm);
        }
    } else {
        if r >= dist || !geom.contains(center) {
            return Err(DiagnosticsError::BallLeavesDomain);
        }
        sector(T::zero(), T::TAU(), &|_| r);
        for (phi, w) in gl.mapped(T::zero(), T::TAU()) {
            let e = Vec2::from_angle(phi);
            lhs += w * r * d.boundary(center + e * r, e);
        }
    }
    Ok(IdentityResult {
        lhs,
        rhs,
        residual_term: res,
        mismatch: (lhs - rhs - res).abs(),
        quadrature_n: n,
    })
}

/// Distance from the boundary point `x0` along the inward ray `e` to where
/// the ray leaves the domain, capped at `cap`.
fn exit_distance<T: Scalar>(geom: &DomainGeometry<T>, x0: Vec2<T>, e: Vec2<T>, cap: T) -> T {
    if geom.contains(x0 + e * cap) {
        return cap;
    }
    let (mut lo, mut hi) = (T::zero(), cap);
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if geom.contains(x0 + e * mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * T::lit(0.5)
}

/// Numerical constants in the three properties required of the boundary
/// vector field: tangency on the curve, `|X - (x - x0)| <= C |x - x0|^2`
/// and `|DX - I| <= C |x - x0|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XFieldCheck<T> {
    pub max_normal_on_curve: T,
    pub bound_constant: T,
    pub derivative_constant: T,
}

/// Samples `x_field` on `B_r(x0)` intersected with the domain, `x0` at
/// arclength `s0`.
pub fn check_x_field<T: Scalar, X: SmoothField<T>>(
    x_field: &X,
    geom: &DomainGeometry<T>,
    s0: T,
    r: T,
    samples: usize,
) -> XFieldCheck<T> {
    let x0 = geom.boundary_point(s0);
    let mut out = XFieldCheck {
        max_normal_on_curve: T::zero(),
        bound_constant: T::zero(),
        derivative_constant: T::zero(),
    };
    let m = samples.max(8);
    for i in 0..=m {
        let t = T::from_usize_lossy(i) / T::from_usize_lossy(m);
        let s = s0 + (t * T::lit(2.0) - T::one()) * r;
        let (n, _) = geom.frame(s);
        let xv = x_field.value(geom.boundary_point(s));
        out.max_normal_on_curve = out.max_normal_on_curve.max(xv.dot(n).abs());
    }
    let (_, tau) = geom.frame(s0);
    for i in 1..=m {
        for j in 1..m {
            let rho = r * T::from_usize_lossy(i) / T::from_usize_lossy(m);
            let phi = tau.angle() + T::PI() * T::from_usize_lossy(j) / T::from_usize_lossy(m);
            let x = x0 + Vec2::from_angle(phi) * rho;
            if !geom.contains(x) {
                continue;
            }
            let d = x - x0;
            let dn = d.norm();
            let xv = x_field.value(x);
            out.bound_constant = out.bound_constant.max((xv - d).norm() / (dn * dn));
            let dx = x_field.jacobian(x).sub(&Mat2::identity());
            let worst = dx.m.iter().flatten().fold(T::zero(), |a, b| a.max(b.abs()));
            out.derivative_constant = out.derivative_constant.max(worst / dn);
        }
    }
    out
}
