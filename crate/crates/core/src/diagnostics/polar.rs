//! Radial energy functional, phase decomposition near boundary points and
//! the Div/Curl duality.

use serde::{Deserialize, Serialize};

use super::pokhozhaev::energy_density;
use super::smooth::SmoothField;
use super::DiagnosticsError;
use crate::fields::{energy, EnergyParams, FieldError, Penalty, VectorField};
use crate::geometry::DomainGeometry;
use crate::mesh::TriMesh;
use crate::scalar::{wrap_angle, Scalar, Vec2};
use crate::vortex::{BoundaryCurve, InteriorArc};

/// `r` times the integral of the energy density over the part of the
/// circle `|x - center| = r` inside the domain.
pub fn radial_energy<T: Scalar, U: SmoothField<T>>(
    u: &U,
    p: &EnergyParams<T>,
    geom: &DomainGeometry<T>,
    center: Vec2<T>,
    r: T,
    samples: usize,
) -> Result<T, DiagnosticsError> {
    let n = samples.max(64);
    let dphi = T::TAU() / T::from_usize_lossy(n);
    let mut sum = T::zero();
    let mut hits = 0;
    for i in 0..n {
        let phi = dphi * (T::from_usize_lossy(i) + T::lit(0.5));
        let x = center + Vec2::from_angle(phi) * r;
        if !geom.contains(x) {
            continue;
        }
        hits += 1;
        sum += energy_density(u.value(x), &u.jacobian(x), p.eps, p.k, p.penalty);
    }
    if hits == 0 {
        return Err(DiagnosticsError::EmptyArc);
    }
    Ok(r * sum * r * dphi)
}

/// `|E_curl(u) - E_div(u^perp)|`.
pub fn duality_gap<T: Scalar>(u: &VectorField<T>, p: &EnergyParams<T>, mesh: &TriMesh<T>) -> Result<T, FieldError> {
    let curl = EnergyParams {
        penalty: Penalty::Curl,
        ..p.clone()
    };
    let div = EnergyParams {
        penalty: Penalty::Div,
        ..p.clone()
    };
    let a = energy(u, &curl, mesh)?.total;
    let b = energy(&u.perp(), &div, mesh)?.total;
    Ok((a - b).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarRecord<T> {
    pub r: T,
    pub mean_cos2: T,
    pub mean_sin2: T,
    /// Line integral of `(1 - |u|^2)^2 / (4 eps^2)` over the arc.
    pub potential: T,
}

/// Writes `u = |u| e^{i(theta + psi)}` about the boundary point at `s_q`,
/// with `theta` the polar angle about it, and averages `cos^2 psi` and
/// `sin^2 psi` over interior arcs at `radii` radii from `r_inner` to
/// `r_outer`.
#[allow(clippy::too_many_arguments)]
pub fn polar_diagnostics<T: Scalar, U: SmoothField<T>, C: BoundaryCurve<T>>(
    u: &U,
    curve: &C,
    s_q: T,
    r_inner: T,
    r_outer: T,
    radii: usize,
    eps: T,
    h: T,
) -> Result<Vec<PolarRecord<T>>, DiagnosticsError> {
    let q = curve.point(s_q);
    let m = radii.max(1);
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let r = if m == 1 {
            r_inner
        } else {
            r_inner + (r_outer - r_inner) * T::from_usize_lossy(i) / T::from_usize_lossy(m - 1)
        };
        let arc = InteriorArc::new(curve, s_q, r, h).ok_or(DiagnosticsError::ArcNotFound)?;
        let (mut c2, mut s2, mut pot) = (T::zero(), T::zero(), T::zero());
        let count = T::from_usize_lossy(arc.points.len());
        for &x in &arc.points {
            let v = u.value(x);
            let modulus = v.norm();
            if modulus < T::lit(0.1) {
                return Err(DiagnosticsError::DegenerateOnAnnulus {
                    modulus: modulus.to_f64_lossy(),
                });
            }
            let psi = wrap_angle(v.angle() - (x - q).angle());
            c2 += psi.cos().powi(2);
            s2 += psi.sin().powi(2);
            let w = T::one() - v.norm_sq();
            pot += w * w;
        }
        let ds = arc.sweep * r / (count - T::one());
        out.push(PolarRecord {
            r,
            mean_cos2: c2 / count,
            mean_sin2: s2 / count,
            potential: pot * ds / (T::lit(4.0) * eps * eps),
        });
    }
    Ok(out)
}
