//! Reflection extension across the boundary and ellipticity of the
//! extended operator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DiagnosticsError;
use crate::fields::VectorField;
use crate::geometry::DomainGeometry;
use crate::mesh::{ring_start, TriMesh};
use crate::scalar::{Scalar, Vec2};

/// Extends `u` to the collar vertices by `U(x) = A(x) u(R(x))`, with `R`
/// the reflection and `A = I - 2 n n^T`. Domain values are copied.
pub fn extend_field<T: Scalar>(
    u: &VectorField<T>,
    mesh: &TriMesh<T>,
    geom: &DomainGeometry<T>,
) -> Result<VectorField<T>, DiagnosticsError> {
    let collar = mesh.collar.as_ref().ok_or(DiagnosticsError::MissingCollar)?;
    if u.len() < mesh.domain_vertices {
        return Err(DiagnosticsError::FieldTooShort {
            expected: mesh.domain_vertices,
            got: u.len(),
        });
    }
    let mut values = vec![Vec2::zero(); mesh.vertex_count()];
    values[..mesh.domain_vertices].copy_from_slice(&u.values[..mesh.domain_vertices]);
    for &(inner, outer) in &collar.pairs {
        let a = geom.reflection_matrix(mesh.vertices[outer])?;
        values[outer] = a.apply(u.values[inner]);
    }
    Ok(VectorField::new(values))
}

/// Largest `|U(exterior) - U(interior)|` over collar pairs whose interior
/// vertex lies on the ring next to the boundary.
pub fn extension_jump<T: Scalar>(ext: &VectorField<T>, mesh: &TriMesh<T>) -> Result<T, DiagnosticsError> {
    let collar = mesh.collar.as_ref().ok_or(DiagnosticsError::MissingCollar)?;
    let ring = ring_start(mesh.rings - 1)..ring_start(mesh.rings);
    Ok(collar
        .pairs
        .iter()
        .filter(|(i, _)| ring.contains(i))
        .map(|&(i, o)| ext.values[o].dist(ext.values[i]))
        .fold(T::zero(), T::max))
}

/// Largest violation of `U.tau = u.tau`, `U.n = -u.n` over all collar
/// pairs, with the frame taken at the exterior point's foot.
pub fn collar_symmetry_error<T: Scalar>(
    u: &VectorField<T>,
    ext: &VectorField<T>,
    mesh: &TriMesh<T>,
    geom: &DomainGeometry<T>,
) -> Result<T, DiagnosticsError> {
    let collar = mesh.collar.as_ref().ok_or(DiagnosticsError::MissingCollar)?;
    let mut worst = T::zero();
    for &(i, o) in &collar.pairs {
        let y = geom.cartesian_to_tubular(mesh.vertices[o])?;
        let (n, t) = geom.frame(y.y1);
        let even = (ext.values[o].dot(t) - u.values[i].dot(t)).abs();
        let odd = (ext.values[o].dot(n) + u.values[i].dot(n)).abs();
        worst = worst.max(even).max(odd);
    }
    Ok(worst)
}

/// `sum A^{k,m}_{i,j} xi_k xi_m eta_i eta_j` for the extended operator,
/// with `det` the chart Jacobian and `f = 1 + y2 kappa`.
pub fn lh_form<T: Scalar>(det: T, f: T, k: T, xi: Vec2<T>, eta: Vec2<T>) -> T {
    let one = T::one();
    let (x1, x2, e1, e2) = (xi.x, xi.y, eta.x, eta.y);
    det * (x1 * x1 * e1 * e1 / (f * f)
        + (one + k) * x2 * x2 * e1 * e1
        + (one + k) * x1 * x1 * e2 * e2 / (f * f)
        + x2 * x2 * e2 * e2
        + T::lit(2.0) * k * x1 * x2 * e1 * e2 / f)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityCheck<T> {
    pub min_form: T,
    pub analytic_bound: T,
    /// Smallest sampled chart Jacobian.
    pub c0: T,
    pub samples: usize,
}

impl<T: Scalar> EllipticityCheck<T> {
    pub fn holds(&self) -> bool {
        self.min_form >= self.analytic_bound
    }
}

/// Samples the form at random exterior tube points and random unit
/// `xi`, `eta`, and compares with `C0 / (1 + r1 |kappa|_inf)^2`.
pub fn legendre_hadamard<T: Scalar>(geom: &DomainGeometry<T>, k: T, samples: usize, seed: u64) -> EllipticityCheck<T> {
    let samples = samples.max(100);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = geom.arclength_total().to_f64_lossy();
    let r1 = geom.tubular_width();
    let mut min_form = T::infinity();
    let mut c0 = T::infinity();
    for _ in 0..samples {
        let y1 = T::lit(rng.gen_range(0.0..len));
        // exterior side of the tube
        let y2 = -r1 * T::lit(rng.gen_range(0.0..=1.0));
        let kappa = geom.curvature(y1);
        let det = (T::one() - y2 * kappa).abs();
        let f = T::one() + y2 * kappa;
        let xi = Vec2::from_angle(T::lit(rng.gen_range(0.0..std::f64::consts::TAU)));
        let eta = Vec2::from_angle(T::lit(rng.gen_range(0.0..std::f64::consts::TAU)));
        min_form = min_form.min(lh_form(det, f, k, xi, eta));
        c0 = c0.min(det);
    }
    let denom = T::one() + r1 * geom.max_abs_curvature();
    EllipticityCheck {
        min_form,
        analytic_bound: c0 / (denom * denom),
        c0,
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;
    use crate::mesh::{build_mesh, mirror_collar};

    #[test]
    fn form_on_the_curve() {
        let e1 = Vec2::new(1.0, 0.0);
        let e2 = Vec2::new(0.0, 1.0);
        assert_eq!(lh_form(1.0, 1.0, 1.0, e1, e1), 1.0);
        assert_eq!(lh_form(1.0, 1.0, 1.0, e2, e1), 2.0);
        assert_eq!(lh_form(1.0, 1.0, 4.0, e2, e1), 5.0);
    }

    #[test]
    fn sampled_minimum_respects_bound() {
        for shape in ["disk", "ellipse:1,0.6", "peanut"] {
            let g = DomainGeometry::<f64>::new(shape.parse().unwrap()).unwrap();
            for k in [0.5, 1.0, 4.0] {
                let chk = legendre_hadamard(&g, k, 10_000, 3);
                assert!(chk.holds(), "{shape} k={k}: {chk:?}");
                assert!(chk.analytic_bound > 0.0);
            }
        }
    }

    #[test]
    fn collar_symmetry() {
        let g = DomainGeometry::<f64>::new(Shape::UnitDisk).unwrap();
        let m = build_mesh(&g, 8).unwrap();
        let c = mirror_collar(&g, &m, 0.25).unwrap();
        let tau = VectorField::from_fn(&c, |x: Vec2<f64>| x.perp() / x.norm().max(1e-12));
        let ext = extend_field(&tau, &c, &g).unwrap();
        for &(i, o) in &c.collar.as_ref().unwrap().pairs {
            let y = g.cartesian_to_tubular(c.vertices[o]).unwrap();
            let (n, t) = g.frame(y.y1);
            assert!((ext.values[o].dot(t) - tau.values[i].dot(t)).abs() < 1e-14);
            assert!((ext.values[o].dot(n) + tau.values[i].dot(n)).abs() < 1e-14);
            let nrm = VectorField::constant(c.vertex_count(), n);
            let en = extend_field(&nrm, &c, &g).unwrap();
            assert!((en.values[o].dot(n) + 1.0).abs() < 1e-12);
        }
        assert!(matches!(
            extend_field(&tau, &m, &g),
            Err(DiagnosticsError::MissingCollar)
        ));
    }

    #[test]
    fn extension_is_continuous_under_refinement() {
        let g = DomainGeometry::<f64>::new(Shape::UnitDisk).unwrap();
        let jump = |rings: usize| {
            let m = build_mesh(&g, rings).unwrap();
            let c = mirror_collar(&g, &m, 0.25).unwrap();
            // tangential on the circle, with a normal part growing inward
            let u = VectorField::from_fn(&c, |x: Vec2<f64>| x.perp() + x * (1.0 - x.norm()));
            let ext = extend_field(&u, &c, &g).unwrap();
            extension_jump(&ext, &c).unwrap()
        };
        let (a, b) = (jump(8), jump(32));
        assert!(b < a / 2.0, "{a} {b}");
    }
}
