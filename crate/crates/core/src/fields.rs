//! Piecewise-linear director fields and the two penalized Ginzburg–Landau
//! energies
//!
//! ```text
//! E(u) = 1/2 |grad u|^2 + k/2 (div u)^2 or k/2 (curl u)^2 + 1/(4 eps^2) (1 - |u|^2)^2
//! ```
//!
//! integrated with P1 elements (constant gradients per triangle) and a
//! vertex-lumped potential.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::DomainGeometry;
use crate::mesh::{PointLocator, TriMesh};
use crate::scalar::{Scalar, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("field has {got} values but the mesh has {expected} vertices")]
    MeshMismatch { expected: usize, got: usize },
    #[error("invalid energy parameters: {0}")]
    InvalidParams(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    Div,
    Curl,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCondition<T> {
    /// `<u, n> = 0` on the boundary.
    TangentialAnchor,
    /// Prescribed values, aligned with `mesh.boundary`.
    Dirichlet(Vec<Vec2<T>>),
}

impl<T: Scalar> BoundaryCondition<T> {
    /// Dirichlet data sampled from `g(point, normal, tangent)` at the
    /// boundary vertices.
    pub fn dirichlet_from<F>(mesh: &TriMesh<T>, g: F) -> Self
    where
        F: Fn(Vec2<T>, Vec2<T>, Vec2<T>) -> Vec2<T>,
    {
        BoundaryCondition::Dirichlet(
            mesh.boundary
                .iter()
                .map(|b| g(mesh.vertices[b.index], b.normal, b.tangent))
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyParams<T> {
    pub eps: T,
    pub k: T,
    pub penalty: Penalty,
    pub bc: BoundaryCondition<T>,
}

impl<T: Scalar> EnergyParams<T> {
    pub fn new(eps: T, k: T, penalty: Penalty, bc: BoundaryCondition<T>) -> Result<Self, FieldError> {
        if !(eps > T::zero()) || !eps.is_finite() {
            return Err(FieldError::InvalidParams(format!("eps must be positive, got {eps}")));
        }
        if !(k > T::zero()) || !k.is_finite() {
            return Err(FieldError::InvalidParams(format!("k must be positive, got {k}")));
        }
        Ok(Self { eps, k, penalty, bc })
    }

    pub fn tangential(eps: T, k: T, penalty: Penalty) -> Result<Self, FieldError> {
        Self::new(eps, k, penalty, BoundaryCondition::TangentialAnchor)
    }

    pub fn with_eps(&self, eps: T) -> Self {
        Self { eps, ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown<T> {
    pub dirichlet: T,
    pub penalty: T,
    pub potential: T,
    pub total: T,
}

impl<T: Scalar> EnergyBreakdown<T> {
    /// The Ginzburg–Landau part without the penalty.
    pub fn ginzburg_landau(&self) -> T {
        self.dirichlet + self.potential
    }
}

/// Per-vertex planar field on a mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField<T> {
    pub values: Vec<Vec2<T>>,
}

impl<T: Scalar> VectorField<T> {
    pub fn new(values: Vec<Vec2<T>>) -> Self {
        Self { values }
    }

    pub fn constant(n: usize, v: Vec2<T>) -> Self {
        Self { values: vec![v; n] }
    }

    pub fn from_fn<F: Fn(Vec2<T>) -> Vec2<T>>(mesh: &TriMesh<T>, f: F) -> Self {
        Self {
            values: mesh.vertices.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pointwise rotation by +90 degrees.
    pub fn perp(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| v.perp()).collect(),
        }
    }

    pub fn dot(&self, o: &Self) -> T {
        self.values.iter().zip(&o.values).map(|(a, b)| a.dot(*b)).sum()
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn max_modulus(&self) -> T {
        self.values.iter().map(|v| v.norm()).fold(T::zero(), T::max)
    }

    pub fn check_aligned(&self, mesh: &TriMesh<T>) -> Result<(), FieldError> {
        if self.values.len() != mesh.vertex_count() {
            return Err(FieldError::MeshMismatch {
                expected: mesh.vertex_count(),
                got: self.values.len(),
            });
        }
        Ok(())
    }

    /// P1 interpolant at `x`.
    pub fn eval(&self, mesh: &TriMesh<T>, loc: &PointLocator<'_, T>, x: Vec2<T>) -> Vec2<T> {
        match loc.locate(x) {
            Some((t, l)) => {
                let tri = mesh.triangles[t];
                self.values[tri[0]] * l[0] + self.values[tri[1]] * l[1] + self.values[tri[2]] * l[2]
            }
            None => Vec2::zero(),
        }
    }

    /// CSV with header `x,y,u1,u2` and 17 significant digits.
    pub fn write_csv<W: Write>(&self, mesh: &TriMesh<T>, mut w: W) -> io::Result<()> {
        writeln!(w, "x,y,u1,u2")?;
        for (p, u) in mesh.vertices.iter().zip(&self.values) {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                p.x.to_f64_lossy(),
                p.y.to_f64_lossy(),
                u.x.to_f64_lossy(),
                u.y.to_f64_lossy()
            )?;
        }
        Ok(())
    }
}

/// Per-triangle quantities of the P1 interpolant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleOps<T> {
    pub div: T,
    pub curl: T,
    pub grad_sq: T,
}

/// Cached element geometry: areas, basis gradients, lumped masses.
#[derive(Clone, Debug)]
pub struct Assembly<T> {
    pub triangles: Vec<[usize; 3]>,
    pub areas: Vec<T>,
    pub basis: Vec<[Vec2<T>; 3]>,
    pub mass: Vec<T>,
    pub vertex_count: usize,
}

impl<T: Scalar> Assembly<T> {
    pub fn new(mesh: &TriMesh<T>) -> Self {
        let two = T::lit(2.0);
        let mut areas = Vec::with_capacity(mesh.triangles.len());
        let mut basis = Vec::with_capacity(mesh.triangles.len());
        let mut mass = vec![T::zero(); mesh.vertex_count()];
        let third = T::one() / T::lit(3.0);
        for t in &mesh.triangles {
            let [a, b, c] = t.map(|i| mesh.vertices[i]);
            let area = (b - a).cross(c - a) / two;
            let s = T::one() / (two * area);
            basis.push([(c - b).perp() * s, (a - c).perp() * s, (b - a).perp() * s]);
            areas.push(area);
            for &v in t {
                mass[v] += area * third;
            }
        }
        Self {
            triangles: mesh.triangles.clone(),
            areas,
            basis,
            mass,
            vertex_count: mesh.vertex_count(),
        }
    }

    /// Gradient matrix `G[r] = grad u^r` on triangle `t`.
    #[inline]
    fn grad(&self, t: usize, u: &[Vec2<T>]) -> (Vec2<T>, Vec2<T>) {
        let tri = self.triangles[t];
        let b = &self.basis[t];
        let mut g1 = Vec2::zero();
        let mut g2 = Vec2::zero();
        for i in 0..3 {
            let v = u[tri[i]];
            g1 += b[i] * v.x;
            g2 += b[i] * v.y;
        }
        (g1, g2)
    }

    pub fn operators(&self, u: &[Vec2<T>]) -> Vec<TriangleOps<T>> {
        (0..self.triangles.len())
            .map(|t| {
                let (g1, g2) = self.grad(t, u);
                TriangleOps {
                    div: g1.x + g2.y,
                    curl: g2.x - g1.y,
                    grad_sq: g1.norm_sq() + g2.norm_sq(),
                }
            })
            .collect()
    }

    /// Energy parts; when `grad` is given, the unconstrained gradient is
    /// written into it.
    pub fn evaluate(
        &self,
        u: &[Vec2<T>],
        eps: T,
        k: T,
        penalty: Penalty,
        mut grad: Option<&mut [Vec2<T>]>,
    ) -> EnergyBreakdown<T> {
        let half = T::lit(0.5);
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|x| *x = Vec2::zero());
        }
        let mut dirichlet = T::zero();
        let mut pen = T::zero();
        for t in 0..self.triangles.len() {
            let (g1, g2) = self.grad(t, u);
            let a = self.areas[t];
            let scalar = match penalty {
                Penalty::Div => g1.x + g2.y,
                Penalty::Curl => g2.x - g1.y,
            };
            dirichlet += half * a * (g1.norm_sq() + g2.norm_sq());
            pen += half * k * a * scalar * scalar;
            if let Some(g) = grad.as_deref_mut() {
                let tri = self.triangles[t];
                let b = &self.basis[t];
                let ks = k * a * scalar;
                for i in 0..3 {
                    let bi = b[i];
                    let dir = Vec2::new(g1.dot(bi), g2.dot(bi)) * a;
                    let p = match penalty {
                        Penalty::Div => bi * ks,
                        Penalty::Curl => bi.perp() * ks,
                    };
                    g[tri[i]] += dir + p;
                }
            }
        }
        let inv4e2 = T::one() / (T::lit(4.0) * eps * eps);
        let inve2 = T::one() / (eps * eps);
        let mut potential = T::zero();
        for (v, &m) in self.mass.iter().enumerate() {
            let w = T::one() - u[v].norm_sq();
            potential += m * w * w * inv4e2;
            if let Some(g) = grad.as_deref_mut() {
                g[v] -= u[v] * (m * w * inve2);
            }
        }
        EnergyBreakdown {
            dirichlet,
            penalty: pen,
            potential,
            total: dirichlet + pen + potential,
        }
    }
}

pub fn energy<T: Scalar>(
    u: &VectorField<T>,
    p: &EnergyParams<T>,
    mesh: &TriMesh<T>,
) -> Result<EnergyBreakdown<T>, FieldError> {
    u.check_aligned(mesh)?;
    Ok(Assembly::new(mesh).evaluate(&u.values, p.eps, p.k, p.penalty, None))
}

/// Gradient of the energy restricted to variations that respect the
/// boundary condition of `p`.
pub fn gradient<T: Scalar>(
    u: &VectorField<T>,
    p: &EnergyParams<T>,
    mesh: &TriMesh<T>,
) -> Result<VectorField<T>, FieldError> {
    u.check_aligned(mesh)?;
    let mut g = vec![Vec2::zero(); u.len()];
    Assembly::new(mesh).evaluate(&u.values, p.eps, p.k, p.penalty, Some(&mut g));
    constrain_gradient(&mut g, &p.bc, mesh);
    Ok(VectorField::new(g))
}

/// Projects boundary entries of a gradient onto the admissible directions.
pub fn constrain_gradient<T: Scalar>(g: &mut [Vec2<T>], bc: &BoundaryCondition<T>, mesh: &TriMesh<T>) {
    for b in &mesh.boundary {
        let v = &mut g[b.index];
        *v = match bc {
            BoundaryCondition::TangentialAnchor => b.tangent * v.dot(b.tangent),
            BoundaryCondition::Dirichlet(_) => Vec2::zero(),
        };
    }
}

/// Replaces boundary values by their tangential part.
pub fn project_tangential<T: Scalar>(u: &VectorField<T>, mesh: &TriMesh<T>) -> VectorField<T> {
    let mut out = u.clone();
    for b in &mesh.boundary {
        let v = out.values[b.index];
        out.values[b.index] = b.tangent * v.dot(b.tangent);
    }
    out
}

/// Enforces the boundary condition in place.
pub fn apply_bc<T: Scalar>(u: &mut VectorField<T>, bc: &BoundaryCondition<T>, mesh: &TriMesh<T>) {
    match bc {
        BoundaryCondition::TangentialAnchor => {
            for b in &mesh.boundary {
                let v = u.values[b.index];
                u.values[b.index] = b.tangent * v.dot(b.tangent);
            }
        }
        BoundaryCondition::Dirichlet(g) => {
            for (b, &val) in mesh.boundary.iter().zip(g) {
                u.values[b.index] = val;
            }
        }
    }
}

/// Residual of the natural boundary condition at each boundary vertex:
/// `(1 + k) d_n u_tau + k kappa u_tau` for curl, `d_n u_tau` for div.
/// The normal derivative is a one-sided difference over one radial ring
/// spacing, with `d_n` the outward normal derivative.
pub fn robin_residual<T: Scalar>(
    u: &VectorField<T>,
    mesh: &TriMesh<T>,
    geom: &DomainGeometry<T>,
    k: T,
    penalty: Penalty,
) -> Vec<T> {
    let loc = mesh.locator();
    let rings = T::from_usize_lossy(mesh.rings.max(1));
    mesh.boundary
        .iter()
        .map(|b| {
            let x = mesh.vertices[b.index];
            let delta = (x - geom.center()).norm() / rings;
            let inner = u.eval(mesh, &loc, x - b.normal * delta);
            let ut = u.values[b.index].dot(b.tangent);
            let dn = (ut - inner.dot(b.tangent)) / delta;
            match penalty {
                Penalty::Div => dn,
                Penalty::Curl => {
                    let kappa = geom.curvature(b.s);
                    (T::one() + k) * dn + k * kappa * ut
                }
            }
        })
        .collect()
}

pub fn discrete_operators<T: Scalar>(u: &VectorField<T>, mesh: &TriMesh<T>) -> Vec<TriangleOps<T>> {
    Assembly::new(mesh).operators(&u.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;
    use crate::mesh::build_mesh;
    use std::f64::consts::PI;

    fn disk_mesh(rings: usize) -> (DomainGeometry<f64>, TriMesh<f64>) {
        let g = DomainGeometry::new(Shape::UnitDisk).unwrap();
        let m = build_mesh(&g, rings).unwrap();
        (g, m)
    }

    #[test]
    fn zero_field_only_potential() {
        let (_, m) = disk_mesh(16);
        let p = EnergyParams::tangential(0.5, 1.0, Penalty::Div).unwrap();
        let e = energy(&VectorField::constant(m.vertex_count(), Vec2::zero()), &p, &m).unwrap();
        assert_eq!(e.dirichlet, 0.0);
        assert_eq!(e.penalty, 0.0);
        assert!((e.total - m.area() / (4.0 * 0.25)).abs() < 1e-12);
        assert!((e.total - PI).abs() < 0.01);
    }

    #[test]
    fn unit_constant_field_has_zero_energy() {
        let (_, m) = disk_mesh(8);
        let p = EnergyParams::tangential(0.1, 3.0, Penalty::Curl).unwrap();
        let e = energy(&VectorField::constant(m.vertex_count(), Vec2::new(1.0, 0.0)), &p, &m).unwrap();
        assert!(e.total < 1e-25);
        assert_eq!(e.potential, 0.0);
    }

    #[test]
    fn identity_field_converges_to_closed_form() {
        let (eps, k) = (0.5, 1.5);
        let exact = PI + 2.0 * k * PI + PI / (12.0 * eps * eps);
        let mut prev = f64::INFINITY;
        for rings in [8, 16, 32, 64] {
            let (_, m) = disk_mesh(rings);
            let p = EnergyParams::tangential(eps, k, Penalty::Div).unwrap();
            let e = energy(&VectorField::from_fn(&m, |x| x), &p, &m).unwrap();
            let err = (e.total - exact).abs();
            assert!(err < prev, "rings {rings}: {err} vs {prev}");
            prev = err;
        }
        assert!(prev / exact < 2e-3);
    }

    #[test]
    fn operators_of_linear_fields() {
        let (_, m) = disk_mesh(4);
        for op in discrete_operators(&VectorField::from_fn(&m, |x| x), &m) {
            assert!((op.div - 2.0).abs() < 1e-12 && op.curl.abs() < 1e-12);
        }
        for op in discrete_operators(&VectorField::from_fn(&m, |x| x.perp()), &m) {
            assert!(op.div.abs() < 1e-12 && (op.curl - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn p1_divergence_on_reference_triangle() {
        // u = (x1^2, 0) at (0,0), (1,0), (0,1): interpolant is (x1, 0), div 1
        let mesh: TriMesh<f64> = TriMesh::from_parts(
            vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
            vec![[0, 1, 2]],
        );
        let u = VectorField::from_fn(&mesh, |x| Vec2::new(x.x * x.x, 0.0));
        let ops = Assembly::new(&mesh).operators(&u.values);
        assert!((ops[0].div - 1.0).abs() < 1e-15);
        assert!(ops[0].curl.abs() < 1e-15);
        assert!((ops[0].grad_sq - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tangential_projection() {
        let (_, m) = disk_mesh(2);
        let b0 = m.boundary[0];
        assert!(m.vertices[b0.index].dist(Vec2::new(1.0, 0.0)) < 1e-15);
        let mut u = VectorField::constant(m.vertex_count(), Vec2::new(1.0, 0.0));
        let p = project_tangential(&u, &m);
        assert!(p.values[b0.index].norm() < 1e-15);
        u.values[b0.index] = Vec2::new(0.0, 1.0);
        let p = project_tangential(&u, &m);
        assert!(p.values[b0.index].dist(Vec2::new(0.0, 1.0)) < 1e-15);
        let pp = project_tangential(&p, &m);
        for (a, b) in pp.values.iter().zip(&p.values) {
            assert!(a.dist(*b) < 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn dirichlet_gradient_vanishes_on_boundary() {
        let (_, m) = disk_mesh(4);
        let bc = BoundaryCondition::dirichlet_from(&m, |_, _, t| t);
        let p = EnergyParams::new(0.3, 1.0, Penalty::Curl, bc).unwrap();
        let u = VectorField::from_fn(&m, |x| Vec2::new(0.3 + x.y, x.x * x.x));
        let g = gradient(&u, &p, &m).unwrap();
        for b in &m.boundary {
            assert_eq!(g.values[b.index], Vec2::zero());
        }
    }

    #[test]
    fn critical_unit_field_has_zero_interior_gradient() {
        let (_, m) = disk_mesh(6);
        let p = EnergyParams::tangential(0.2, 1.0, Penalty::Div).unwrap();
        let u = VectorField::constant(m.vertex_count(), Vec2::new(1.0, 0.0));
        let g = gradient(&u, &p, &m).unwrap();
        for (v, gv) in g.values.iter().enumerate() {
            if !m.is_boundary(v) {
                assert!(gv.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn mesh_mismatch() {
        let (_, m) = disk_mesh(2);
        let p = EnergyParams::tangential(0.2, 1.0, Penalty::Div).unwrap();
        let err = energy(&VectorField::constant(3, Vec2::zero()), &p, &m).unwrap_err();
        assert_eq!(err, FieldError::MeshMismatch { expected: 19, got: 3 });
    }

    #[test]
    fn params_validation() {
        assert!(EnergyParams::tangential(0.0, 1.0, Penalty::Div).is_err());
        assert!(EnergyParams::tangential(0.1, -1.0, Penalty::Div).is_err());
    }

    #[test]
    fn robin_residual_constructed_zero() {
        // u = (3 - r) x^perp / r: u_tau(1) = 2 and outward d_n u_tau = -1
        let worst = |rings: usize| {
            let (g, m) = disk_mesh(rings);
            let u = VectorField::from_fn(&m, |x| {
                let r = x.norm();
                if r == 0.0 {
                    Vec2::zero()
                } else {
                    x.perp() * ((3.0 - r) / r)
                }
            });
            let curl = robin_residual(&u, &m, &g, 1.0, Penalty::Curl);
            let div = robin_residual(&u, &m, &g, 1.0, Penalty::Div);
            let c = curl.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let d = div.iter().fold(0.0f64, |a, x| a.max((x + 1.0).abs()));
            (c, d)
        };
        let (c16, d16) = worst(16);
        let (c64, d64) = worst(64);
        assert!(c64 < 0.03 && d64 < 0.03, "{c64} {d64}");
        assert!(c64 < c16 && d64 < d16);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let (_, m) = disk_mesh(2);
        let u = VectorField::from_fn(&m, |x| x);
        let mut buf = Vec::new();
        u.write_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("x,y,u1,u2"));
        assert_eq!(text.lines().count(), 20);
    }
}
