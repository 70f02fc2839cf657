//! Closed-form vector fields with first and second derivatives.
//!
//! Jacobians use the convention `J[i][j] = d_j u^i`; `hessian()[i]` is the
//! Hessian of the component `u^i`.

use crate::fields::VectorField;
use crate::geometry::{DomainGeometry, TubularPoint};
use crate::mesh::{PointLocator, TriMesh};
use crate::scalar::{Mat2, Scalar, Vec2};

pub trait SmoothField<T: Scalar> {
    fn value(&self, x: Vec2<T>) -> Vec2<T>;

    /// Fourth-order central differences of `value` unless overridden.
    fn jacobian(&self, x: Vec2<T>) -> Mat2<T> {
        let h = self.diff_step();
        let d = |e: Vec2<T>| {
            let f = |t: T| self.value(x + e * t);
            (f(-h * T::lit(2.0)) - f(h * T::lit(2.0)) + (f(h) - f(-h)) * T::lit(8.0)) / (h * T::lit(12.0))
        };
        Mat2::from_cols(d(Vec2::new(T::one(), T::zero())), d(Vec2::new(T::zero(), T::one())))
    }

    /// Fourth-order central differences of `jacobian` unless overridden.
    fn hessian(&self, x: Vec2<T>) -> [Mat2<T>; 2] {
        let h = self.diff_step();
        let d = |e: Vec2<T>| {
            let f = |t: T| self.jacobian(x + e * t);
            let a = f(-h * T::lit(2.0)).sub(&f(h * T::lit(2.0)));
            let b = f(h).sub(&f(-h)).scale(T::lit(8.0));
            let mut s = a;
            for i in 0..2 {
                for j in 0..2 {
                    s.m[i][j] = (a.m[i][j] + b.m[i][j]) / (h * T::lit(12.0));
                }
            }
            s
        };
        let (dx, dy) = (d(Vec2::new(T::one(), T::zero())), d(Vec2::new(T::zero(), T::one())));
        // dx.m[i][j] = d_x d_j u^i
        let comp = |i: usize| Mat2::new(dx.m[i][0], dx.m[i][1], dy.m[i][0], dy.m[i][1]);
        [comp(0), comp(1)]
    }

    fn diff_step(&self) -> T {
        T::lit(1e-3)
    }

    /// False when second derivatives are unavailable (piecewise-linear
    /// data); the residual term is then left out.
    fn has_second_derivatives(&self) -> bool {
        true
    }
}

impl<T: Scalar, F: SmoothField<T> + ?Sized> SmoothField<T> for &F {
    fn value(&self, x: Vec2<T>) -> Vec2<T> {
        (**self).value(x)
    }
    fn jacobian(&self, x: Vec2<T>) -> Mat2<T> {
        (**self).jacobian(x)
    }
    fn hessian(&self, x: Vec2<T>) -> [Mat2<T>; 2] {
        (**self).hessian(x)
    }
    fn has_second_derivatives(&self) -> bool {
        (**self).has_second_derivatives()
    }
}

/// Componentwise bivariate polynomial of degree at most 3:
/// `u^i = sum c[i][a][b] x^a y^b`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyField<T> {
    pub c: [[[T; 4]; 4]; 2],
}

impl<T: Scalar> PolyField<T> {
    pub fn zero() -> Self {
        Self {
            c: [[[T::zero(); 4]; 4]; 2],
        }
    }

    pub fn constant(v: Vec2<T>) -> Self {
        let mut p = Self::zero();
        p.c[0][0][0] = v.x;
        p.c[1][0][0] = v.y;
        p
    }

    /// `u(x) = A x + b`.
    pub fn affine(a: Mat2<T>, b: Vec2<T>) -> Self {
        let mut p = Self::constant(b);
        for i in 0..2 {
            p.c[i][1][0] = a.m[i][0];
            p.c[i][0][1] = a.m[i][1];
        }
        p
    }

    pub fn identity() -> Self {
        Self::affine(Mat2::identity(), Vec2::zero())
    }

    /// `u(x) = x^perp = (-x2, x1)`.
    pub fn rotation() -> Self {
        Self::affine(Mat2::new(T::zero(), -T::one(), T::one(), T::zero()), Vec2::zero())
    }

    /// Coefficients uniform in `[-scale, scale]`, zero above total degree 3.
    pub fn random<R: rand::Rng>(rng: &mut R, scale: f64) -> Self {
        let mut p = Self::zero();
        for i in 0..2 {
            for a in 0..4 {
                for b in 0..4 - a {
                    p.c[i][a][b] = T::lit(rng.gen_range(-scale..=scale));
                }
            }
        }
        p
    }

    fn eval_partial(&self, i: usize, x: Vec2<T>, dx: usize, dy: usize) -> T {
        let mut s = T::zero();
        for a in dx..4 {
            for b in dy..4 {
                let c = self.c[i][a][b];
                if c == T::zero() {
                    continue;
                }
                let fa = falling(a, dx);
                let fb = falling(b, dy);
                s += c * T::lit(fa * fb) * x.x.powi((a - dx) as i32) * x.y.powi((b - dy) as i32);
            }
        }
        s
    }
}

fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|j| (n - j) as f64).product()
}

impl<T: Scalar> SmoothField<T> for PolyField<T> {
    fn value(&self, x: Vec2<T>) -> Vec2<T> {
        Vec2::new(self.eval_partial(0, x, 0, 0), self.eval_partial(1, x, 0, 0))
    }

    fn jacobian(&self, x: Vec2<T>) -> Mat2<T> {
        Mat2::new(
            self.eval_partial(0, x, 1, 0),
            self.eval_partial(0, x, 0, 1),
            self.eval_partial(1, x, 1, 0),
            self.eval_partial(1, x, 0, 1),
        )
    }

    fn hessian(&self, x: Vec2<T>) -> [Mat2<T>; 2] {
        let h = |i| {
            let xy = self.eval_partial(i, x, 1, 1);
            Mat2::new(self.eval_partial(i, x, 2, 0), xy, xy, self.eval_partial(i, x, 0, 2))
        };
        [h(0), h(1)]
    }
}

/// `(x - c)^perp / sqrt(|x - c|^2 + core^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MollifiedVortex<T> {
    pub center: Vec2<T>,
    pub core: T,
}

impl<T: Scalar> SmoothField<T> for MollifiedVortex<T> {
    fn value(&self, x: Vec2<T>) -> Vec2<T> {
        crate::solver::mollified_vortex(x - self.center, self.core)
    }

    fn jacobian(&self, x: Vec2<T>) -> Mat2<T> {
        let d = x - self.center;
        let s = T::one() / (d.norm_sq() + self.core * self.core).sqrt();
        let s3 = s * s * s;
        let pd = d.perp();
        // d_j u = s P e_j - s^3 d_j P d
        let col = |j: usize| {
            let ej = if j == 0 {
                Vec2::new(T::one(), T::zero())
            } else {
                Vec2::new(T::zero(), T::one())
            };
            let dj = if j == 0 { d.x } else { d.y };
            ej.perp() * s - pd * (s3 * dj)
        };
        Mat2::from_cols(col(0), col(1))
    }

    fn hessian(&self, x: Vec2<T>) -> [Mat2<T>; 2] {
        let d = x - self.center;
        let s = T::one() / (d.norm_sq() + self.core * self.core).sqrt();
        let s3 = s * s * s;
        let s5 = s3 * s * s;
        let pd = d.perp();
        let e = [Vec2::new(T::one(), T::zero()), Vec2::new(T::zero(), T::one())];
        let dc = [d.x, d.y];
        let second = |j: usize, k: usize| {
            let delta = if j == k { T::one() } else { T::zero() };
            e[j].perp() * (-s3 * dc[k]) - pd * (s3 * delta) - e[k].perp() * (s3 * dc[j])
                + pd * (T::lit(3.0) * s5 * dc[j] * dc[k])
        };
        let (xx, xy, yy) = (second(0, 0), second(0, 1), second(1, 1));
        [Mat2::new(xx.x, xy.x, xy.x, yy.x), Mat2::new(xx.y, xy.y, xy.y, yy.y)]
    }
}

/// `u^perp` of a smooth field.
#[derive(Clone, Debug)]
pub struct Perp<F>(pub F);

impl<T: Scalar, F: SmoothField<T>> SmoothField<T> for Perp<F> {
    fn value(&self, x: Vec2<T>) -> Vec2<T> {
        self.0.value(x).perp()
    }

    fn jacobian(&self, x: Vec2<T>) -> Mat2<T> {
        let j = self.0.jacobian(x);
        Mat2::new(-j.m[1][0], -j.m[1][1], j.m[0][0], j.m[0][1])
    }

    fn hessian(&self, x: Vec2<T>) -> [Mat2<T>; 2] {
        let [h0, h1] = self.0.hessian(x);
        [h1.scale(-T::one()), h0]
    }

    fn has_second_derivatives(&self) -> bool {
        self.0.has_second_derivatives()
    }
}

/// Field given by a closure, differentiated numerically.
pub struct FnField<F>(pub F);

impl<T: Scalar, F: Fn(Vec2<T>) -> Vec2<T>> SmoothField<T> for FnField<F> {
    fn value(&self, x: Vec2<T>) -> Vec2<T> {
        (self.0)(x)
    }
}

/// The vector field used with balls centred on the boundary: in tubular
/// coordinates `X = (y1 - s0) tau(y1) - y2 n(y1)`. It is tangent to the
/// boundary and agrees with `x - x0` to second order.
pub struct TubularX<'a, T> {
    pub geom: &'a DomainGeometry<T>,
    pub s0: T,
}

impl<T: Scalar> SmoothField<T> for TubularX<'_, T> {
    fn value(&self, x: Vec2<T>) -> Vec2<T> {
        let TubularPoint { y1, y2 } = self.geom.cartesian_to_tubular(x).unwrap_or(TubularPoint {
            y1: self.s0,
            y2: T::zero(),
        });
        let len = self.geom.arclength_total();
        let mut ds = y1 - self.s0;
        while ds > len * T::lit(0.5) {
            ds -= len;
        }
        while ds < -len * T::lit(0.5) {
            ds += len;
        }
        let (n, tau) = self.geom.frame(y1);
        tau * ds - n * y2
    }
}

/// A piecewise-linear field seen through the smooth-field interface:
/// values by interpolation, Jacobian constant per triangle, no second
/// derivatives.
pub struct DiscreteField<'a, T> {
    pub u: &'a VectorField<T>,
    pub mesh: &'a TriMesh<T>,
    pub loc: PointLocator<'a, T>,
}

impl<'a, T: Scalar> DiscreteField<'a, T> {
    pub fn new(u: &'a VectorField<T>, mesh: &'a TriMesh<T>) -> Self {
        Self {
            u,
            mesh,
            loc: mesh.locator(),
        }
    }
}

impl<T: Scalar> SmoothField<T> for DiscreteField<'_, T> {
    fn value(&self, x: Vec2<T>) -> Vec2<T> {
        self.u.eval(self.mesh, &self.loc, x)
    }

    fn jacobian(&self, x: Vec2<T>) -> Mat2<T> {
        let Some((t, _)) = self.loc.locate(x) else {
            return Mat2::new(T::zero(), T::zero(), T::zero(), T::zero());
        };
        let [a, b, c] = self.mesh.triangles[t];
        let (pa, pb, pc) = (self.mesh.vertices[a], self.mesh.vertices[b], self.mesh.vertices[c]);
        let two_area = (pb - pa).cross(pc - pa);
        let ga = (pc - pb).perp() / two_area;
        let gb = (pa - pc).perp() / two_area;
        let gc = (pb - pa).perp() / two_area;
        let mut j = Mat2::new(T::zero(), T::zero(), T::zero(), T::zero());
        for (v, g) in [(a, ga), (b, gb), (c, gc)] {
            let uv = self.u.values[v];
            j.m[0][0] += uv.x * g.x;
            j.m[0][1] += uv.x * g.y;
            j.m[1][0] += uv.y * g.x;
            j.m[1][1] += uv.y * g.y;
        }
        j
    }

    fn hessian(&self, _x: Vec2<T>) -> [Mat2<T>; 2] {
        let z = Mat2::new(T::zero(), T::zero(), T::zero(), T::zero());
        [z, z]
    }

    fn has_second_derivatives(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn close(a: &Mat2<f64>, b: &Mat2<f64>, tol: f64) -> bool {
        a.sub(b).frobenius_sq().sqrt() < tol
    }

    /// Numerical derivatives of the analytic values through `FnField`.
    fn numeric<'a>(f: &'a dyn SmoothField<f64>) -> FnField<impl Fn(Vec2<f64>) -> Vec2<f64> + 'a> {
        FnField(move |x| f.value(x))
    }

    #[test]
    fn polynomial_derivatives_match_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let p = PolyField::<f64>::random(&mut rng, 1.0);
        let q = numeric(&p);
        let x = Vec2::new(0.3, -0.2);
        assert!(close(&p.jacobian(x), &q.jacobian(x), 1e-10));
        let (ha, hn) = (p.hessian(x), q.hessian(x));
        for i in 0..2 {
            assert!(close(&ha[i], &hn[i], 1e-7));
        }
    }

    #[test]
    fn vortex_derivatives_match_differences() {
        let v = MollifiedVortex {
            center: Vec2::new(0.1, 0.05),
            core: 0.3,
        };
        let q = numeric(&v);
        let x = Vec2::new(-0.2, 0.4);
        assert!(close(&v.jacobian(x), &q.jacobian(x), 1e-9));
        let (ha, hn) = (v.hessian(x), q.hessian(x));
        for i in 0..2 {
            assert!(close(&ha[i], &hn[i], 1e-6));
        }
    }

    #[test]
    fn perp_rotates_derivatives() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let p = PolyField::<f64>::random(&mut rng, 1.0);
        let pp = Perp(p.clone());
        let q = numeric(&pp);
        let x = Vec2::new(-0.1, 0.6);
        assert!(pp.value(x).dist(p.value(x).perp()) < 1e-15);
        assert!(close(&pp.jacobian(x), &q.jacobian(x), 1e-10));
        let (ha, hn) = (pp.hessian(x), q.hessian(x));
        for i in 0..2 {
            assert!(close(&ha[i], &hn[i], 1e-7));
        }
    }

    #[test]
    fn rotation_field_has_curl_two() {
        let r = PolyField::<f64>::rotation();
        let j = r.jacobian(Vec2::new(0.4, 0.1));
        assert_eq!(j.m[1][0] - j.m[0][1], 2.0);
        assert_eq!(j.trace(), 0.0);
    }
}
