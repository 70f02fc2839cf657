//! Smooth star-shaped domains: arclength parametrization of the boundary,
//! the outward frame, curvature, and tubular coordinates near the boundary.
//!
//! Every shape is stored as a polar graph `r = rho(theta)` about the origin.
//! Arclength is recovered from a panel-wise Gauss table and inverted by
//! Newton's method, so `s -> theta(s)` is accurate to rounding.
//!
//! Conventions: `tau = gamma'(s)` is the unit tangent (counterclockwise),
//! `n = -tau^perp` is the outward normal, and the curvature satisfies
//! `n' = kappa tau`, `tau' = -kappa n` (so kappa = +1 on the unit circle).
//! Tubular coordinates are `x = gamma(y1) - y2 n(y1)` with `y2 > 0` inside.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::quadrature::GaussLegendre;
use crate::scalar::{Mat2, Scalar, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point is outside the tubular neighbourhood (depth {depth:.3e}, width {width:.3e})")]
    OutOfTube { depth: f64, width: f64 },
    #[error("invalid shape: {0}")]
    BadShape(String),
}

/// Domain shapes. All are star-shaped about the origin.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape<T> {
    UnitDisk,
    /// Semi-axes along x and y.
    Ellipse {
        a: T,
        b: T,
    },
    /// Cassini oval `rho^2 ~ cos 2t + sqrt(b^4 - sin^2 2t)` scaled to unit
    /// maximal radius. `pinch` is the waist-to-tip radius ratio.
    Peanut {
        pinch: T,
    },
    /// `rho(t) = c0 + sum_m c_m cos(m t)`.
    PolarGraph {
        coeffs: Vec<T>,
    },
}

/// Cassini parameter used when `peanut` is given without a pinch.
pub const DEFAULT_CASSINI_B: f64 = 1.05;

impl<T: Scalar> Shape<T> {
    /// Pinch ratio of the Cassini oval with parameter `b` (for focal
    /// half-distance one).
    pub fn pinch_for_cassini(b: T) -> T {
        let b2 = b * b;
        ((b2 - T::one()) / (b2 + T::one())).sqrt()
    }

    fn cassini_b2(pinch: T) -> T {
        let p2 = pinch * pinch;
        (T::one() + p2) / (T::one() - p2)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        match self {
            Shape::UnitDisk => Ok(()),
            Shape::Ellipse { a, b } => {
                if *a > T::zero() && *b > T::zero() && a.is_finite() && b.is_finite() {
                    Ok(())
                } else {
                    Err(GeometryError::BadShape(format!(
                        "ellipse semi-axes must be positive, got {a}, {b}"
                    )))
                }
            }
            Shape::Peanut { pinch } => {
                if *pinch > T::zero() && *pinch < T::one() {
                    Ok(())
                } else {
                    Err(GeometryError::BadShape(format!(
                        "peanut pinch must lie in (0, 1), got {pinch}"
                    )))
                }
            }
            Shape::PolarGraph { coeffs } => {
                if coeffs.is_empty() {
                    return Err(GeometryError::BadShape(
                        "polar graph needs at least one coefficient".into(),
                    ));
                }
                // rho must stay positive or the domain is not star-shaped
                let n = 4096;
                for i in 0..n {
                    let t = T::lit(2.0 * std::f64::consts::PI * i as f64 / n as f64);
                    let (r, _, _) = self.radial(t);
                    if !(r > T::zero()) {
                        return Err(GeometryError::BadShape(format!(
                            "polar radius is not positive at theta = {t}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// `(rho, rho', rho'')` at polar angle `t`.
    pub fn radial(&self, t: T) -> (T, T, T) {
        let one = T::one();
        let two = T::lit(2.0);
        match self {
            Shape::UnitDisk => (one, T::zero(), T::zero()),
            Shape::Ellipse { a, b } => {
                let (s, c) = t.sin_cos();
                let (a2, b2) = (*a * *a, *b * *b);
                let d = b2 * c * c + a2 * s * s;
                let d1 = (a2 - b2) * (two * t).sin();
                let d2 = two * (a2 - b2) * (two * t).cos();
                let ab = *a * *b;
                let dm12 = one / d.sqrt();
                let dm32 = dm12 / d;
                let dm52 = dm32 / d;
                let r = ab * dm12;
                let r1 = -T::lit(0.5) * ab * dm32 * d1;
                let r2 = ab * (T::lit(0.75) * dm52 * d1 * d1 - T::lit(0.5) * dm32 * d2);
                (r, r1, r2)
            }
            Shape::Peanut { pinch } => {
                let b2 = Self::cassini_b2(*pinch);
                let scale = one / (one + b2);
                let s2 = (two * t).sin();
                let c2 = (two * t).cos();
                let w = s2 * s2;
                let w1 = two * (T::lit(4.0) * t).sin();
                let w2 = T::lit(8.0) * (T::lit(4.0) * t).cos();
                let root = (b2 * b2 - w).sqrt();
                let root1 = -w1 / (two * root);
                let root2 = -w2 / (two * root) - w1 * w1 / (T::lit(4.0) * root * root * root);
                let q = c2 + root;
                let q1 = -two * s2 + root1;
                let q2 = -T::lit(4.0) * c2 + root2;
                let r = (scale * q).sqrt();
                let r1 = scale * q1 / (two * r);
                let r2 = (scale * q2 - two * r1 * r1) / (two * r);
                (r, r1, r2)
            }
            Shape::PolarGraph { coeffs } => {
                let mut r = T::zero();
                let mut r1 = T::zero();
                let mut r2 = T::zero();
                for (m, &c) in coeffs.iter().enumerate() {
                    let mf = T::from_usize_lossy(m);
                    let (s, co) = (mf * t).sin_cos();
                    r += c * co;
                    r1 -= c * mf * s;
                    r2 -= c * mf * mf * co;
                }
                (r, r1, r2)
            }
        }
    }
}

impl<T: Scalar> fmt::Display for Shape<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::UnitDisk => write!(f, "disk"),
            Shape::Ellipse { a, b } => write!(f, "ellipse:{a},{b}"),
            Shape::Peanut { pinch } => write!(f, "peanut:{pinch}"),
            Shape::PolarGraph { coeffs } => {
                write!(f, "polar:")?;
                for (i, c) in coeffs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}

impl<T: Scalar> FromStr for Shape<T> {
    type Err = GeometryError;

    /// `disk | ellipse:a,b | peanut[:pinch] | polar:c0,c1,...`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (s, None),
        };
        let nums = |a: &str| -> Result<Vec<T>, GeometryError> {
            a.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map(T::lit)
                        .map_err(|e| GeometryError::BadShape(format!("bad number {x:?}: {e}")))
                })
                .collect()
        };
        let shape = match (name, args) {
            ("disk", None) => Shape::UnitDisk,
            ("ellipse", Some(a)) => match nums(a)?.as_slice() {
                [a, b] => Shape::Ellipse { a: *a, b: *b },
                _ => return Err(GeometryError::BadShape("ellipse needs a,b".into())),
            },
            ("peanut", None) => Shape::Peanut {
                pinch: Shape::pinch_for_cassini(T::lit(DEFAULT_CASSINI_B)),
            },
            ("peanut", Some(a)) => match nums(a)?.as_slice() {
                [p] => Shape::Peanut { pinch: *p },
                _ => return Err(GeometryError::BadShape("peanut takes one pinch value".into())),
            },
            ("polar", Some(a)) => Shape::PolarGraph { coeffs: nums(a)? },
            _ => return Err(GeometryError::BadShape(format!("unknown shape {s:?}"))),
        };
        shape.validate()?;
        Ok(shape)
    }
}

/// Point in tubular coordinates: arclength `y1` and inward depth `y2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TubularPoint<T> {
    pub y1: T,
    pub y2: T,
}

const ARC_PANELS: usize = 1024;
const ARC_GAUSS: usize = 16;
const CLOSEST_SEEDS: usize = 256;

/// A validated domain with its arclength table.
#[derive(Clone, Debug)]
pub struct DomainGeometry<T> {
    shape: Shape<T>,
    arclength_total: T,
    tubular_width: T,
    max_abs_curvature: T,
    min_radius: T,
    max_radius: T,
    /// Cumulative arclength at the panel breaks `theta_i = 2 pi i / ARC_PANELS`.
    cumulative: Vec<T>,
    gauss: GaussLegendre<T>,
    /// `(theta, point)` samples used to seed closest-point searches.
    seeds: Vec<(T, Vec2<T>)>,
}

impl<T: Scalar> DomainGeometry<T> {
    /// Builds the geometry with the default tube width
    /// `min(0.4 / max|kappa|, 0.3 * inradius)`.
    pub fn new(shape: Shape<T>) -> Result<Self, GeometryError> {
        shape.validate()?;
        let gauss = GaussLegendre::new(ARC_GAUSS);
        let two_pi = T::PI() + T::PI();
        let dt = two_pi / T::from_usize_lossy(ARC_PANELS);
        let mut cumulative = Vec::with_capacity(ARC_PANELS + 1);
        let mut acc = T::zero();
        cumulative.push(acc);
        for i in 0..ARC_PANELS {
            let a = dt * T::from_usize_lossy(i);
            acc += gauss.integrate(a, a + dt, |t| speed(&shape, t));
            cumulative.push(acc);
        }
        let samples = 4096;
        let mut max_k = T::zero();
        let mut min_r = T::infinity();
        let mut max_r = T::zero();
        for i in 0..samples {
            let t = two_pi * T::from_usize_lossy(i) / T::from_usize_lossy(samples);
            max_k = max_k.max(curvature_at_theta(&shape, t).abs());
            let (r, _, _) = shape.radial(t);
            min_r = min_r.min(r);
            max_r = max_r.max(r);
        }
        let seeds = (0..CLOSEST_SEEDS)
            .map(|i| {
                let t = two_pi * T::from_usize_lossy(i) / T::from_usize_lossy(CLOSEST_SEEDS);
                (t, curve_point(&shape, t))
            })
            .collect();
        let tubular_width = (T::lit(0.4) / max_k).min(T::lit(0.3) * min_r);
        Ok(Self {
            shape,
            arclength_total: acc,
            tubular_width,
            max_abs_curvature: max_k,
            min_radius: min_r,
            max_radius: max_r,
            cumulative,
            gauss,
            seeds,
        })
    }

    /// Same geometry with an explicit tube width. Fails if the width violates
    /// `width * max|kappa| < 1`.
    pub fn with_tubular_width(mut self, width: T) -> Result<Self, GeometryError> {
        if !(width > T::zero()) || width * self.max_abs_curvature >= T::one() {
            return Err(GeometryError::BadShape(format!(
                "tube width {width} incompatible with max curvature {}",
                self.max_abs_curvature
            )));
        }
        self.tubular_width = width;
        Ok(self)
    }

    pub fn shape(&self) -> &Shape<T> {
        &self.shape
    }

    pub fn arclength_total(&self) -> T {
        self.arclength_total
    }

    pub fn tubular_width(&self) -> T {
        self.tubular_width
    }

    pub fn max_abs_curvature(&self) -> T {
        self.max_abs_curvature
    }

    /// Lower bound on the inradius: the largest origin-centred disk inside.
    pub fn min_radius(&self) -> T {
        self.min_radius
    }

    pub fn max_radius(&self) -> T {
        self.max_radius
    }

    /// Star centre of the polar representation.
    pub fn center(&self) -> Vec2<T> {
        Vec2::zero()
    }

    /// Boundary diameter estimated from 512 boundary samples.
    pub fn diameter(&self) -> T {
        let n = 512;
        let pts: Vec<_> = (0..n)
            .map(|i| self.boundary_point(self.arclength_total * T::from_usize_lossy(i) / T::from_usize_lossy(n)))
            .collect();
        let mut d = T::zero();
        for i in 0..n {
            for j in i + 1..n {
                d = d.max(pts[i].dist(pts[j]));
            }
        }
        d
    }

    /// Polar radius of the boundary in direction `theta`.
    pub fn radius_at(&self, theta: T) -> T {
        self.shape.radial(theta).0
    }

    /// Wraps `s` into `[0, L)`.
    pub fn wrap_s(&self, s: T) -> T {
        let l = self.arclength_total;
        let r = s % l;
        if r < T::zero() {
            r + l
        } else {
            r
        }
    }

    /// Arclength from `theta = 0` to `theta` (any real, wrapped).
    pub fn s_of_theta(&self, theta: T) -> T {
        let two_pi = T::PI() + T::PI();
        let turns = (theta / two_pi).floor();
        let t = theta - turns * two_pi;
        let dt = two_pi / T::from_usize_lossy(ARC_PANELS);
        let idx = (t / dt).floor().to_usize().unwrap_or(0).min(ARC_PANELS - 1);
        let a = dt * T::from_usize_lossy(idx);
        let partial = self.gauss.integrate(a, t, |x| speed(&self.shape, x));
        self.cumulative[idx] + partial
    }

    /// Inverse of [`Self::s_of_theta`] on one period: returns theta in `[0, 2 pi)`.
    pub fn theta_of_s(&self, s: T) -> T {
        let s = self.wrap_s(s);
        let two_pi = T::PI() + T::PI();
        let dt = two_pi / T::from_usize_lossy(ARC_PANELS);
        // bracketing panel by binary search on the cumulative table
        let idx = match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&s).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(ARC_PANELS - 1),
            Err(i) => i.saturating_sub(1).min(ARC_PANELS - 1),
        };
        let (c0, c1) = (self.cumulative[idx], self.cumulative[idx + 1]);
        let a = dt * T::from_usize_lossy(idx);
        let mut t = a + dt * (s - c0) / (c1 - c0);
        for _ in 0..30 {
            let f = self.cumulative[idx] + self.gauss.integrate(a, t, |x| speed(&self.shape, x)) - s;
            let step = f / speed(&self.shape, t);
            t -= step;
            if step.abs() < T::epsilon() * T::lit(4.0) {
                break;
            }
        }
        t
    }

    /// `gamma(s)`.
    pub fn boundary_point(&self, s: T) -> Vec2<T> {
        curve_point(&self.shape, self.theta_of_s(s))
    }

    /// Outward normal and unit tangent at arclength `s`.
    pub fn frame(&self, s: T) -> (Vec2<T>, Vec2<T>) {
        frame_at_theta(&self.shape, self.theta_of_s(s))
    }

    /// Signed curvature with `n' = kappa tau`.
    pub fn curvature(&self, s: T) -> T {
        curvature_at_theta(&self.shape, self.theta_of_s(s))
    }

    pub fn frame_at_theta(&self, theta: T) -> (Vec2<T>, Vec2<T>) {
        frame_at_theta(&self.shape, theta)
    }

    pub fn curvature_at_theta(&self, theta: T) -> T {
        curvature_at_theta(&self.shape, theta)
    }

    pub fn point_at_theta(&self, theta: T) -> Vec2<T> {
        curve_point(&self.shape, theta)
    }

    fn check_depth(&self, y2: T) -> Result<(), GeometryError> {
        if y2.abs() > self.tubular_width {
            Err(GeometryError::OutOfTube {
                depth: y2.to_f64_lossy(),
                width: self.tubular_width.to_f64_lossy(),
            })
        } else {
            Ok(())
        }
    }

    /// `gamma(y1) - y2 n(y1)`.
    pub fn tubular_to_cartesian(&self, p: TubularPoint<T>) -> Result<Vec2<T>, GeometryError> {
        self.check_depth(p.y2)?;
        let t = self.theta_of_s(p.y1);
        let (n, _) = frame_at_theta(&self.shape, t);
        Ok(curve_point(&self.shape, t) - n * p.y2)
    }

    /// Closest-point parameter `theta` of `x` on the boundary: Newton on
    /// `<x - c(t), c'(t)> = 0` from the nearest of 256 seeds.
    pub fn closest_theta(&self, x: Vec2<T>) -> T {
        let mut best = (T::zero(), T::infinity());
        for &(t, p) in &self.seeds {
            let d = (x - p).norm_sq();
            if d < best.1 {
                best = (t, d);
            }
        }
        let mut t = best.0;
        let tol = T::lit(1e-12);
        for _ in 0..50 {
            let (c, c1, c2) = curve_derivatives(&self.shape, t);
            let r = x - c;
            let g = r.dot(c1);
            let dg = -c1.norm_sq() + r.dot(c2);
            if dg == T::zero() {
                break;
            }
            // keep steps bounded when far from the curve
            let step = (g / dg).max(-T::lit(0.1)).min(T::lit(0.1));
            t -= step;
            if step.abs() < tol {
                break;
            }
        }
        let two_pi = T::PI() + T::PI();
        t - (t / two_pi).floor() * two_pi
    }

    /// Inverse of [`Self::tubular_to_cartesian`].
    pub fn cartesian_to_tubular(&self, x: Vec2<T>) -> Result<TubularPoint<T>, GeometryError> {
        let t = self.closest_theta(x);
        let (n, _) = frame_at_theta(&self.shape, t);
        let y2 = (curve_point(&self.shape, t) - x).dot(n);
        self.check_depth(y2)?;
        Ok(TubularPoint {
            y1: self.s_of_theta(t),
            y2,
        })
    }

    /// Mirror image across the boundary along the normal: `y2 -> -y2`.
    pub fn reflect(&self, x: Vec2<T>) -> Result<Vec2<T>, GeometryError> {
        let t = self.closest_theta(x);
        let (n, _) = frame_at_theta(&self.shape, t);
        let c = curve_point(&self.shape, t);
        let y2 = (c - x).dot(n);
        self.check_depth(y2)?;
        Ok(c + n * y2)
    }

    /// `I - 2 n n^T` with `n` the normal at the foot point of `x`.
    pub fn reflection_matrix(&self, x: Vec2<T>) -> Result<Mat2<T>, GeometryError> {
        let tp = self.cartesian_to_tubular(x)?;
        let (n, _) = self.frame(tp.y1);
        Ok(Mat2::identity().sub(&Mat2::outer(n, n).scale(T::lit(2.0))))
    }

    /// Open-domain membership by polar radius comparison.
    pub fn contains(&self, x: Vec2<T>) -> bool {
        let r = x.norm();
        if r == T::zero() {
            return true;
        }
        r < self.radius_at(x.angle())
    }
}

fn curve_point<T: Scalar>(shape: &Shape<T>, t: T) -> Vec2<T> {
    let (r, _, _) = shape.radial(t);
    Vec2::from_angle(t) * r
}

/// `(c, c', c'')` with respect to the polar angle.
fn curve_derivatives<T: Scalar>(shape: &Shape<T>, t: T) -> (Vec2<T>, Vec2<T>, Vec2<T>) {
    let (r, r1, r2) = shape.radial(t);
    let e = Vec2::from_angle(t);
    let ep = e.perp();
    let c = e * r;
    let c1 = e * r1 + ep * r;
    let c2 = e * (r2 - r) + ep * (T::lit(2.0) * r1);
    (c, c1, c2)
}

fn speed<T: Scalar>(shape: &Shape<T>, t: T) -> T {
    let (r, r1, _) = shape.radial(t);
    r.hypot(r1)
}

fn frame_at_theta<T: Scalar>(shape: &Shape<T>, t: T) -> (Vec2<T>, Vec2<T>) {
    let (_, c1, _) = curve_derivatives(shape, t);
    let tau = c1.normalized();
    (-tau.perp(), tau)
}

fn curvature_at_theta<T: Scalar>(shape: &Shape<T>, t: T) -> T {
    let (_, c1, c2) = curve_derivatives(shape, t);
    let sp = c1.norm();
    c1.cross(c2) / (sp * sp * sp)
}
