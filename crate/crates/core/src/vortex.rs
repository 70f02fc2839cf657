//! Topological diagnostics: bad set, ball covering, interior degrees and
//! boundary indices.

use std::collections::BTreeSet;

use num_rational::Ratio;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::fields::{EnergyParams, VectorField};
use crate::geometry::DomainGeometry;
use crate::mesh::{PointLocator, TriMesh};
use crate::scalar::{wrap_angle, Scalar, Vec2};

/// Loops are rejected where the field modulus drops below this.
pub const LOOP_FLOOR: f64 = 0.1;
/// Maximal relative normal component of u at the arc endpoints.
pub const ENDPOINT_TOLERANCE: f64 = 0.2;
const LOOP_MULTIPLIERS: [f64; 3] = [1.5, 2.0, 2.5];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VortexError {
    #[error("|u| = {modulus:.3e} on the loop of ball {ball}")]
    DegenerateOnLoop { ball: usize, modulus: f64 },
    #[error("|u| = {modulus:.3e} on the arc of ball {ball}")]
    DegenerateOnArc { ball: usize, modulus: f64 },
    #[error("u is not tangential at an arc endpoint of ball {ball} (ratio {ratio:.3})")]
    NotTangentialAtEndpoints { ball: usize, ratio: f64 },
    #[error("the circle of radius {radius} about ball {ball} does not cross the boundary on both sides")]
    ArcNotFound { ball: usize, radius: f64 },
    #[error("no loop around interior ball {ball} fits inside the domain")]
    LoopDoesNotFit { ball: usize },
}

impl VortexError {
    fn with_ball(self, b: usize) -> Self {
        match self {
            Self::DegenerateOnLoop { modulus, .. } => Self::DegenerateOnLoop { ball: b, modulus },
            Self::DegenerateOnArc { modulus, .. } => Self::DegenerateOnArc { ball: b, modulus },
            Self::NotTangentialAtEndpoints { ratio, .. } => Self::NotTangentialAtEndpoints { ball: b, ratio },
            Self::ArcNotFound { radius, .. } => Self::ArcNotFound { ball: b, radius },
            Self::LoopDoesNotFit { .. } => Self::LoopDoesNotFit { ball: b },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BallKind<T> {
    Interior,
    /// Centre on the boundary at arclength `s`.
    Boundary {
        s: T,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ball<T> {
    pub center: Vec2<T>,
    pub radius: T,
    pub kind: BallKind<T>,
    /// Bad vertices enclosed.
    pub members: Vec<usize>,
}

impl<T: Scalar> Ball<T> {
    pub fn is_boundary(&self) -> bool {
        matches!(self.kind, BallKind::Boundary { .. })
    }

    pub fn contains(&self, x: Vec2<T>) -> bool {
        x.dist(self.center) <= self.radius
    }

    fn disjoint_from(&self, other: &Self) -> bool {
        self.center.dist(other.center) >= self.radius + other.radius
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InteriorVortex {
    pub x: f64,
    pub y: f64,
    pub r: f64,
    pub d: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryVortex {
    pub x: f64,
    pub y: f64,
    pub r: f64,
    #[serde(rename = "D")]
    pub index: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VortexReport {
    pub interior: Vec<InteriorVortex>,
    pub boundary: Vec<BoundaryVortex>,
    #[serde(serialize_with = "ratio_as_string")]
    pub index_sum: Ratio<i64>,
    pub bad_vertex_count: usize,
}

fn ratio_as_string<S: Serializer>(r: &Ratio<i64>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl VortexReport {
    pub fn from_parts(interior: Vec<InteriorVortex>, boundary: Vec<BoundaryVortex>, bad_vertex_count: usize) -> Self {
        let d: i64 = interior.iter().map(|v| v.d).sum();
        let dd: i64 = boundary.iter().map(|v| v.index).sum();
        Self {
            interior,
            boundary,
            index_sum: Ratio::from_integer(d) + Ratio::new(dd, 2),
            bad_vertex_count,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    fn balls(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.interior
            .iter()
            .map(|v| (v.x, v.y, v.r))
            .chain(self.boundary.iter().map(|v| (v.x, v.y, v.r)))
    }
}

/// Vertices with `|u| < threshold`.
pub fn bad_set<T: Scalar>(u: &VectorField<T>, threshold: T) -> Vec<usize> {
    u.values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() < threshold)
        .map(|(i, _)| i)
        .collect()
}

/// Edge-connected components of `bad`, each enclosed in a ball, merged
/// until the balls are mutually disjoint.
pub fn cover_components<T: Scalar>(
    bad: &[usize],
    mesh: &TriMesh<T>,
    geom: &DomainGeometry<T>,
    radius_mult: T,
    eps: T,
) -> Vec<Ball<T>> {
    let in_bad: BTreeSet<usize> = bad.iter().copied().collect();
    let nbrs = mesh.neighbors();
    let mut seen = BTreeSet::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &v in &in_bad {
        if !seen.insert(v) {
            continue;
        }
        let mut comp = vec![v];
        let mut stack = vec![v];
        while let Some(a) = stack.pop() {
            for &b in &nbrs[a] {
                if in_bad.contains(&b) && seen.insert(b) {
                    comp.push(b);
                    stack.push(b);
                }
            }
        }
        comp.sort_unstable();
        groups.push(comp);
    }
    let min_radius = radius_mult * eps;
    let mut balls: Vec<Ball<T>> = groups.into_iter().map(|g| enclose(g, mesh, geom, min_radius)).collect();
    loop {
        let mut pair = None;
        'search: for i in 0..balls.len() {
            for j in i + 1..balls.len() {
                if !balls[i].disjoint_from(&balls[j]) {
                    pair = Some((i, j));
                    break 'search;
                }
            }
        }
        let Some((i, j)) = pair else { break };
        let bj = balls.swap_remove(j);
        let bi = balls.swap_remove(i);
        let mut members = bi.members;
        members.extend(bj.members);
        members.sort_unstable();
        let merged = enclose(members, mesh, geom, min_radius);
        // the merged ball also covers the two it replaces
        let radius = merged
            .radius
            .max(merged.center.dist(bi.center) + bi.radius)
            .max(merged.center.dist(bj.center) + bj.radius);
        balls.push(Ball { radius, ..merged });
    }
    balls.sort_by(|a, b| {
        a.center
            .x
            .partial_cmp(&b.center.x)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.center.y.partial_cmp(&b.center.y).unwrap_or(std::cmp::Ordering::Equal))
    });
    balls
}

fn enclose<T: Scalar>(members: Vec<usize>, mesh: &TriMesh<T>, geom: &DomainGeometry<T>, min_radius: T) -> Ball<T> {
    let n = T::from_usize_lossy(members.len());
    let centroid = members.iter().fold(Vec2::zero(), |acc, &v| acc + mesh.vertices[v]) / n;
    let touches = members.iter().any(|&v| mesh.is_boundary(v));
    let (center, kind) = if touches {
        let theta = geom.closest_theta(centroid);
        let s = geom.s_of_theta(theta);
        (geom.boundary_point(s), BallKind::Boundary { s })
    } else {
        (centroid, BallKind::Interior)
    };
    let extent = members
        .iter()
        .map(|&v| mesh.vertices[v].dist(center))
        .fold(T::zero(), T::max);
    Ball {
        center,
        radius: extent.max(min_radius),
        kind,
        members,
    }
}

/// Degree of a closed sampled loop: wrapped phase increments summed and
/// divided by 2 pi. The last sample connects back to the first.
pub fn winding_number<T: Scalar>(samples: &[Vec2<T>]) -> Result<i64, VortexError> {
    check_floor(samples).map_err(|m| VortexError::DegenerateOnLoop { ball: 0, modulus: m })?;
    let n = samples.len();
    let total: T = (0..n)
        .map(|i| {
            let a = samples[i];
            let b = samples[(i + 1) % n];
            wrap_angle(b.angle() - a.angle())
        })
        .sum();
    Ok((total / T::TAU()).round().to_i64().unwrap_or(0))
}

fn check_floor<T: Scalar>(samples: &[Vec2<T>]) -> Result<(), f64> {
    let floor = T::lit(LOOP_FLOOR);
    match samples.iter().map(|v| v.norm()).find(|m| !(*m >= floor)) {
        Some(m) => Err(m.to_f64_lossy()),
        None => Ok(()),
    }
}

/// Samples `f` counterclockwise on a circle with enough points that each
/// chord is at most `h`.
pub fn sample_circle<T: Scalar, F: Fn(Vec2<T>) -> Vec2<T>>(f: F, c: Vec2<T>, r: T, h: T) -> Vec<Vec2<T>> {
    let n = ((T::TAU() * r / h).ceil().to_usize().unwrap_or(64)).clamp(64, 1 << 16);
    (0..n)
        .map(|i| {
            let t = T::TAU() * T::from_usize_lossy(i) / T::from_usize_lossy(n);
            f(c + Vec2::from_angle(t) * r)
        })
        .collect()
}

/// A boundary curve parametrized by arclength, traversed with the domain
/// on its left.
pub trait BoundaryCurve<T: Scalar> {
    fn point(&self, s: T) -> Vec2<T>;
    /// Unit tangent.
    fn tangent(&self, s: T) -> Vec2<T>;
    /// How far along the curve to search for arc endpoints.
    fn search_span(&self) -> T;
    /// Arclength step used while searching.
    fn search_step(&self) -> T;
}

impl<T: Scalar> BoundaryCurve<T> for DomainGeometry<T> {
    fn point(&self, s: T) -> Vec2<T> {
        self.boundary_point(s)
    }

    fn tangent(&self, s: T) -> Vec2<T> {
        self.frame(s).1
    }

    fn search_span(&self) -> T {
        self.arclength_total() * T::lit(0.5)
    }

    fn search_step(&self) -> T {
        self.arclength_total() / T::lit(4096.0)
    }
}

/// The line `x2 = 0` with the domain `x2 > 0` above it.
#[derive(Clone, Copy, Debug, Default)]
pub struct FlatBoundary;

impl<T: Scalar> BoundaryCurve<T> for FlatBoundary {
    fn point(&self, s: T) -> Vec2<T> {
        Vec2::new(s, T::zero())
    }

    fn tangent(&self, _s: T) -> Vec2<T> {
        Vec2::new(T::one(), T::zero())
    }

    fn search_span(&self) -> T {
        T::lit(1e3)
    }

    fn search_step(&self) -> T {
        T::lit(1e-2)
    }
}

/// First arclength offset `t` in `(0, span]` along `dir` at which the
/// curve leaves the disc of radius `r` about `q`.
pub(crate) fn crossing<T: Scalar, C: BoundaryCurve<T>>(curve: &C, s_q: T, r: T, dir: T) -> Option<T> {
    let q = curve.point(s_q);
    let step = curve.search_step();
    let span = curve.search_span();
    let outside = |t: T| curve.point(s_q + dir * t).dist(q) >= r;
    let mut lo = T::zero();
    let mut hi = step;
    while !outside(hi) {
        lo = hi;
        hi += step;
        if hi > span {
            return None;
        }
    }
    for _ in 0..60 {
        let mid = (lo + hi) * T::lit(0.5);
        if outside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// The part of the circle of radius `r` about the boundary point at `s_q`
/// that lies inside the domain, from the endpoint ahead of `s_q` round to
/// the one behind it.
#[derive(Clone, Debug)]
pub struct InteriorArc<T> {
    pub s_a: T,
    pub s_b: T,
    pub phi_a: T,
    pub sweep: T,
    /// Samples including both endpoints, which lie on the curve.
    pub points: Vec<Vec2<T>>,
}

impl<T: Scalar> InteriorArc<T> {
    /// `None` if the circle does not cross the curve on both sides.
    pub fn new<C: BoundaryCurve<T>>(curve: &C, s_q: T, r: T, h: T) -> Option<Self> {
        let ta = crossing(curve, s_q, r, T::one())?;
        let tb = crossing(curve, s_q, r, -T::one())?;
        let (s_a, s_b) = (s_q + ta, s_q - tb);
        let q = curve.point(s_q);
        let (pa, pb) = (curve.point(s_a), curve.point(s_b));
        let phi_a = (pa - q).angle();
        let mut sweep = (pb - q).angle() - phi_a;
        while sweep <= T::zero() {
            sweep += T::TAU();
        }
        let n = ((sweep * r / h).ceil().to_usize().unwrap_or(32)).clamp(32, 1 << 16);
        let mut points = Vec::with_capacity(n + 1);
        points.push(pa);
        for i in 1..n {
            let phi = phi_a + sweep * T::from_usize_lossy(i) / T::from_usize_lossy(n);
            points.push(q + Vec2::from_angle(phi) * r);
        }
        points.push(pb);
        Some(Self {
            s_a,
            s_b,
            phi_a,
            sweep,
            points,
        })
    }
}

/// Boundary index of the sampler `f` about the boundary point at `s_q`:
/// the phase change of u along the interior arc of radius `r`, minus the
/// phase change of the tangent between the arc endpoints, in units of pi.
pub fn boundary_index_with<T: Scalar, C: BoundaryCurve<T>, F: Fn(Vec2<T>) -> Vec2<T>>(
    f: F,
    curve: &C,
    s_q: T,
    r: T,
    h: T,
) -> Result<i64, VortexError> {
    let arc = InteriorArc::new(curve, s_q, r, h).ok_or(VortexError::ArcNotFound {
        ball: 0,
        radius: r.to_f64_lossy(),
    })?;
    let (ta, tb) = (arc.s_a - s_q, s_q - arc.s_b);
    let (sa, sb) = (arc.s_a, arc.s_b);
    let samples: Vec<Vec2<T>> = arc.points.iter().map(|&x| f(x)).collect();
    let n = samples.len() - 1;
    check_floor(&samples).map_err(|m| VortexError::DegenerateOnArc { ball: 0, modulus: m })?;
    for (u, s) in [(samples[0], sa), (samples[n], sb)] {
        let tau = curve.tangent(s);
        let ratio = u.cross(tau).abs() / u.norm();
        if ratio > T::lit(ENDPOINT_TOLERANCE) {
            return Err(VortexError::NotTangentialAtEndpoints {
                ball: 0,
                ratio: ratio.to_f64_lossy(),
            });
        }
    }
    let lift: T = samples
        .windows(2)
        .map(|w| wrap_angle(w[1].angle() - w[0].angle()))
        .sum();
    // tangent phase from sa back to sb, accumulated along the curve
    let m = ((ta + tb) / h).ceil().to_usize().unwrap_or(32).clamp(32, 1 << 16);
    let turn: T = (0..m)
        .map(|i| {
            let s0 = sa - (ta + tb) * T::from_usize_lossy(i) / T::from_usize_lossy(m);
            let s1 = sa - (ta + tb) * T::from_usize_lossy(i + 1) / T::from_usize_lossy(m);
            wrap_angle(curve.tangent(s1).angle() - curve.tangent(s0).angle())
        })
        .sum();
    Ok(((lift - turn) / T::PI()).round().to_i64().unwrap_or(0))
}

/// Boundary index of a discrete field about a boundary ball, using an arc
/// at `loop_radius`.
pub fn boundary_index<T: Scalar>(
    u: &VectorField<T>,
    mesh: &TriMesh<T>,
    loc: &PointLocator<'_, T>,
    geom: &DomainGeometry<T>,
    s_q: T,
    loop_radius: T,
) -> Result<i64, VortexError> {
    boundary_index_with(|x| u.eval(mesh, loc, x), geom, s_q, loop_radius, mesh.h * T::lit(0.25))
}

/// Degree of a discrete field on the circle of radius `r` about `c`.
pub fn interior_degree<T: Scalar>(
    u: &VectorField<T>,
    mesh: &TriMesh<T>,
    loc: &PointLocator<'_, T>,
    c: Vec2<T>,
    r: T,
) -> Result<i64, VortexError> {
    winding_number(&sample_circle(|x| u.eval(mesh, loc, x), c, r, mesh.h * T::lit(0.25)))
}

/// Distance from `c` to the boundary, by sampling.
fn boundary_distance<T: Scalar>(geom: &DomainGeometry<T>, c: Vec2<T>) -> T {
    let theta = geom.closest_theta(c);
    geom.point_at_theta(theta).dist(c)
}

/// Full pipeline: bad set, covering with radius `10 eps`, then a degree or
/// boundary index per ball.
pub fn analyze<T: Scalar>(
    u: &VectorField<T>,
    p: &EnergyParams<T>,
    mesh: &TriMesh<T>,
    geom: &DomainGeometry<T>,
) -> Result<VortexReport, VortexError> {
    analyze_with(u, p.eps, T::lit(10.0), mesh, geom)
}

pub fn analyze_with<T: Scalar>(
    u: &VectorField<T>,
    eps: T,
    radius_mult: T,
    mesh: &TriMesh<T>,
    geom: &DomainGeometry<T>,
) -> Result<VortexReport, VortexError> {
    let bad = bad_set(u, T::lit(0.5));
    let balls = cover_components(&bad, mesh, geom, radius_mult, eps);
    let loc = mesh.locator();
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for (bi, ball) in balls.iter().enumerate() {
        let mut last_err = None;
        let mut done = false;
        for mult in LOOP_MULTIPLIERS {
            let mut r = ball.radius * T::lit(mult);
            let res = match ball.kind {
                BallKind::Interior => {
                    // keep the loop inside the domain but outside the cluster
                    let room = boundary_distance(geom, ball.center);
                    let extent = ball
                        .members
                        .iter()
                        .map(|&v| mesh.vertices[v].dist(ball.center))
                        .fold(T::zero(), T::max);
                    if r >= room * T::lit(0.95) {
                        r = (extent + room) * T::lit(0.5);
                    }
                    if r <= extent {
                        Err(VortexError::LoopDoesNotFit { ball: 0 })
                    } else {
                        interior_degree(u, mesh, &loc, ball.center, r).map(|d| (d, r))
                    }
                }
                BallKind::Boundary { s } => boundary_index(u, mesh, &loc, geom, s, r).map(|d| (d, r)),
            };
            match res {
                Ok((d, _)) => {
                    let (x, y) = (ball.center.x.to_f64_lossy(), ball.center.y.to_f64_lossy());
                    let rr = ball.radius.to_f64_lossy();
                    if ball.is_boundary() {
                        boundary.push(BoundaryVortex { x, y, r: rr, index: d });
                    } else {
                        interior.push(InteriorVortex { x, y, r: rr, d });
                    }
                    done = true;
                    break;
                }
                Err(e) => last_err = Some(e.with_ball(bi)),
            }
        }
        if !done {
            return Err(last_err.expect("at least one attempt"));
        }
    }
    Ok(VortexReport::from_parts(interior, boundary, bad.len()))
}

/// True iff every vertex outside the report's balls has `|u| >= threshold`.
pub fn eta_check<T: Scalar>(u: &VectorField<T>, mesh: &TriMesh<T>, report: &VortexReport, threshold: T) -> bool {
    mesh.vertices.iter().zip(&u.values).all(|(x, v)| {
        let (px, py) = (x.x.to_f64_lossy(), x.y.to_f64_lossy());
        let covered = report
            .balls()
            .any(|(cx, cy, r)| ((px - cx).powi(2) + (py - cy).powi(2)).sqrt() <= r * (1.0 + 1e-12));
        covered || v.norm() >= threshold
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Penalty;
    use crate::geometry::Shape;
    use crate::mesh::build_mesh;
    use crate::solver::mollified_vortex;

    fn disk(rings: usize) -> (DomainGeometry<f64>, TriMesh<f64>) {
        let g = DomainGeometry::new(Shape::UnitDisk).unwrap();
        let m = build_mesh(&g, rings).unwrap();
        (g, m)
    }

    fn polygon(n: usize, f: impl Fn(f64, f64) -> Vec2<f64>) -> Vec<Vec2<f64>> {
        (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                f(t.cos(), t.sin())
            })
            .collect()
    }

    #[test]
    fn bad_set_examples() {
        let (_, m) = disk(8);
        let one = VectorField::constant(m.vertex_count(), Vec2::new(1.0, 0.0));
        assert!(bad_set(&one, 0.5).is_empty());
        let x = VectorField::from_fn(&m, |x| x);
        let bad = bad_set(&x, 0.5);
        for (i, v) in m.vertices.iter().enumerate() {
            assert_eq!(bad.contains(&i), v.norm() < 0.5);
        }
        let vort = VectorField::from_fn(&m, |x| mollified_vortex(x, 0.1));
        let bad = bad_set(&vort, 0.5);
        assert!(!bad.is_empty());
        assert!(bad.iter().all(|&i| m.vertices[i].norm() < 0.15));
    }

    #[test]
    fn winding_examples() {
        assert_eq!(winding_number(&polygon(64, Vec2::new)).unwrap(), 1);
        assert_eq!(winding_number(&polygon(64, |_, _| Vec2::new(1.0, 0.0))).unwrap(), 0);
        let sq = polygon(128, |c, s| Vec2::new(c * c - s * s, 2.0 * c * s));
        assert_eq!(winding_number(&sq).unwrap(), 2);
        let anti = polygon(64, |c, s| Vec2::new(c, -s));
        assert_eq!(winding_number(&anti).unwrap(), -1);
        let zero = polygon(64, |c, _| Vec2::new(c * 0.05, 0.0));
        assert!(matches!(
            winding_number(&zero),
            Err(VortexError::DegenerateOnLoop { .. })
        ));
    }

    #[test]
    fn flat_half_vortices() {
        let h = 0.01;
        let half = |x: Vec2<f64>| Vec2::from_angle(x.angle());
        assert_eq!(boundary_index_with(half, &FlatBoundary, 0.0, 1.0, h).unwrap(), 1);
        let constant = |_x: Vec2<f64>| Vec2::new(1.0, 0.0);
        assert_eq!(boundary_index_with(constant, &FlatBoundary, 0.0, 1.0, h).unwrap(), 0);
        let double = |x: Vec2<f64>| Vec2::from_angle(2.0 * x.angle());
        assert_eq!(boundary_index_with(double, &FlatBoundary, 0.0, 1.0, h).unwrap(), 2);
        let tilted = |_x: Vec2<f64>| Vec2::new(1.0, 1.0);
        assert!(matches!(
            boundary_index_with(tilted, &FlatBoundary, 0.0, 1.0, h),
            Err(VortexError::NotTangentialAtEndpoints { .. })
        ));
    }

    #[test]
    fn enclosed_interior_vortex_counts_twice() {
        // (z - p)(z - conj p) is real on the line and has one zero above it
        let p = Vec2::new(0.0, 0.3);
        let f = |x: Vec2<f64>| {
            let a = x - p;
            let b = x - Vec2::new(p.x, -p.y);
            let w = Vec2::new(a.x * b.x - a.y * b.y, a.x * b.y + a.y * b.x);
            w / w.norm()
        };
        assert_eq!(boundary_index_with(f, &FlatBoundary, 0.0, 1.0, 0.01).unwrap(), 2);
    }

    #[test]
    fn disk_boundary_index_of_tangent_field() {
        let (g, m) = disk(24);
        let loc = m.locator();
        let tau = VectorField::from_fn(&m, |x| x.perp() / x.norm().max(0.3));
        assert_eq!(boundary_index(&tau, &m, &loc, &g, 0.0, 0.4).unwrap(), 0);
        // a constant field projected onto the tangent flips orientation at (1, 0)
        let p = EnergyParams::tangential(0.1, 1.0, Penalty::Div).unwrap();
        let mut e1 = VectorField::constant(m.vertex_count(), Vec2::new(1.0, 0.0));
        crate::fields::apply_bc(&mut e1, &p.bc, &m);
        assert_eq!(boundary_index(&e1, &m, &loc, &g, 0.0, 0.4).unwrap(), 1);
        let quarter = g.arclength_total() / 4.0;
        assert_eq!(boundary_index(&e1, &m, &loc, &g, quarter, 0.4).unwrap(), 0);
    }

    #[test]
    fn cover_single_cluster_and_merge() {
        let (g, m) = disk(40);
        let vort = VectorField::from_fn(&m, |x| mollified_vortex(x, 0.05));
        let bad = bad_set(&vort, 0.5);
        let balls = cover_components(&bad, &m, &g, 10.0, 0.01);
        assert_eq!(balls.len(), 1);
        assert!(bad.iter().all(|&v| balls[0].contains(m.vertices[v])));
        assert!(!balls[0].is_boundary());

        // two clusters 3 eps apart, radius 10 eps each
        let eps = 0.02;
        let (c1, c2) = (Vec2::new(-1.5 * eps, 0.0), Vec2::new(1.5 * eps, 0.0));
        let pick: Vec<usize> = (0..m.vertex_count())
            .filter(|&i| m.vertices[i].dist(c1) < 0.011 || m.vertices[i].dist(c2) < 0.011)
            .collect();
        let balls = cover_components(&pick, &m, &g, 10.0, eps);
        assert_eq!(balls.len(), 1);
        assert!(cover_components(&[], &m, &g, 10.0, eps).is_empty());
    }

    #[test]
    fn merged_balls_are_disjoint() {
        let (g, m) = disk(24);
        let pick: Vec<usize> = (0..m.vertex_count()).step_by(37).collect();
        let balls = cover_components(&pick, &m, &g, 10.0, 0.02);
        for i in 0..balls.len() {
            for j in i + 1..balls.len() {
                assert!(balls[i].disjoint_from(&balls[j]));
            }
        }
        for &v in &pick {
            assert!(balls.iter().any(|b| b.contains(m.vertices[v])));
        }
    }

    #[test]
    fn boundary_cluster_snaps_to_curve() {
        let (g, m) = disk(24);
        let pick: Vec<usize> = (0..m.vertex_count())
            .filter(|&i| m.vertices[i].dist(Vec2::new(1.0, 0.0)) < 0.1)
            .collect();
        let balls = cover_components(&pick, &m, &g, 10.0, 0.01);
        assert_eq!(balls.len(), 1);
        assert!(balls[0].is_boundary());
        assert!((balls[0].center.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn analyze_synthetic_vortex() {
        let (g, m) = disk(40);
        let p = EnergyParams::tangential(0.03, 1.0, Penalty::Div).unwrap();
        let u = VectorField::from_fn(&m, |x| mollified_vortex(x, 0.03));
        let rep = analyze(&u, &p, &m, &g).unwrap();
        assert_eq!(rep.interior.len(), 1);
        assert_eq!(rep.interior[0].d, 1);
        assert!(rep.boundary.is_empty());
        assert_eq!(rep.index_sum, Ratio::from_integer(1));
        assert!(eta_check(&u, &m, &rep, 0.5));
        let json: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        assert_eq!(json["index_sum"], "1");
        assert_eq!(json["interior"][0]["d"], 1);
    }

    #[test]
    fn eta_check_flags_uncovered_bad_vertex() {
        let (_, m) = disk(8);
        let mut u = VectorField::constant(m.vertex_count(), Vec2::new(1.0, 0.0));
        let empty = VortexReport::from_parts(vec![], vec![], 0);
        assert!(eta_check(&u, &m, &empty, 0.5));
        u.values[5] = Vec2::new(0.1, 0.0);
        assert!(!eta_check(&u, &m, &empty, 0.5));
    }

    #[test]
    fn index_sum_is_half_integer() {
        let rep = VortexReport::from_parts(
            vec![],
            vec![
                BoundaryVortex {
                    x: 1.0,
                    y: 0.0,
                    r: 0.1,
                    index: 1,
                },
                BoundaryVortex {
                    x: -1.0,
                    y: 0.0,
                    r: 0.1,
                    index: 1,
                },
            ],
            0,
        );
        assert_eq!(rep.index_sum, Ratio::from_integer(1));
        let half = VortexReport::from_parts(
            vec![],
            vec![BoundaryVortex {
                x: 1.0,
                y: 0.0,
                r: 0.1,
                index: 1,
            }],
            0,
        );
        assert_eq!(half.index_sum, Ratio::new(1, 2));
        assert!(*half.index_sum.denom() <= 2);
    }
}
