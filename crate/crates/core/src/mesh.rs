//! Ring-and-fan triangulation of star-shaped domains.
//!
//! Ring `m` (1..=rings) carries `6m` vertices on the boundary curve scaled by
//! `m / rings` about the star centre; the outermost ring lies on the boundary
//! exactly. Each annulus between consecutive rings is split into six sectors
//! and fanned, giving `6 rings^2` triangles and `1 + 3 rings (rings + 1)`
//! vertices.

use std::collections::HashSet;
use std::io::{self, Write};

use thiserror::Error;

use crate::geometry::{DomainGeometry, GeometryError};
use crate::scalar::{Scalar, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("need at least 2 rings, got {0}")]
    TooFewRings(usize),
    #[error("bad geometry: {0}")]
    BadGeometry(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A vertex on the boundary curve with its arclength and frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryVertex<T> {
    pub index: usize,
    pub s: T,
    pub normal: Vec2<T>,
    pub tangent: Vec2<T>,
}

/// Pairs of (interior vertex, mirrored exterior vertex).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Collar {
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct TriMesh<T> {
    pub vertices: Vec<Vec2<T>>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<BoundaryVertex<T>>,
    pub collar: Option<Collar>,
    /// Vertices `0..domain_vertices` and triangles `0..domain_triangles`
    /// discretize the domain itself; anything beyond is exterior collar.
    pub domain_vertices: usize,
    pub domain_triangles: usize,
    pub rings: usize,
    pub h: T,
    boundary_slot: Vec<Option<usize>>,
}

/// First vertex index of ring `m` (ring 0 is the centre).
#[inline]
pub fn ring_start(m: usize) -> usize {
    if m == 0 {
        0
    } else {
        1 + 3 * m * (m - 1)
    }
}

/// Builds the ring-and-fan mesh of `geom` with `rings` rings.
pub fn build_mesh<T: Scalar>(geom: &DomainGeometry<T>, rings: usize) -> Result<TriMesh<T>, MeshError> {
    if rings < 2 {
        return Err(MeshError::TooFewRings(rings));
    }
    let two_pi = T::PI() + T::PI();
    let c = geom.center();
    if !geom.contains(c) {
        return Err(MeshError::BadGeometry("star centre lies outside the domain".into()));
    }
    let mf = T::from_usize_lossy(rings);
    let mut vertices = Vec::with_capacity(ring_start(rings + 1));
    let mut boundary = Vec::with_capacity(6 * rings);
    vertices.push(c);
    for m in 1..=rings {
        let count = 6 * m;
        let scale = T::from_usize_lossy(m) / mf;
        for j in 0..count {
            let theta = two_pi * T::from_usize_lossy(j) / T::from_usize_lossy(count);
            let edge = geom.point_at_theta(theta) - c;
            if m == rings {
                let (n, tau) = geom.frame_at_theta(theta);
                if n.dot(edge) <= T::zero() {
                    return Err(MeshError::BadGeometry(format!(
                        "domain is not star-shaped about its centre near theta = {theta}"
                    )));
                }
                boundary.push(BoundaryVertex {
                    index: vertices.len(),
                    s: geom.s_of_theta(theta),
                    normal: n,
                    tangent: tau,
                });
                vertices.push(c + edge);
            } else {
                vertices.push(c + edge * scale);
            }
        }
    }

    let mut triangles = Vec::with_capacity(6 * rings * rings);
    for m in 1..=rings {
        let outer = |i: usize| ring_start(m) + i % (6 * m);
        let inner = |j: usize| {
            if m == 1 {
                0
            } else {
                ring_start(m - 1) + j % (6 * (m - 1))
            }
        };
        for sector in 0..6 {
            let o0 = sector * m;
            let i0 = sector * (m - 1);
            for i in 0..m {
                triangles.push([outer(o0 + i), outer(o0 + i + 1), inner(i0 + i)]);
            }
            for i in 1..m {
                triangles.push([inner(i0 + i - 1), outer(o0 + i), inner(i0 + i)]);
            }
        }
    }

    let mut mesh = TriMesh {
        domain_vertices: vertices.len(),
        domain_triangles: triangles.len(),
        vertices,
        triangles,
        boundary,
        collar: None,
        rings,
        h: T::zero(),
        boundary_slot: Vec::new(),
    };
    mesh.refresh();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if mesh.signed_area(*tri) <= T::zero() {
            return Err(MeshError::BadGeometry(format!(
                "triangle {t} is inverted; domain too far from star-shaped"
            )));
        }
    }
    Ok(mesh)
}

/// Reflects every interior vertex closer than `depth` to the boundary into
/// the exterior and mirrors the triangles spanned by those vertices.
pub fn mirror_collar<T: Scalar>(
    geom: &DomainGeometry<T>,
    mesh: &TriMesh<T>,
    depth: T,
) -> Result<TriMesh<T>, MeshError> {
    if depth > geom.tubular_width() {
        return Err(GeometryError::OutOfTube {
            depth: depth.to_f64_lossy(),
            width: geom.tubular_width().to_f64_lossy(),
        }
        .into());
    }
    let mut out = mesh.clone();
    out.vertices.truncate(mesh.domain_vertices);
    out.triangles.truncate(mesh.domain_triangles);
    // image of each domain vertex under the reflection, if it has one
    let mut image: Vec<Option<usize>> = vec![None; mesh.domain_vertices];
    for b in &mesh.boundary {
        image[b.index] = Some(b.index);
    }
    let mut pairs = Vec::new();
    for v in 0..mesh.domain_vertices {
        if mesh.is_boundary(v) {
            continue;
        }
        let x = mesh.vertices[v];
        let Ok(tp) = geom.cartesian_to_tubular(x) else {
            continue;
        };
        if tp.y2 < depth {
            let mirrored = geom.reflect(x)?;
            image[v] = Some(out.vertices.len());
            pairs.push((v, out.vertices.len()));
            out.vertices.push(mirrored);
        }
    }
    for tri in &mesh.triangles[..mesh.domain_triangles] {
        if let (Some(a), Some(b), Some(c)) = (image[tri[0]], image[tri[1]], image[tri[2]]) {
            if [a, b, c].iter().zip(tri).all(|(m, o)| m == o) {
                continue;
            }
            // reflection reverses orientation
            let t = [a, c, b];
            if out.signed_area(t) > T::zero() {
                out.triangles.push(t);
            }
        }
    }
    out.collar = Some(Collar { pairs });
    out.refresh();
    Ok(out)
}

impl<T: Scalar> TriMesh<T> {
    /// A bare mesh without boundary tags, e.g. for element-level checks.
    pub fn from_parts(vertices: Vec<Vec2<T>>, triangles: Vec<[usize; 3]>) -> Self {
        let mut m = TriMesh {
            domain_vertices: vertices.len(),
            domain_triangles: triangles.len(),
            vertices,
            triangles,
            boundary: Vec::new(),
            collar: None,
            rings: 0,
            h: T::zero(),
            boundary_slot: Vec::new(),
        };
        m.refresh();
        m
    }

    fn refresh(&mut self) {
        let mut slot = vec![None; self.vertices.len()];
        for (i, b) in self.boundary.iter().enumerate() {
            slot[b.index] = Some(i);
        }
        self.boundary_slot = slot;
        self.h = self
            .edges()
            .into_iter()
            .map(|(a, b)| self.vertices[a].dist(self.vertices[b]))
            .fold(T::zero(), T::max);
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary_slot.get(v).is_some_and(|s| s.is_some())
    }

    /// Boundary record of vertex `v`, if it lies on the boundary.
    pub fn boundary_of(&self, v: usize) -> Option<&BoundaryVertex<T>> {
        self.boundary_slot.get(v).copied().flatten().map(|i| &self.boundary[i])
    }

    pub fn signed_area(&self, tri: [usize; 3]) -> T {
        let [a, b, c] = tri.map(|i| self.vertices[i]);
        (b - a).cross(c - a) * T::lit(0.5)
    }

    pub fn area(&self) -> T {
        self.triangles[..self.domain_triangles]
            .iter()
            .map(|t| self.signed_area(*t))
            .sum()
    }

    /// Undirected edges, each once, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut set = HashSet::with_capacity(self.triangles.len() * 2);
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                set.insert((a.min(b), a.max(b)));
            }
        }
        let mut e: Vec<_> = set.into_iter().collect();
        e.sort_unstable();
        e
    }

    /// Vertex adjacency lists.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (a, b) in self.edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Lumped (one third of incident triangle area) vertex masses over the
    /// domain triangles.
    pub fn lumped_mass(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.vertices.len()];
        let third = T::one() / T::lit(3.0);
        for t in &self.triangles[..self.domain_triangles] {
            let a = self.signed_area(*t) * third;
            for &v in t {
                m[v] += a;
            }
        }
        m
    }

    /// Checks positive areas, boundary vertices on the curve, and the
    /// Euler characteristic of the domain part.
    pub fn audit(&self, geom: &DomainGeometry<T>) -> Result<(), String> {
        for (i, t) in self.triangles.iter().enumerate() {
            if self.signed_area(*t) <= T::zero() {
                return Err(format!("triangle {i} has non-positive area"));
            }
        }
        for b in &self.boundary {
            let p = self.vertices[b.index];
            let on = geom.boundary_point(b.s);
            if p.dist(on) > T::lit(1e-10) {
                return Err(format!("boundary vertex {} is off the curve", b.index));
            }
        }
        let domain = TriMesh {
            triangles: self.triangles[..self.domain_triangles].to_vec(),
            ..self.clone()
        };
        let e = domain.edges().len() as i64;
        let v = self.domain_vertices as i64;
        let f = self.domain_triangles as i64;
        if v - e + f != 1 {
            return Err(format!("Euler characteristic {} != 1", v - e + f));
        }
        Ok(())
    }

    /// Plain-text OFF-style export: header, `x y` lines, `i j k` lines.
    pub fn write_off<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "OFF")?;
        writeln!(w, "{} {} 0", self.vertices.len(), self.triangles.len())?;
        for p in &self.vertices {
            writeln!(w, "{} {}", p.x.to_f64_lossy(), p.y.to_f64_lossy())?;
        }
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    pub fn locator(&self) -> PointLocator<'_, T> {
        PointLocator::new(self)
    }
}

/// Bucket grid for locating the triangle containing a point.
pub struct PointLocator<'a, T> {
    mesh: &'a TriMesh<T>,
    origin: Vec2<T>,
    cell: T,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl<'a, T: Scalar> PointLocator<'a, T> {
    pub fn new(mesh: &'a TriMesh<T>) -> Self {
        let mut lo = Vec2::new(T::infinity(), T::infinity());
        let mut hi = Vec2::new(T::neg_infinity(), T::neg_infinity());
        for p in &mesh.vertices {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let n = ((mesh.triangles.len() as f64).sqrt().ceil() as usize).max(1);
        let span = (hi.x - lo.x).max(hi.y - lo.y).max(T::lit(1e-12));
        let cell = span / T::from_usize_lossy(n) * T::lit(1.0001);
        let nx = ((hi.x - lo.x) / cell).to_usize().unwrap_or(0) + 1;
        let ny = ((hi.y - lo.y) / cell).to_usize().unwrap_or(0) + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (ti, t) in mesh.triangles.iter().enumerate() {
            let ps = t.map(|i| mesh.vertices[i]);
            let bx0 = ps.iter().map(|p| p.x).fold(T::infinity(), T::min);
            let bx1 = ps.iter().map(|p| p.x).fold(T::neg_infinity(), T::max);
            let by0 = ps.iter().map(|p| p.y).fold(T::infinity(), T::min);
            let by1 = ps.iter().map(|p| p.y).fold(T::neg_infinity(), T::max);
            let (i0, j0) = Self::cell_of(lo, cell, nx, ny, Vec2::new(bx0, by0));
            let (i1, j1) = Self::cell_of(lo, cell, nx, ny, Vec2::new(bx1, by1));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(ti as u32);
                }
            }
        }
        Self {
            mesh,
            origin: lo,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn cell_of(lo: Vec2<T>, cell: T, nx: usize, ny: usize, p: Vec2<T>) -> (usize, usize) {
        let fx = ((p.x - lo.x) / cell).floor();
        let fy = ((p.y - lo.y) / cell).floor();
        let clamp = |f: T, n: usize| -> usize {
            if f <= T::zero() {
                0
            } else {
                f.to_usize().unwrap_or(n - 1).min(n - 1)
            }
        };
        (clamp(fx, nx), clamp(fy, ny))
    }

    /// Barycentric coordinates of `p` in triangle `t`.
    pub fn barycentric(&self, t: usize, p: Vec2<T>) -> [T; 3] {
        let [a, b, c] = self.mesh.triangles[t].map(|i| self.mesh.vertices[i]);
        let det = (b - a).cross(c - a);
        let l1 = (p - a).cross(c - a) / det;
        let l2 = (b - a).cross(p - a) / det;
        [T::one() - l1 - l2, l1, l2]
    }

    /// Triangle containing `p` with barycentric coordinates. Points outside
    /// the mesh get the nearest candidate triangle (least negative
    /// barycentric coordinate) and extrapolated coordinates.
    pub fn locate(&self, p: Vec2<T>) -> Option<(usize, [T; 3])> {
        let (ci, cj) = Self::cell_of(self.origin, self.cell, self.nx, self.ny, p);
        let tol = -T::lit(1e-12);
        let mut best: Option<(usize, [T; 3], T)> = None;
        for radius in 0..3usize {
            let i0 = ci.saturating_sub(radius);
            let j0 = cj.saturating_sub(radius);
            let i1 = (ci + radius).min(self.nx - 1);
            let j1 = (cj + radius).min(self.ny - 1);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let on_ring = i == i0 || i == i1 || j == j0 || j == j1;
                    if radius > 0 && !on_ring {
                        continue;
                    }
                    for &t in &self.buckets[j * self.nx + i] {
                        let l = self.barycentric(t as usize, p);
                        let worst = l[0].min(l[1]).min(l[2]);
                        if worst >= tol {
                            return Some((t as usize, l));
                        }
                        if best.as_ref().is_none_or(|b| worst > b.2) {
                            best = Some((t as usize, l, worst));
                        }
                    }
                }
            }
            if best.is_some() && radius >= 1 {
                break;
            }
        }
        best.map(|(t, l, _)| (t, l))
    }
}
