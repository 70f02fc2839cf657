//! Quiver plots of a director field with the vortex balls circled.

use std::fmt::Write as _;

use serde::Deserialize;

use crate::geometry::DomainGeometry;
use crate::io::FieldRows;
use crate::scalar::Vec2;

const SIZE: f64 = 640.0;
const MARGIN: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
pub struct BallMark {
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

/// The parts of a vortex report the plot needs.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
pub struct ReportMarks {
    pub interior: Vec<BallMark>,
    pub boundary: Vec<BallMark>,
}

impl ReportMarks {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Closed boundary polygon of `geom`.
pub fn outline_of(geom: &DomainGeometry<f64>, n: usize) -> Vec<Vec2<f64>> {
    let l = geom.arclength_total();
    (0..n).map(|i| geom.boundary_point(l * i as f64 / n as f64)).collect()
}

/// Star-shaped envelope of a point cloud: the farthest point from the
/// centroid in each of `buckets` angular sectors.
pub fn envelope(points: &[Vec2<f64>], buckets: usize) -> Vec<Vec2<f64>> {
    if points.is_empty() {
        return Vec::new();
    }
    let c = points.iter().fold(Vec2::zero(), |a, &p| a + p) * (1.0 / points.len() as f64);
    let mut best: Vec<Option<(f64, Vec2<f64>)>> = vec![None; buckets];
    for &p in points {
        let d = p - c;
        let t = (d.y.atan2(d.x) + std::f64::consts::PI) / std::f64::consts::TAU;
        let b = ((t * buckets as f64) as usize).min(buckets - 1);
        let r = d.norm();
        if best[b].is_none_or(|(rb, _)| r > rb) {
            best[b] = Some((r, p));
        }
    }
    best.into_iter().flatten().map(|(_, p)| p).collect()
}

struct View {
    min: Vec2<f64>,
    scale: f64,
    width: f64,
    height: f64,
}

impl View {
    fn fit(pts: impl Iterator<Item = Vec2<f64>>) -> Self {
        let (mut lo, mut hi) = (
            Vec2::new(f64::INFINITY, f64::INFINITY),
            Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for p in pts {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if !lo.x.is_finite() {
            lo = Vec2::new(-1.0, -1.0);
            hi = Vec2::new(1.0, 1.0);
        }
        let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-9);
        let scale = (SIZE - 2.0 * MARGIN) / span;
        Self {
            min: lo,
            scale,
            width: (hi.x - lo.x) * scale + 2.0 * MARGIN,
            height: (hi.y - lo.y) * scale + 2.0 * MARGIN,
        }
    }

    fn px(&self, p: Vec2<f64>) -> (f64, f64) {
        (
            MARGIN + (p.x - self.min.x) * self.scale,
            self.height - MARGIN - (p.y - self.min.y) * self.scale,
        )
    }
}

/// Deterministic SVG: domain outline, one arrow per vertex with length
/// proportional to `|u|`, and a circle per vortex ball (interior balls in
/// red, boundary balls in blue).
pub fn render_quiver(rows: &FieldRows, marks: &ReportMarks, outline: &[Vec2<f64>]) -> String {
    let view = View::fit(outline.iter().copied().chain(rows.iter().map(|r| r.0)));
    let width = view.width;

    // arrows of unit field span about 80% of the typical vertex spacing
    let area = (width - 2.0 * MARGIN) * (view.height - 2.0 * MARGIN);
    let spacing = if rows.is_empty() {
        0.0
    } else {
        (area / rows.len() as f64).sqrt()
    };
    let len = 0.8 * spacing.min(40.0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.3} {h:.3}">"#,
        w = width,
        h = view.height
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if !outline.is_empty() {
        let mut d = String::new();
        for (i, &p) in outline.iter().enumerate() {
            let (x, y) = view.px(p);
            let _ = write!(d, "{}{x:.3} {y:.3} ", if i == 0 { "M" } else { "L" });
        }
        d.push('Z');
        let _ = writeln!(
            s,
            r#"<path class="outline" d="{d}" fill="none" stroke="black" stroke-width="1.5"/>"#
        );
    }
    for (p, u) in rows {
        let (cx, cy) = view.px(*p);
        // screen y points down
        let (ax, ay) = (u.x * len, -u.y * len);
        let (x0, y0, x1, y1) = (cx - 0.5 * ax, cy - 0.5 * ay, cx + 0.5 * ax, cy + 0.5 * ay);
        let head = 0.3;
        let (hx, hy) = (x1 - head * ax, y1 - head * ay);
        let (nx, ny) = (-ay * 0.5 * head, ax * 0.5 * head);
        let _ = writeln!(
            s,
            r#"<path class="arrow" d="M{x0:.3} {y0:.3} L{x1:.3} {y1:.3} M{:.3} {:.3} L{x1:.3} {y1:.3} L{:.3} {:.3}" fill="none" stroke="black" stroke-width="0.8"/>"#,
            hx + nx,
            hy + ny,
            hx - nx,
            hy - ny
        );
    }
    for (class, color, balls) in [
        ("ball interior", "red", &marks.interior),
        ("ball boundary", "blue", &marks.boundary),
    ] {
        for b in balls {
            let (x, y) = view.px(Vec2::new(b.x, b.y));
            let _ = writeln!(
                s,
                r#"<circle class="{class}" cx="{x:.3}" cy="{y:.3}" r="{:.3}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                b.r * view.scale
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
