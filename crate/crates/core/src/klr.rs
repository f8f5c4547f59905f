//! Exact Cheeger sets of convex polygons and analytic alpha-Cheeger constants
//! of balls.
//!
//! For a convex planar body `P`, let `P_t` be its inner parallel body at
//! distance `t`. The Cheeger set is `P_t* + B(0, t*)` where `t*` is the unique
//! root of `|P_t| = pi t^2`, and the Cheeger constant is `1/t*`
//! (classical result for convex planar domains).

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{critical_alpha, SharpMeasurement};
use crate::shape::{signed_area, Shape};

/// Default number of vertices used to polygonalize curved convex bodies.
pub const DEFAULT_POLYGONALIZATION: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    vertices: Vec<[f64; 2]>,
}

impl ConvexPolygon {
    /// Accepts either orientation (stored counterclockwise); rejects fewer than
    /// three vertices, zero area, and any non-strict turn.
    pub fn new(mut vertices: Vec<[f64; 2]>) -> Result<ConvexPolygon> {
        if vertices.len() < 3 {
            return Err(Error::input("a polygon needs at least 3 vertices"));
        }
        let a = signed_area(&vertices);
        if !(a.abs() > 0.0) {
            return Err(Error::input("degenerate polygon with zero area"));
        }
        if a < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        let scale = vertices
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |m, c| m.max(c.abs()))
            .max(1.0);
        for i in 0..n {
            let p = vertices[i];
            let q = vertices[(i + 1) % n];
            let r = vertices[(i + 2) % n];
            let cross = (q[0] - p[0]) * (r[1] - q[1]) - (q[1] - p[1]) * (r[0] - q[0]);
            if !(cross > 1e-14 * scale * scale) {
                return Err(Error::input(format!(
                    "polygon is not strictly convex at vertex {}",
                    (i + 1) % n
                )));
            }
        }
        Ok(ConvexPolygon { vertices })
    }

    pub fn unit_square() -> ConvexPolygon {
        ConvexPolygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    pub fn equilateral_triangle(side: f64) -> ConvexPolygon {
        ConvexPolygon::new(vec![
            [0.0, 0.0],
            [side, 0.0],
            [side / 2.0, side * 3f64.sqrt() / 2.0],
        ])
        .unwrap()
    }

    /// Regular `n`-gon inscribed in a circle; with `n` large this approximates a disk.
    pub fn regular(n: usize, center: [f64; 2], radius: f64) -> Result<ConvexPolygon> {
        let Shape::Polygon { vertices } = Shape::regular_polygon(n, center, radius, 0.0) else {
            unreachable!()
        };
        ConvexPolygon::new(vertices)
    }

    /// Convex hull (monotone chain) of a point set.
    pub fn hull(points: &[[f64; 2]]) -> Result<ConvexPolygon> {
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        pts.dedup();
        if pts.len() < 3 {
            return Err(Error::input("hull needs at least 3 distinct points"));
        }
        let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
            (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
        };
        let mut lower: Vec<[f64; 2]> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2
                && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0
            {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<[f64; 2]> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2
                && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0
            {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        ConvexPolygon::new(lower)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        perimeter_of(&self.vertices)
    }

    pub fn scaled(&self, s: f64) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|v| [v[0] * s, v[1] * s]).collect(),
        }
    }

    pub fn translated(&self, d: [f64; 2]) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self
                .vertices
                .iter()
                .map(|v| [v[0] + d[0], v[1] + d[1]])
                .collect(),
        }
    }

    pub fn to_shape(&self) -> Shape {
        Shape::Polygon {
            vertices: self.vertices.clone(),
        }
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for a in 0..2 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        (lo, hi)
    }

    /// Outward unit normal and offset `(n, b)` of each edge, `n.x <= b` inside.
    fn halfplanes(&self) -> Vec<([f64; 2], f64)> {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let p = self.vertices[i];
                let q = self.vertices[(i + 1) % n];
                let e = [q[0] - p[0], q[1] - p[1]];
                let len = e[0].hypot(e[1]);
                let nrm = [e[1] / len, -e[0] / len];
                (nrm, nrm[0] * p[0] + nrm[1] * p[1])
            })
            .collect()
    }
}

fn perimeter_of(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let p = v[i];
            let q = v[(i + 1) % n];
            (q[0] - p[0]).hypot(q[1] - p[1])
        })
        .sum()
}

/// Clips a convex polygon (CCW) by `n.x <= b`.
fn clip(poly: &[[f64; 2]], n: [f64; 2], b: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let len = poly.len();
    for i in 0..len {
        let p = poly[i];
        let q = poly[(i + 1) % len];
        let sp = n[0] * p[0] + n[1] * p[1] - b;
        let sq = n[0] * q[0] + n[1] * q[1] - b;
        if sp <= 0.0 {
            out.push(p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Drops repeated and collinear vertices.
fn clean(mut v: Vec<[f64; 2]>, tol: f64) -> Vec<[f64; 2]> {
    v.dedup_by(|a, b| (a[0] - b[0]).hypot(a[1] - b[1]) <= tol);
    while v.len() > 1 {
        let f = v[0];
        let l = v[v.len() - 1];
        if (f[0] - l[0]).hypot(f[1] - l[1]) <= tol {
            v.pop();
        } else {
            break;
        }
    }
    let mut changed = true;
    while changed && v.len() >= 3 {
        changed = false;
        let n = v.len();
        for i in 0..n {
            let p = v[(i + n - 1) % n];
            let q = v[i];
            let r = v[(i + 1) % n];
            let cross = (q[0] - p[0]) * (r[1] - q[1]) - (q[1] - p[1]) * (r[0] - q[0]);
            let scale = (q[0] - p[0]).hypot(q[1] - p[1]) * (r[0] - q[0]).hypot(r[1] - q[1]);
            if cross.abs() <= 1e-12 * scale.max(tol * tol) {
                v.remove(i);
                changed = true;
                break;
            }
        }
    }
    v
}

/// Inner parallel body `{x in P : dist(x, boundary P) >= t}`, or `None` when empty
/// (or of zero area).
pub fn inner_parallel(p: &ConvexPolygon, t: f64) -> Result<Option<ConvexPolygon>> {
    if !(t >= 0.0) {
        return Err(Error::input(format!(
            "offset distance must be >= 0, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(Some(p.clone()));
    }
    let mut poly = p.vertices.clone();
    for (n, b) in p.halfplanes() {
        poly = clip(&poly, n, b - t);
        if poly.len() < 3 {
            return Ok(None);
        }
    }
    let tol = 1e-13 * p.perimeter();
    let poly = clean(poly, tol);
    if poly.len() < 3 || !(signed_area(&poly) > 1e-15 * p.area()) {
        return Ok(None);
    }
    Ok(Some(ConvexPolygon { vertices: poly }))
}

/// `|P_t|`, zero when the inner body is empty.
pub fn inner_area(p: &ConvexPolygon, t: f64) -> f64 {
    match inner_parallel(p, t) {
        Ok(Some(q)) => q.area(),
        _ => 0.0,
    }
}

/// Inradius by bisection on emptiness of the inner parallel body.
pub fn inradius(p: &ConvexPolygon) -> f64 {
    let (mut lo, mut hi) = (0.0, 2.0 * p.area() / p.perimeter());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inner_area(p, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: [f64; 2],
    pub end: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub center: [f64; 2],
    pub radius: f64,
    /// Counterclockwise from `start_angle` to `end_angle` (radians, end > start).
    pub start_angle: f64,
    pub end_angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryPiece {
    Segment(Segment),
    Arc(Arc),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheegerExact {
    pub t_star: f64,
    pub h: f64,
    pub inner_polygon: ConvexPolygon,
    /// Alternating edges (inner edges pushed out by `t_star`) and corner arcs,
    /// counterclockwise.
    pub boundary: Vec<BoundaryPiece>,
}

impl CheegerExact {
    pub fn perimeter(&self) -> f64 {
        self.boundary
            .iter()
            .map(|b| match b {
                BoundaryPiece::Segment(s) => (s.end[0] - s.start[0]).hypot(s.end[1] - s.start[1]),
                BoundaryPiece::Arc(a) => a.radius * (a.end_angle - a.start_angle),
            })
            .sum()
    }

    /// Area of `inner + disk(t)` by Steiner's formula.
    pub fn area(&self) -> f64 {
        let t = self.t_star;
        self.inner_polygon.area() + self.inner_polygon.perimeter() * t + PI * t * t
    }

    /// Boundary sampled as a closed polyline; arcs get `samples_per_arc` points.
    pub fn polyline(&self, samples_per_arc: usize) -> Vec<[f64; 2]> {
        let mut out = Vec::new();
        for piece in &self.boundary {
            match piece {
                BoundaryPiece::Segment(s) => out.push(s.start),
                BoundaryPiece::Arc(a) => {
                    let n = samples_per_arc.max(2);
                    for i in 0..n {
                        let th = a.start_angle
                            + (a.end_angle - a.start_angle) * i as f64 / (n - 1) as f64;
                        out.push([
                            a.center[0] + a.radius * th.cos(),
                            a.center[1] + a.radius * th.sin(),
                        ]);
                    }
                }
            }
        }
        out
    }

    /// CSV `x,y` of the sampled boundary, closed (first point repeated).
    pub fn write_polyline_csv<W: Write>(&self, samples_per_arc: usize, mut w: W) -> Result<()> {
        let pts = self.polyline(samples_per_arc);
        writeln!(w, "x,y")?;
        for p in pts.iter().chain(pts.first()) {
            writeln!(w, "{},{}", p[0], p[1])?;
        }
        Ok(())
    }
}

/// Exact Cheeger constant and set of a convex polygon.
pub fn cheeger_exact(p: &ConvexPolygon) -> Result<CheegerExact> {
    if !(p.area() > 0.0) {
        return Err(Error::input("degenerate polygon"));
    }
    // |P_t| - pi t^2 is positive at 0 and negative at 2|P|/per(P) >= inradius
    let f = |t: f64| inner_area(p, t) - PI * t * t;
    let (mut lo, mut hi) = (0.0, 2.0 * p.area() / p.perimeter());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let inner = inner_parallel(p, lo)?
        .ok_or_else(|| Error::input("inner parallel body vanished at the Cheeger radius"))?;
    let boundary = rounded_boundary(&inner, t);
    Ok(CheegerExact {
        t_star: t,
        h: 1.0 / t,
        inner_polygon: inner,
        boundary,
    })
}

fn rounded_boundary(q: &ConvexPolygon, t: f64) -> Vec<BoundaryPiece> {
    let hp = q.halfplanes();
    let n = q.vertices.len();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let (nrm, _) = hp[i];
        let p = q.vertices[i];
        let r = q.vertices[(i + 1) % n];
        out.push(BoundaryPiece::Segment(Segment {
            start: [p[0] + t * nrm[0], p[1] + t * nrm[1]],
            end: [r[0] + t * nrm[0], r[1] + t * nrm[1]],
        }));
        let (next, _) = hp[(i + 1) % n];
        let a0 = nrm[1].atan2(nrm[0]);
        let mut a1 = next[1].atan2(next[0]);
        while a1 <= a0 {
            a1 += 2.0 * PI;
        }
        out.push(BoundaryPiece::Arc(Arc {
            center: r,
            radius: t,
            start_angle: a0,
            end_angle: a1,
        }));
    }
    out
}

/// Volume of the unit ball in dimension `n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticConstants {
    pub dim: usize,
    /// Isoperimetric constant `P(B) / |B|^((N-1)/N) = N * gamma_N^(1/N)`.
    pub omega: f64,
}

impl AnalyticConstants {
    pub fn new(dim: usize) -> AnalyticConstants {
        let g = unit_ball_volume(dim);
        AnalyticConstants {
            dim,
            omega: dim as f64 * g.powf(1.0 / dim as f64),
        }
    }
}

/// `h_alpha(B_R) = P(B_R) / |B_R|^alpha`, valid for `alpha > (N-1)/N`
/// where the ball is its own alpha-Cheeger set.
pub fn analytic_alpha_cheeger_ball(dim: usize, radius: f64, alpha: f64) -> Result<f64> {
    if dim < 2 {
        return Err(Error::input("dimension must be at least 2"));
    }
    if !(alpha > critical_alpha(dim)) {
        return Err(Error::config(
            "alpha",
            format!(
                "alpha = {alpha} must exceed (N-1)/N = {}",
                critical_alpha(dim)
            ),
        ));
    }
    if !(radius > 0.0) {
        return Err(Error::input("radius must be positive"));
    }
    let g = unit_ball_volume(dim);
    let per = dim as f64 * g * radius.powi(dim as i32 - 1);
    let vol = g * radius.powi(dim as i32);
    Ok(per / vol.powf(alpha))
}

/// Relative error `|h_measured - h| / h` of a single-phase measurement.
pub fn compare(measured: &SharpMeasurement, exact: &CheegerExact) -> Result<f64> {
    if measured.k() != 1 {
        return Err(Error::input("comparison needs a single-phase measurement"));
    }
    let h = measured.per_phase_h_alpha[0];
    if !h.is_finite() || measured.per_phase_area[0] <= 0.0 {
        return Err(Error::input("measurement is empty"));
    }
    Ok(relative_error(h, exact.h))
}

pub fn relative_error(measured: f64, exact: f64) -> f64 {
    (measured - exact).abs() / exact
}
