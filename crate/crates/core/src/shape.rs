//! Domain shape descriptors.
//!
//! Every computation happens inside an axis-aligned box `[0, L_1] x ... x [0, L_N]`.
//! A [`Shape`] selects the subset of that box that forms the actual domain `D`;
//! [`Domain`] couples a shape with its box so that it is self-contained.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type LevelFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A scalar level function: a point is inside when the function is negative.
#[derive(Clone)]
pub struct ImplicitShape(pub Arc<LevelFn>);

impl PartialEq for ImplicitShape {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl fmt::Debug for ImplicitShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ImplicitShape(..)")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    /// The whole box.
    Box,
    /// A simple polygon, inside test by winding number. Convex polygons are
    /// required wherever exact geometry is needed (packing, exact Cheeger sets).
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Tetrahedron {
        vertices: [[f64; 3]; 4],
    },
    /// `{ x : phi(x) < 0 }`. Not serializable.
    #[serde(skip)]
    Implicit(ImplicitShape),
}

impl Shape {
    /// Regular polygon with `n` vertices inscribed in the circle `(center, radius)`,
    /// first vertex at angle `phase`.
    pub fn regular_polygon(n: usize, center: [f64; 2], radius: f64, phase: f64) -> Shape {
        let vertices = (0..n)
            .map(|i| {
                let a = phase + 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            })
            .collect();
        Shape::Polygon { vertices }
    }

    /// Equilateral triangle of side `side`, base on the x axis starting at `origin`.
    pub fn equilateral_triangle(origin: [f64; 2], side: f64) -> Shape {
        let h = side * 3f64.sqrt() / 2.0;
        Shape::Polygon {
            vertices: vec![
                origin,
                [origin[0] + side, origin[1]],
                [origin[0] + side / 2.0, origin[1] + h],
            ],
        }
    }

    /// Regular tetrahedron of edge `sqrt(2) * side` on alternating corners of the
    /// cube `[0, side]^3`.
    pub fn regular_tetrahedron(side: f64) -> Shape {
        Shape::Tetrahedron {
            vertices: [
                [0.0, 0.0, 0.0],
                [side, side, 0.0],
                [side, 0.0, side],
                [0.0, side, side],
            ],
        }
    }

    pub fn implicit<F>(phi: F) -> Shape
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Shape::Implicit(ImplicitShape(Arc::new(phi)))
    }

    pub fn is_box(&self) -> bool {
        matches!(self, Shape::Box)
    }

    /// Inside predicate for a point of the box (the box itself is checked by the caller).
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Shape::Box => true,
            Shape::Polygon { vertices } => winding_number(vertices, [x[0], x[1]]) != 0,
            Shape::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                d2 <= radius * radius
            }
            Shape::Tetrahedron { vertices } => tetra_planes(vertices)
                .iter()
                .all(|(n, b)| dot(n, x) <= *b + 1e-14),
            Shape::Implicit(phi) => (phi.0)(x) < 0.0,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Shape::Box | Shape::Implicit(_) => Ok(()),
            Shape::Polygon { vertices } => {
                if dim != 2 {
                    return Err(Error::config("domain", "polygon domains are 2D only"));
                }
                if vertices.len() < 3 {
                    return Err(Error::config("domain", "polygon needs at least 3 vertices"));
                }
                Ok(())
            }
            Shape::Ball { center, radius } => {
                if center.len() != dim {
                    return Err(Error::config("domain", "ball center dimension mismatch"));
                }
                if !(*radius > 0.0) {
                    return Err(Error::config("domain", "ball radius must be positive"));
                }
                Ok(())
            }
            Shape::Tetrahedron { .. } => {
                if dim != 3 {
                    return Err(Error::config("domain", "tetrahedron domains are 3D only"));
                }
                Ok(())
            }
        }
    }
}

/// A shape together with the box it lives in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub extent: Vec<f64>,
    pub shape: Shape,
}

impl Domain {
    pub fn new(extent: Vec<f64>, shape: Shape) -> Domain {
        Domain { extent, shape }
    }

    pub fn unit_square() -> Domain {
        Domain::new(vec![1.0, 1.0], Shape::Box)
    }

    pub fn dim(&self) -> usize {
        self.extent.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.extent)
            .all(|(v, l)| *v >= 0.0 && *v <= *l)
            && self.shape.contains(x)
    }

    /// Outward unit normals `n` and offsets `b` with `D = { x : n.x <= b }`, for
    /// domains bounded by finitely many hyperplanes (boxes, convex polygons,
    /// tetrahedra). `None` for balls and implicit shapes.
    pub fn faces(&self) -> Option<Vec<(Vec<f64>, f64)>> {
        match &self.shape {
            Shape::Box => {
                let n = self.dim();
                let mut faces = Vec::with_capacity(2 * n);
                for a in 0..n {
                    let mut lo = vec![0.0; n];
                    lo[a] = -1.0;
                    faces.push((lo, 0.0));
                    let mut hi = vec![0.0; n];
                    hi[a] = 1.0;
                    faces.push((hi, self.extent[a]));
                }
                Some(faces)
            }
            Shape::Polygon { vertices } => {
                let ccw = signed_area(vertices) > 0.0;
                let nv = vertices.len();
                let faces = (0..nv)
                    .map(|i| {
                        let (p, q) = if ccw {
                            (vertices[i], vertices[(i + 1) % nv])
                        } else {
                            (vertices[(i + 1) % nv], vertices[i])
                        };
                        let e = [q[0] - p[0], q[1] - p[1]];
                        let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
                        let n = vec![e[1] / len, -e[0] / len];
                        let b = n[0] * p[0] + n[1] * p[1];
                        (n, b)
                    })
                    .collect();
                Some(faces)
            }
            Shape::Tetrahedron { vertices } => Some(
                tetra_planes(vertices)
                    .into_iter()
                    .map(|(n, b)| (n.to_vec(), b))
                    .collect(),
            ),
            Shape::Ball { .. } | Shape::Implicit(_) => None,
        }
    }

    /// Signed Euclidean distance to the boundary, positive inside.
    ///
    /// Exact for boxes, balls and (inside) convex polygons/tetrahedra. For
    /// polygons the distance to the nearest edge is used, so non-convex
    /// polygons are handled as well.
    pub fn boundary_distance(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::input("point dimension does not match domain"));
        }
        match &self.shape {
            Shape::Box | Shape::Tetrahedron { .. } => {
                let faces = self.faces().expect("polyhedral domain");
                Ok(faces
                    .iter()
                    .map(|(n, b)| b - dot(n, x))
                    .fold(f64::INFINITY, f64::min))
            }
            Shape::Polygon { vertices } => {
                let p = [x[0], x[1]];
                let nv = vertices.len();
                let d = (0..nv)
                    .map(|i| segment_distance(p, vertices[i], vertices[(i + 1) % nv]))
                    .fold(f64::INFINITY, f64::min);
                Ok(if winding_number(vertices, p) != 0 {
                    d
                } else {
                    -d
                })
            }
            Shape::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                Ok(radius - d2.sqrt())
            }
            Shape::Implicit(_) => Err(Error::input(
                "boundary distance is not available for implicit shapes",
            )),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn signed_area(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    let mut s = 0.0;
    for i in 0..n {
        let p = vertices[i];
        let q = vertices[(i + 1) % n];
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s
}

fn winding_number(vertices: &[[f64; 2]], p: [f64; 2]) -> i32 {
    let n = vertices.len();
    let mut wn = 0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]);
        if a[1] <= p[1] {
            if b[1] > p[1] && cross > 0.0 {
                wn += 1;
            }
        } else if b[1] <= p[1] && cross < 0.0 {
            wn -= 1;
        }
    }
    wn
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1]];
    (d[0] * d[0] + d[1] * d[1]).sqrt()
}

/// Outward unit face normals and offsets of a tetrahedron.
fn tetra_planes(v: &[[f64; 3]; 4]) -> Vec<([f64; 3], f64)> {
    const FACES: [[usize; 4]; 4] = [[1, 2, 3, 0], [0, 2, 3, 1], [0, 1, 3, 2], [0, 1, 2, 3]];
    FACES
        .iter()
        .map(|&[a, b, c, opp]| {
            let u = sub3(v[b], v[a]);
            let w = sub3(v[c], v[a]);
            let mut n = cross3(u, w);
            let len = dot(&n, &n).sqrt();
            n.iter_mut().for_each(|x| *x /= len);
            let mut off = dot(&n, &v[a]);
            if dot(&n, &v[opp]) > off {
                n.iter_mut().for_each(|x| *x = -*x);
                off = -off;
            }
            (n, off)
        })
        .collect()
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
