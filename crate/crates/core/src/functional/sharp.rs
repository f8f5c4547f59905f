//! Sharp measurements of super-level sets `{u > level}`.
//!
//! In 2D each grid cell is cut by the linearly interpolated iso-line
//! (marching squares), giving both the enclosed area and the contour length.
//! In 3D each cube is split into six tetrahedra along its main diagonal and
//! cut by the linear iso-plane (marching tetrahedra), giving enclosed volume
//! and surface area. Outside the box (non-periodic grids) values are zero, so
//! contours close along the box boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, PhaseSystem};

/// Perimeter/area data of `{u_i > level}` for every phase. In 3D `area` is the
/// enclosed volume and `perimeter` the surface area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpMeasurement {
    pub level: f64,
    pub alpha: f64,
    pub per_phase_area: Vec<f64>,
    pub per_phase_perimeter: Vec<f64>,
    /// `perimeter / area^alpha`, infinite (serialized as null) for empty sets.
    #[serde(deserialize_with = "crate::serde_inf::vec")]
    pub per_phase_h_alpha: Vec<f64>,
}

impl SharpMeasurement {
    pub fn k(&self) -> usize {
        self.per_phase_area.len()
    }

    pub fn sum_h_alpha(&self) -> f64 {
        self.per_phase_h_alpha.iter().sum()
    }
}

pub fn measure_threshold(sys: &PhaseSystem, level: f64, alpha: f64) -> Result<SharpMeasurement> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::input(format!(
            "level must lie in (0, 1), got {level}"
        )));
    }
    let mut areas = Vec::with_capacity(sys.k());
    let mut perims = Vec::with_capacity(sys.k());
    for ph in sys.phases() {
        let (a, p) = measure_field(sys.grid(), ph.values(), level);
        areas.push(a);
        perims.push(p);
    }
    let h = areas
        .iter()
        .zip(&perims)
        .map(|(&a, &p)| {
            if a > 0.0 {
                p / a.powf(alpha)
            } else {
                f64::INFINITY
            }
        })
        .collect();
    Ok(SharpMeasurement {
        level,
        alpha,
        per_phase_area: areas,
        per_phase_perimeter: perims,
        per_phase_h_alpha: h,
    })
}

/// `(area, perimeter)` of `{u > level}`; volume and surface area in 3D.
pub fn measure_field(grid: &GridSpec, u: &[f64], level: f64) -> (f64, f64) {
    if grid.dim() == 2 {
        marching_squares(grid, u, level)
    } else {
        marching_tetrahedra(grid, u, level)
    }
}

/// Range of cell lower-corner indices along one axis, and the value lookup.
/// Non-periodic grids get an extra ring of zero-valued ghost nodes.
struct Lattice<'a> {
    grid: &'a GridSpec,
    u: &'a [f64],
}

impl Lattice<'_> {
    fn cells(&self) -> std::ops::Range<i64> {
        let m = self.grid.m() as i64;
        if self.grid.periodic() {
            0..m
        } else {
            -1..m
        }
    }

    fn value(&self, ijk: [i64; 3]) -> f64 {
        let m = self.grid.m() as i64;
        let mut idx = 0usize;
        for (a, &i) in ijk.iter().enumerate().take(self.grid.dim()) {
            let i = if self.grid.periodic() {
                i.rem_euclid(m)
            } else if i < 0 || i >= m {
                return 0.0;
            } else {
                i
            };
            idx += i as usize * self.grid.stride(a);
        }
        self.u[idx]
    }
}

fn lerp2(p: [f64; 2], q: [f64; 2], t: f64) -> [f64; 2] {
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

fn marching_squares(grid: &GridSpec, u: &[f64], level: f64) -> (f64, f64) {
    let lat = Lattice { grid, u };
    let hx = grid.spacing(0);
    let hy = grid.spacing(1);
    let mut area = 0.0;
    let mut length = 0.0;
    let mut poly: Vec<[f64; 2]> = Vec::with_capacity(8);
    for j in lat.cells() {
        for i in lat.cells() {
            let corners = [[i, j], [i + 1, j], [i + 1, j + 1], [i, j + 1]];
            let vals = corners.map(|[a, b]| lat.value([a, b, 0]));
            let inside = vals.map(|v| v > level);
            let count = inside.iter().filter(|&&b| b).count();
            if count == 0 {
                continue;
            }
            if count == 4 {
                area += hx * hy;
                continue;
            }
            let pos = [[0.0, 0.0], [hx, 0.0], [hx, hy], [0.0, hy]];
            // walk the cell boundary, keeping inside corners and edge crossings
            poly.clear();
            let mut crossings: Vec<(usize, [f64; 2])> = Vec::with_capacity(4);
            for c in 0..4 {
                let n = (c + 1) % 4;
                if inside[c] {
                    poly.push(pos[c]);
                }
                if inside[c] != inside[n] {
                    let t = (level - vals[c]) / (vals[n] - vals[c]);
                    let x = lerp2(pos[c], pos[n], t);
                    crossings.push((poly.len(), x));
                    poly.push(x);
                }
            }
            area += polygon_area(&poly).abs();
            // contour segments join consecutive crossings with no corner between
            let np = poly.len();
            for w in 0..crossings.len() {
                let (ia, a) = crossings[w];
                let (ib, b) = crossings[(w + 1) % crossings.len()];
                if (ia + 1) % np == ib {
                    length += ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                }
            }
        }
    }
    (area, length)
}

fn polygon_area(p: &[[f64; 2]]) -> f64 {
    let n = p.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = p[i];
        let b = p[(i + 1) % n];
        s += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * s
}

type V3 = [f64; 3];

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: V3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn tri_area(a: V3, b: V3, c: V3) -> f64 {
    0.5 * norm(cross(sub(b, a), sub(c, a)))
}

fn tet_volume(a: V3, b: V3, c: V3, d: V3) -> f64 {
    let x = cross(sub(b, a), sub(c, a));
    let y = sub(d, a);
    (x[0] * y[0] + x[1] * y[1] + x[2] * y[2]).abs() / 6.0
}

fn lerp3(p: V3, q: V3, t: f64) -> V3 {
    [
        p[0] + t * (q[0] - p[0]),
        p[1] + t * (q[1] - p[1]),
        p[2] + t * (q[2] - p[2]),
    ]
}

/// Cube corners indexed by bits (x = 1, y = 2, z = 4); six tetrahedra sharing
/// the diagonal 0-7, one per axis ordering.
const KUHN: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

fn marching_tetrahedra(grid: &GridSpec, u: &[f64], level: f64) -> (f64, f64) {
    let lat = Lattice { grid, u };
    let mut volume = 0.0;
    let mut surface = 0.0;
    let h = [grid.spacing(0), grid.spacing(1), grid.spacing(2)];
    let cube_volume = h[0] * h[1] * h[2];
    let local: [V3; 8] = std::array::from_fn(|c| {
        [
            (c & 1) as f64 * h[0],
            (c >> 1 & 1) as f64 * h[1],
            (c >> 2 & 1) as f64 * h[2],
        ]
    });
    for k in lat.cells() {
        for j in lat.cells() {
            for i in lat.cells() {
                let vals: [f64; 8] = std::array::from_fn(|c| {
                    lat.value([
                        i + (c & 1) as i64,
                        j + (c >> 1 & 1) as i64,
                        k + (c >> 2 & 1) as i64,
                    ])
                });
                let n_in = vals.iter().filter(|&&v| v > level).count();
                if n_in == 0 {
                    continue;
                }
                if n_in == 8 {
                    volume += cube_volume;
                    continue;
                }
                for tet in KUHN {
                    let (v, s) = cut_tet(tet.map(|c| local[c]), tet.map(|c| vals[c]), level);
                    volume += v;
                    surface += s;
                }
            }
        }
    }
    (volume, surface)
}

/// Inside volume and iso-surface area of one tetrahedron under linear interpolation.
fn cut_tet(p: [V3; 4], v: [f64; 4], level: f64) -> (f64, f64) {
    let ins: Vec<usize> = (0..4).filter(|&i| v[i] > level).collect();
    let outs: Vec<usize> = (0..4).filter(|&i| v[i] <= level).collect();
    let x = |a: usize, b: usize| lerp3(p[a], p[b], (level - v[a]) / (v[b] - v[a]));
    let full = tet_volume(p[0], p[1], p[2], p[3]);
    match ins.len() {
        0 => (0.0, 0.0),
        4 => (full, 0.0),
        1 => {
            let a = ins[0];
            let q = [x(a, outs[0]), x(a, outs[1]), x(a, outs[2])];
            (
                tet_volume(p[a], q[0], q[1], q[2]),
                tri_area(q[0], q[1], q[2]),
            )
        }
        3 => {
            let d = outs[0];
            let q = [x(ins[0], d), x(ins[1], d), x(ins[2], d)];
            (
                full - tet_volume(p[d], q[0], q[1], q[2]),
                tri_area(q[0], q[1], q[2]),
            )
        }
        _ => {
            let (a, b) = (ins[0], ins[1]);
            let (c, d) = (outs[0], outs[1]);
            let (ac, ad, bc, bd) = (x(a, c), x(a, d), x(b, c), x(b, d));
            // prism with planar faces: (a, ac, ad) over (b, bc, bd)
            let vol = tet_volume(p[a], ac, ad, bd)
                + tet_volume(p[a], ac, bc, bd)
                + tet_volume(p[a], p[b], bc, bd);
            let surf = tri_area(ac, ad, bd) + tri_area(ac, bd, bc);
            (vol, surf)
        }
    }
}
