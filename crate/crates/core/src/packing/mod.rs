//! Ball packings from phase-field cells: barycenters of the cells, then a local
//! refinement of either the common radius (maximin) or the product of radii.
//!
//! Both refinements are sequential linear programs with a box trust region
//! around the current centers. Pair constraints `|c_i - c_j| >= r_i + r_j`
//! are linearized (the distance is convex, so the linear model is
//! conservative); flat walls are exact; the wall of a ball domain is
//! linearized and steps are accepted only if the true objective improves.
//! Radii are always recomputed from exact geometry.

pub mod lp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PhaseSystem;
use crate::shape::{dot, Domain, Shape};

/// Feasibility tolerance on every packing constraint.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Centers never move further than this multiple of the initial radius.
pub const DISPLACEMENT_CAP: f64 = 10.0;

const MAX_ITER: usize = 2000;
const MIN_TRUST: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskConfig {
    pub dim: usize,
    pub centers: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub domain: Domain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PackingObjective {
    Maximin,
    LogProduct,
}

/// A constraint identified by the balls it involves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    /// Balls `i` and `j` touch.
    Pair { i: usize, j: usize },
    /// Ball `i` touches the boundary (face index for polyhedral domains).
    Wall { i: usize, face: Option<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingResult {
    #[serde(flatten)]
    pub config: DiskConfig,
    pub objective: PackingObjective,
    /// `min r_i` (maximin) or `sum log r_i` (product).
    pub value: f64,
    pub active_constraints: Vec<Constraint>,
    pub iterations: usize,
}

impl DiskConfig {
    /// Largest violation over all constraints (non-positive when feasible).
    pub fn max_violation(&self) -> Result<f64> {
        let k = self.centers.len();
        let mut worst = f64::NEG_INFINITY;
        for i in 0..k {
            let d = boundary_distance(&self.centers[i], &self.domain)?;
            worst = worst.max(self.radii[i] - d);
            for j in i + 1..k {
                worst = worst
                    .max(self.radii[i] + self.radii[j] - dist(&self.centers[i], &self.centers[j]));
            }
        }
        Ok(worst)
    }

    pub fn is_feasible(&self) -> Result<bool> {
        Ok(self.max_violation()? <= FEASIBILITY_TOL)
    }

    /// Constraints within `tol` of being tight.
    pub fn active(&self, tol: f64) -> Result<Vec<Constraint>> {
        let k = self.centers.len();
        let mut out = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                let s = dist(&self.centers[i], &self.centers[j]) - self.radii[i] - self.radii[j];
                if s <= tol {
                    out.push(Constraint::Pair { i, j });
                }
            }
        }
        for i in 0..k {
            for (face, (w, _)) in walls(&self.domain, &self.centers[i])?
                .into_iter()
                .enumerate()
            {
                if w - self.radii[i] <= tol {
                    let face = self.domain.faces().map(|_| face);
                    out.push(Constraint::Wall { i, face });
                }
            }
        }
        Ok(out)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Signed distance to the domain boundary, negative outside.
pub fn boundary_distance(x: &[f64], domain: &Domain) -> Result<f64> {
    domain.boundary_distance(x)
}

/// Wall functions `w(c)` with `w >= r` meaning a ball of radius `r` at `c`
/// fits, and their gradients: one per face for polyhedral domains, a single
/// one for balls.
fn walls(domain: &Domain, c: &[f64]) -> Result<Vec<(f64, Vec<f64>)>> {
    if let Some(faces) = domain.faces() {
        return Ok(faces
            .into_iter()
            .map(|(n, b)| (b - dot(&n, c), n.iter().map(|v| -v).collect()))
            .collect());
    }
    match &domain.shape {
        Shape::Ball { center, radius } => {
            let d = dist(c, center);
            let g = if d > 0.0 {
                c.iter().zip(center).map(|(a, b)| -(a - b) / d).collect()
            } else {
                vec![0.0; c.len()]
            };
            Ok(vec![(radius - d, g)])
        }
        _ => Err(Error::input(
            "packing needs a box, polygon, ball or tetrahedron domain",
        )),
    }
}

fn check_domain(domain: &Domain) -> Result<()> {
    match &domain.shape {
        Shape::Implicit(_) => Err(Error::input(
            "packing is not available for implicit domains",
        )),
        Shape::Polygon { vertices } => crate::klr::ConvexPolygon::new(vertices.clone()).map(|_| ()),
        _ => Ok(()),
    }
}

/// Per phase, the mean position of the nodes with `u_i > level` (all nodes
/// carry the same quadrature weight).
pub fn extract_centers(sys: &PhaseSystem, level: f64) -> Result<Vec<Vec<f64>>> {
    let g = sys.grid();
    let dim = g.dim();
    let mut out = Vec::with_capacity(sys.k());
    for (i, ph) in sys.phases().iter().enumerate() {
        let mut sum = vec![0.0; dim];
        let mut count = 0usize;
        for (idx, &v) in ph.values().iter().enumerate() {
            if v > level {
                let x = g.coords(idx);
                for a in 0..dim {
                    sum[a] += x[a];
                }
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::EmptyPhase { phase: i, level });
        }
        out.push(sum.into_iter().map(|s| s / count as f64).collect());
    }
    Ok(out)
}

fn validate_centers(centers: &[Vec<f64>], domain: &Domain) -> Result<()> {
    check_domain(domain)?;
    if centers.is_empty() {
        return Err(Error::input("no centers"));
    }
    for (i, c) in centers.iter().enumerate() {
        if c.len() != domain.dim() {
            return Err(Error::input(format!("center {i} has the wrong dimension")));
        }
        if boundary_distance(c, domain)? <= 0.0 {
            return Err(Error::input(format!("center {i} is not inside the domain")));
        }
        for (j, d) in centers.iter().enumerate().take(i) {
            if dist(c, d) <= 1e-12 {
                return Err(Error::input(format!("centers {j} and {i} coincide")));
            }
        }
    }
    Ok(())
}

/// Largest common radius for fixed centers.
fn common_radius(centers: &[Vec<f64>], domain: &Domain) -> Result<f64> {
    let mut r = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        r = r.min(boundary_distance(c, domain)?);
        for d in &centers[i + 1..] {
            r = r.min(0.5 * dist(c, d));
        }
    }
    Ok(r)
}

/// Per-center box `[lo, hi]` for the step: trust region intersected with the
/// displacement cap around the initial centers.
fn step_bounds(c: &[Vec<f64>], c0: &[Vec<f64>], trust: f64, cap: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (ci, c0i) in c.iter().zip(c0) {
        for a in 0..ci.len() {
            let lo = (-trust).max(c0i[a] - cap - ci[a]).min(0.0);
            let hi = trust.min(c0i[a] + cap - ci[a]).max(0.0);
            out.push((lo, hi));
        }
    }
    out
}

/// Locally maximizes the common radius `r` of `k` balls in `domain`.
pub fn refine_maximin(centers: &[Vec<f64>], domain: &Domain) -> Result<PackingResult> {
    validate_centers(centers, domain)?;
    let k = centers.len();
    let dim = domain.dim();
    let nc = k * dim;
    let c0 = centers.to_vec();
    let mut c = centers.to_vec();
    let mut r = common_radius(&c, domain)?;
    let cap = DISPLACEMENT_CAP * r;
    let mut trust = 0.25 * r;
    let mut iterations = 0;

    while iterations < MAX_ITER && trust > MIN_TRUST * r.max(1.0) {
        iterations += 1;
        // variables: shifted displacements d = dc - lo (nc of them), then r
        let bounds = step_bounds(&c, &c0, trust, cap);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                let dij = dist(&c[i], &c[j]);
                let mut row = vec![0.0; nc + 1];
                let mut rhs = dij;
                for ax in 0..dim {
                    let u = (c[i][ax] - c[j][ax]) / dij;
                    row[i * dim + ax] = -u;
                    row[j * dim + ax] = u;
                    rhs += -u * bounds[i * dim + ax].0 + u * bounds[j * dim + ax].0;
                }
                row[nc] = 2.0;
                a.push(row);
                b.push(rhs);
            }
            for (w, g) in walls(domain, &c[i])? {
                let mut row = vec![0.0; nc + 1];
                let mut rhs = w;
                for ax in 0..dim {
                    row[i * dim + ax] = -g[ax];
                    rhs += g[ax] * bounds[i * dim + ax].0;
                }
                row[nc] = 1.0;
                a.push(row);
                b.push(rhs);
            }
        }
        for (v, &(lo, hi)) in bounds.iter().enumerate() {
            let mut row = vec![0.0; nc + 1];
            row[v] = 1.0;
            a.push(row);
            b.push(hi - lo);
        }
        let mut obj = vec![0.0; nc + 1];
        obj[nc] = 1.0;
        let x = lp::maximize(&obj, &a, &b)?;
        let predicted = x[nc];
        let trial: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                (0..dim)
                    .map(|ax| c[i][ax] + x[i * dim + ax] + bounds[i * dim + ax].0)
                    .collect()
            })
            .collect();
        let rt = common_radius(&trial, domain)?;
        if rt > r * (1.0 + 1e-15) {
            c = trial;
            let gain = rt - r;
            r = rt;
            if gain < 1e-15 * r {
                break;
            }
            if predicted - rt <= 0.25 * gain {
                trust = (2.0 * trust).min(0.25 * r.max(cap / 10.0));
            }
        } else {
            trust *= 0.25;
            if trust <= MIN_TRUST * r.max(1.0) {
                // pattern search on single coordinates before giving up
                if let Some((cn, rn)) = pattern_search(&c, &c0, cap, r, domain)? {
                    c = cn;
                    r = rn;
                    trust = 1e-3 * r;
                }
            }
        }
    }

    let config = DiskConfig {
        dim,
        centers: c,
        radii: vec![r; k],
        domain: domain.clone(),
    };
    let active = config.active(1e-7 * r.max(1e-3))?;
    Ok(PackingResult {
        config,
        objective: PackingObjective::Maximin,
        value: r,
        active_constraints: active,
        iterations,
    })
}

fn pattern_search(
    c: &[Vec<f64>],
    c0: &[Vec<f64>],
    cap: f64,
    r: f64,
    domain: &Domain,
) -> Result<Option<(Vec<Vec<f64>>, f64)>> {
    let mut best = c.to_vec();
    let mut rb = r;
    let mut step = 1e-3 * r;
    let mut improved = false;
    while step > 1e-12 * r {
        let mut moved = false;
        for i in 0..best.len() {
            for ax in 0..best[i].len() {
                for s in [step, -step] {
                    let mut t = best.clone();
                    t[i][ax] += s;
                    if (t[i][ax] - c0[i][ax]).abs() > cap {
                        continue;
                    }
                    let rt = common_radius(&t, domain)?;
                    if rt > rb * (1.0 + 1e-15) {
                        best = t;
                        rb = rt;
                        moved = true;
                        improved = true;
                    }
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok(improved.then_some((best, rb)))
}

/// Shrinks radii until every constraint holds: first against the walls, then
/// each overlapping pair proportionally. Shrinking never breaks a satisfied
/// constraint, so one pass suffices.
fn make_feasible(c: &[Vec<f64>], r: &mut [f64], domain: &Domain) -> Result<()> {
    for i in 0..c.len() {
        r[i] = r[i].min(boundary_distance(&c[i], domain)?);
    }
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            let d = dist(&c[i], &c[j]);
            let s = r[i] + r[j];
            if s > d {
                let f = d / s;
                r[i] *= f;
                r[j] *= f;
            }
        }
    }
    Ok(())
}

fn log_sum(r: &[f64]) -> f64 {
    if r.iter().any(|&v| !(v > 0.0)) {
        return f64::NEG_INFINITY;
    }
    r.iter().map(|v| v.ln()).sum()
}

/// Initial radii: the common radius, then each ball grown greedily in order.
fn initial_radii(c: &[Vec<f64>], domain: &Domain) -> Result<Vec<f64>> {
    let r0 = common_radius(c, domain)?;
    let mut r = vec![r0; c.len()];
    for i in 0..c.len() {
        let mut room = boundary_distance(&c[i], domain)?;
        for j in 0..c.len() {
            if j != i {
                room = room.min(dist(&c[i], &c[j]) - r[j]);
            }
        }
        r[i] = room.max(r[i]);
    }
    Ok(r)
}

/// Locally maximizes `sum log r_i` over centers and individual radii.
pub fn refine_product(centers: &[Vec<f64>], domain: &Domain) -> Result<PackingResult> {
    validate_centers(centers, domain)?;
    let k = centers.len();
    let dim = domain.dim();
    let nc = k * dim;
    let c0 = centers.to_vec();
    let mut c = centers.to_vec();
    let mut r = initial_radii(&c, domain)?;
    make_feasible(&c, &mut r, domain)?;
    let mut f = log_sum(&r);
    let r_ref = r.iter().cloned().fold(f64::INFINITY, f64::min);
    let cap = DISPLACEMENT_CAP * r_ref;
    // relative trust region: centers move by at most `trust * r_ref`, radii by `trust * r_i`
    let mut trust = 0.25;
    let mut iterations = 0;

    while iterations < MAX_ITER && trust > MIN_TRUST {
        iterations += 1;
        let bounds = step_bounds(&c, &c0, trust * r_ref, cap);
        let rb: Vec<(f64, f64)> = r.iter().map(|&ri| (-trust * ri, trust * ri)).collect();
        let nv = nc + k;
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                let dij = dist(&c[i], &c[j]);
                let mut row = vec![0.0; nv];
                let mut rhs = dij - r[i] - r[j] - rb[i].0 - rb[j].0;
                for ax in 0..dim {
                    let u = (c[i][ax] - c[j][ax]) / dij;
                    row[i * dim + ax] = -u;
                    row[j * dim + ax] = u;
                    rhs += -u * bounds[i * dim + ax].0 + u * bounds[j * dim + ax].0;
                }
                row[nc + i] = 1.0;
                row[nc + j] = 1.0;
                a.push(row);
                b.push(rhs);
            }
            for (w, g) in walls(domain, &c[i])? {
                let mut row = vec![0.0; nv];
                let mut rhs = w - r[i] - rb[i].0;
                for ax in 0..dim {
                    row[i * dim + ax] = -g[ax];
                    rhs += g[ax] * bounds[i * dim + ax].0;
                }
                row[nc + i] = 1.0;
                a.push(row);
                b.push(rhs);
            }
        }
        for (v, &(lo, hi)) in bounds.iter().chain(&rb).enumerate() {
            let mut row = vec![0.0; nv];
            row[v] = 1.0;
            a.push(row);
            b.push(hi - lo);
        }
        let mut obj = vec![0.0; nv];
        for i in 0..k {
            obj[nc + i] = 1.0 / r[i];
        }
        let x = match lp::maximize(&obj, &a, &b) {
            Ok(x) => x,
            Err(_) => {
                trust *= 0.25;
                continue;
            }
        };
        let ct: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                (0..dim)
                    .map(|ax| c[i][ax] + x[i * dim + ax] + bounds[i * dim + ax].0)
                    .collect()
            })
            .collect();
        let mut rt: Vec<f64> = (0..k).map(|i| r[i] + x[nc + i] + rb[i].0).collect();
        let inside = ct
            .iter()
            .map(|p| boundary_distance(p, domain).map(|d| d > 0.0))
            .collect::<Result<Vec<bool>>>()?;
        if inside.iter().all(|&b| b) {
            make_feasible(&ct, &mut rt, domain)?;
        }
        let ft = log_sum(&rt);
        if inside.iter().all(|&b| b) && ft > f + 1e-15 * f.abs().max(1.0) {
            let gain = ft - f;
            c = ct;
            r = rt;
            f = ft;
            if gain < 1e-15 {
                break;
            }
            trust = (2.0 * trust).min(0.5);
        } else {
            trust *= 0.25;
        }
    }

    let config = DiskConfig {
        dim,
        centers: c,
        radii: r,
        domain: domain.clone(),
    };
    let tol = 1e-7 * r_ref.max(1e-3);
    let active = config.active(tol)?;
    Ok(PackingResult {
        config,
        objective: PackingObjective::LogProduct,
        value: f,
        active_constraints: active,
        iterations,
    })
}
