//! The penalized phase-field energy for alpha-Cheeger clusters and its exact
//! discrete gradient.
//!
//! For phases `u_1..u_k` on a grid the energy is
//!
//! ```text
//! F(u) = ( sum_i r_i^p )^(1/p)  +  c * sum_{i<j} int u_i^2 u_j^2
//! r_i  = MM(u_i) / V(u_i)^alpha
//! MM(u) = eps int |grad u|^2 + (9/eps) int u^2 (1-u)^2
//! V(u)  = int |u|^(2N/(N-1))
//! ```
//!
//! or, with [`PNorm::Power`], the plain power sum `sum_i r_i^p` in place of
//! the norm. Both have the same minimizers when the penalty vanishes, but the
//! power sum grows like `r^p` and for `p` near 100 swamps the penalty and any
//! absolute stopping tolerance.
//!
//! Every integral is replaced by the grid quadrature of [`crate::grid`]. The
//! gradient differentiates that quadrature directly, so it is the exact
//! gradient of the discrete objective the optimizer sees.

pub mod sharp;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dirichlet_energy, dirichlet_energy_grad, DomainMask, GridSpec, PhaseSystem};

pub use sharp::{measure_threshold, SharpMeasurement};

/// Fixed weight of the double-well term; normalizes the interface energy
/// constant `2 * int_0^1 3u(1-u) du` to one.
pub const DOUBLE_WELL_WEIGHT: f64 = 9.0;

/// Volumes below this fraction of the box volume make the energy infinite.
pub const VOLUME_FLOOR: f64 = 1e-12;

/// How the per-phase ratios are combined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PNorm {
    /// `(sum_i r_i^p)^(1/p)`
    #[default]
    Root,
    /// `sum_i r_i^p`
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub alpha: f64,
    pub p: f64,
    pub eps: f64,
    /// Cross-phase penalty weight; `None` means `1/eps`.
    #[serde(default)]
    pub penalty: Option<f64>,
    #[serde(default)]
    pub norm: PNorm,
}

impl EnergyParams {
    pub fn new(alpha: f64, p: f64, eps: f64) -> EnergyParams {
        EnergyParams {
            alpha,
            p,
            eps,
            penalty: None,
            norm: PNorm::Root,
        }
    }

    pub fn with_norm(mut self, norm: PNorm) -> EnergyParams {
        self.norm = norm;
        self
    }

    pub fn with_penalty(mut self, c: f64) -> EnergyParams {
        self.penalty = Some(c);
        self
    }

    pub fn penalty_coefficient(&self) -> f64 {
        self.penalty.unwrap_or(1.0 / self.eps)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let crit = critical_alpha(dim);
        if !(self.alpha > crit) {
            return Err(Error::config(
                "alpha",
                format!("alpha = {} must exceed (N-1)/N = {crit}", self.alpha),
            ));
        }
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return Err(Error::config("p", format!("p = {} must be >= 1", self.p)));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::config("eps", "eps must be positive"));
        }
        if let Some(c) = self.penalty {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::config("penalty", "penalty must be nonnegative"));
            }
        }
        Ok(())
    }
}

/// `(N-1)/N`, the scale-invariant exponent.
pub fn critical_alpha(dim: usize) -> f64 {
    (dim as f64 - 1.0) / dim as f64
}

/// Exponent of the volume proxy, `2N/(N-1)`.
pub fn volume_exponent(dim: usize) -> f64 {
    2.0 * dim as f64 / (dim as f64 - 1.0)
}

/// The energy split into its parts. Infinite parts serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyValue {
    #[serde(deserialize_with = "crate::serde_inf::scalar")]
    pub total: f64,
    pub per_phase_perimeter: Vec<f64>,
    pub per_phase_volume: Vec<f64>,
    #[serde(deserialize_with = "crate::serde_inf::vec")]
    pub per_phase_ratio: Vec<f64>,
    pub penalty_term: f64,
}

impl EnergyValue {
    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
    }
}

#[derive(Debug, Clone, Copy)]
struct PhaseTerms {
    dirichlet: f64,
    well: f64,
    volume: f64,
}

fn volume_power(dim: usize) -> i32 {
    if dim == 2 {
        4
    } else {
        3
    }
}

fn phase_terms(grid: &GridSpec, u: &[f64], q: i32) -> PhaseTerms {
    let w = grid.cell_weight();
    let mut well = 0.0;
    let mut volume = 0.0;
    for &v in u {
        let a = v * (1.0 - v);
        well += a * a;
        volume += v.abs().powi(q);
    }
    PhaseTerms {
        dirichlet: dirichlet_energy(grid, u),
        well: w * well,
        volume: w * volume,
    }
}

fn modica_mortola(t: &PhaseTerms, eps: f64) -> f64 {
    eps * t.dirichlet + DOUBLE_WELL_WEIGHT / eps * t.well
}

/// Adds `scale * d MM(u) / du` into `out`.
fn modica_mortola_grad(grid: &GridSpec, u: &[f64], eps: f64, scale: f64, out: &mut [f64]) {
    dirichlet_energy_grad(grid, u, scale * eps, out);
    let c = scale * grid.cell_weight() * DOUBLE_WELL_WEIGHT / eps;
    for (o, &v) in out.iter_mut().zip(u) {
        *o += c * 2.0 * v * (1.0 - v) * (1.0 - 2.0 * v);
    }
}

fn penalty_value(grid: &GridSpec, x: &[f64], k: usize) -> f64 {
    if k < 2 {
        return 0.0;
    }
    let n = grid.node_count();
    let mut acc = 0.0;
    for node in 0..n {
        let mut s = 0.0;
        let mut s4 = 0.0;
        for i in 0..k {
            let v2 = x[i * n + node] * x[i * n + node];
            s += v2;
            s4 += v2 * v2;
        }
        acc += 0.5 * (s * s - s4);
    }
    grid.cell_weight() * acc
}

fn penalty_grad(grid: &GridSpec, x: &[f64], k: usize, scale: f64, grad: &mut [f64]) {
    if k < 2 {
        return;
    }
    let n = grid.node_count();
    let c = scale * grid.cell_weight() * 2.0;
    for node in 0..n {
        let s: f64 = (0..k).map(|i| x[i * n + node] * x[i * n + node]).sum();
        for i in 0..k {
            let v = x[i * n + node];
            grad[i * n + node] += c * v * (s - v * v);
        }
    }
}

fn zero_masked(mask: &DomainMask, grad: &mut [f64]) {
    if mask.is_full() {
        return;
    }
    let n = mask.inside().len();
    for chunk in grad.chunks_mut(n) {
        mask.apply(chunk);
    }
}

/// Value (and optionally gradient) of the alpha-Cheeger energy on a
/// phase-major flat vector. Masked-out entries are assumed to be zero.
pub(crate) fn cheeger_energy_flat(
    grid: &GridSpec,
    mask: &DomainMask,
    k: usize,
    params: &EnergyParams,
    x: &[f64],
    grad: Option<&mut [f64]>,
) -> EnergyValue {
    let n = grid.node_count();
    let q = volume_power(grid.dim());
    let floor = VOLUME_FLOOR * grid.volume();
    let terms: Vec<PhaseTerms> = x.par_chunks(n).map(|u| phase_terms(grid, u, q)).collect();

    let perimeter: Vec<f64> = terms
        .iter()
        .map(|t| modica_mortola(t, params.eps))
        .collect();
    let volume: Vec<f64> = terms.iter().map(|t| t.volume).collect();
    let ratio: Vec<f64> = perimeter
        .iter()
        .zip(&volume)
        .map(|(&mm, &v)| {
            if v < floor {
                f64::INFINITY
            } else {
                mm / v.powf(params.alpha)
            }
        })
        .collect();
    let c_pen = params.penalty_coefficient();
    let penalty = c_pen * penalty_value(grid, x, k);
    // outer[i] = d(combined ratios) / d ratio[i]
    let (combined, outer) = combine(&ratio, params.p, params.norm);
    let total = combined + penalty;

    if let Some(grad) = grad {
        grad.iter_mut().for_each(|g| *g = 0.0);
        if total.is_finite() {
            let w = grid.cell_weight();
            grad.par_chunks_mut(n)
                .zip(x.par_chunks(n))
                .enumerate()
                .for_each(|(i, (g, u))| {
                    let outer = outer[i];
                    let va = volume[i].powf(params.alpha);
                    let a = outer / va;
                    let b = outer * params.alpha * perimeter[i] / (va * volume[i]);
                    modica_mortola_grad(grid, u, params.eps, a, g);
                    let cv = b * w * q as f64;
                    for (gi, &v) in g.iter_mut().zip(u) {
                        *gi -= cv * v.abs().powi(q - 1) * v.signum();
                    }
                });
            penalty_grad(grid, x, k, c_pen, grad);
            zero_masked(mask, grad);
        }
    }

    EnergyValue {
        total,
        per_phase_perimeter: perimeter,
        per_phase_volume: volume,
        per_phase_ratio: ratio,
        penalty_term: penalty,
    }
}

/// The combined ratio term and its partial derivatives. Infinite ratios give
/// an infinite value.
fn combine(ratio: &[f64], p: f64, norm: PNorm) -> (f64, Vec<f64>) {
    if ratio.iter().any(|r| !r.is_finite()) {
        return (f64::INFINITY, vec![0.0; ratio.len()]);
    }
    match norm {
        PNorm::Power => (
            ratio.iter().map(|r| r.powf(p)).sum(),
            ratio.iter().map(|r| p * r.powf(p - 1.0)).collect(),
        ),
        PNorm::Root => {
            // scaled by the largest ratio so r^p cannot overflow
            let top = ratio.iter().fold(0.0f64, |a, &b| a.max(b));
            if top == 0.0 {
                return (0.0, vec![0.0; ratio.len()]);
            }
            let s: f64 = ratio.iter().map(|r| (r / top).powf(p)).sum();
            let d = s.powf(1.0 / p - 1.0);
            (
                top * s.powf(1.0 / p),
                ratio.iter().map(|r| d * (r / top).powf(p - 1.0)).collect(),
            )
        }
    }
}

/// Parameters of the log-perimeter-product objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogPerimeterParams {
    pub eps: f64,
    pub area_target: f64,
    pub area_weight: f64,
    /// Cross-phase penalty weight; `None` means `1/eps`.
    #[serde(default)]
    pub penalty: Option<f64>,
}

impl LogPerimeterParams {
    /// Area penalty weight defaults to `10/eps`.
    pub fn new(eps: f64, area_target: f64) -> LogPerimeterParams {
        LogPerimeterParams {
            eps,
            area_target,
            area_weight: 10.0 / eps,
            penalty: None,
        }
    }

    pub fn penalty_coefficient(&self) -> f64 {
        self.penalty.unwrap_or(1.0 / self.eps)
    }
}

pub(crate) fn log_perimeter_flat(
    grid: &GridSpec,
    mask: &DomainMask,
    k: usize,
    params: &LogPerimeterParams,
    x: &[f64],
    grad: Option<&mut [f64]>,
) -> f64 {
    let n = grid.node_count();
    let w = grid.cell_weight();
    let q = volume_power(grid.dim());
    let terms: Vec<PhaseTerms> = x.par_chunks(n).map(|u| phase_terms(grid, u, q)).collect();
    let mm: Vec<f64> = terms
        .iter()
        .map(|t| modica_mortola(t, params.eps))
        .collect();
    let mass: Vec<f64> = x.chunks(n).map(|u| w * u.iter().sum::<f64>()).collect();
    let c_pen = params.penalty_coefficient();
    let value = if mm.iter().any(|&v| !(v > 0.0)) {
        f64::INFINITY
    } else {
        mm.iter().map(|v| v.ln()).sum::<f64>()
            + params.area_weight
                * mass
                    .iter()
                    .map(|a| (a - params.area_target).powi(2))
                    .sum::<f64>()
            + c_pen * penalty_value(grid, x, k)
    };
    if let Some(grad) = grad {
        grad.iter_mut().for_each(|g| *g = 0.0);
        if value.is_finite() {
            grad.par_chunks_mut(n)
                .zip(x.par_chunks(n))
                .enumerate()
                .for_each(|(i, (g, u))| {
                    modica_mortola_grad(grid, u, params.eps, 1.0 / mm[i], g);
                    let c = 2.0 * params.area_weight * (mass[i] - params.area_target) * w;
                    g.iter_mut().for_each(|gi| *gi += c);
                });
            penalty_grad(grid, x, k, c_pen, grad);
            zero_masked(mask, grad);
        }
    }
    value
}

fn unflatten(flat: Vec<f64>, n: usize) -> Vec<Vec<f64>> {
    flat.chunks(n).map(|c| c.to_vec()).collect()
}

/// Decomposed value of the penalized energy. A phase whose volume proxy is
/// below the floor yields an infinite ratio and infinite total.
pub fn evaluate(sys: &PhaseSystem, params: &EnergyParams) -> Result<EnergyValue> {
    params.validate(sys.grid().dim())?;
    let x = sys.to_flat();
    Ok(cheeger_energy_flat(
        sys.grid(),
        sys.mask(),
        sys.k(),
        params,
        &x,
        None,
    ))
}

/// Exact gradient of the discrete energy, one vector per phase.
pub fn gradient(sys: &PhaseSystem, params: &EnergyParams) -> Result<Vec<Vec<f64>>> {
    params.validate(sys.grid().dim())?;
    let x = sys.to_flat();
    let mut g = vec![0.0; x.len()];
    let e = cheeger_energy_flat(sys.grid(), sys.mask(), sys.k(), params, &x, Some(&mut g));
    if !e.is_finite() {
        return Err(Error::InfiniteEnergy(
            "a phase has a vanishing volume proxy".into(),
        ));
    }
    Ok(unflatten(g, sys.grid().node_count()))
}

/// `sum_i log MM(u_i) + area_weight * sum_i (int u_i - target)^2 + penalty`,
/// with its exact gradient. Infinite (with zero gradient) when some
/// interface term vanishes.
pub fn evaluate_log_perimeter(
    sys: &PhaseSystem,
    params: &LogPerimeterParams,
) -> Result<(f64, Vec<Vec<f64>>)> {
    if !(params.eps > 0.0) {
        return Err(Error::config("eps", "eps must be positive"));
    }
    let x = sys.to_flat();
    let mut g = vec![0.0; x.len()];
    let v = log_perimeter_flat(sys.grid(), sys.mask(), sys.k(), params, &x, Some(&mut g));
    Ok((v, unflatten(g, sys.grid().node_count())))
}
