//! Bound-constrained limited-memory BFGS.
//!
//! Each iteration fixes the variables sitting on a bound whose gradient
//! pushes outward, builds an L-BFGS direction on the remaining free
//! variables, and backtracks along the projected path `P(x + t d)` until the
//! Armijo condition holds. Infinite objective values count as failed trials.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sufficient-decrease constant of the line search.
pub const ARMIJO: f64 = 1e-4;
/// Curvature pairs with `s.y <= MIN_CURVATURE * |s| |y|` are not stored. The
/// test is relative so it does not depend on the scale of the objective.
pub const MIN_CURVATURE: f64 = 1e-12;

const MAX_BACKTRACKS: usize = 60;
/// Accepted steps whose relative decrease is at rounding level
/// (`STALL_FACTOR * f64::EPSILON`) end the run after this many in a row.
const STALL_STEPS: usize = 25;
const STALL_FACTOR: f64 = 10.0;
const INIT_ATTEMPTS: usize = 20;

/// Objective with box bounds. `objective(x, grad)` writes the gradient and
/// returns the value; it may return `+inf` for inadmissible points.
pub struct BoundProblem<F> {
    pub objective: F,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl<F> BoundProblem<F>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    pub fn new(objective: F, lower: Vec<f64>, upper: Vec<f64>) -> Result<BoundProblem<F>> {
        if lower.len() != upper.len() {
            return Err(Error::input("bound vectors differ in length"));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] <= upper[i])) {
            return Err(Error::input(format!("lower > upper at index {i}")));
        }
        Ok(BoundProblem {
            objective,
            lower,
            upper,
        })
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub memory: usize,
    /// Stop when the sup-norm of the projected gradient falls below this.
    pub tol: f64,
    pub maxit: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            memory: 5,
            tol: 1e-8,
            maxit: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ProjectedGradient,
    MaxIterations,
    /// No decrease could be found along the projected direction.
    LineSearch,
    /// Successive values agree to rounding level; the objective cannot be
    /// resolved further in floating point.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerReport {
    pub iterations: usize,
    pub evaluations: usize,
    pub final_value: f64,
    pub projected_gradient_norm: f64,
    pub converged: bool,
    pub stop: StopReason,
    /// Objective at the start point followed by every accepted iterate.
    pub value_trace: Vec<f64>,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

fn projected_gradient_norm(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..x.len() {
        let p = (x[i] - g[i]).clamp(lo[i], hi[i]) - x[i];
        m = m.max(p.abs());
    }
    m
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
}

fn masked_dot(a: &[f64], b: &[f64], free: &[bool]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        if free[i] {
            s += a[i] * b[i];
        }
    }
    s
}

/// `-H g` restricted to the free variables via the two-loop recursion.
fn lbfgs_direction(g: &[f64], free: &[bool], pairs: &VecDeque<Pair>) -> Vec<f64> {
    let n = g.len();
    let mut q: Vec<f64> = (0..n).map(|i| if free[i] { g[i] } else { 0.0 }).collect();
    let mut alphas = Vec::with_capacity(pairs.len());
    let mut rhos = Vec::with_capacity(pairs.len());
    for p in pairs.iter().rev() {
        let sy = masked_dot(&p.s, &p.y, free);
        if sy <= 0.0 {
            alphas.push(0.0);
            rhos.push(0.0);
            continue;
        }
        let rho = 1.0 / sy;
        let a = rho * masked_dot(&p.s, &q, free);
        for i in 0..n {
            if free[i] {
                q[i] -= a * p.y[i];
            }
        }
        alphas.push(a);
        rhos.push(rho);
    }
    let gamma = pairs
        .back()
        .map(|p| {
            let sy = masked_dot(&p.s, &p.y, free);
            let yy = masked_dot(&p.y, &p.y, free);
            if sy > 0.0 && yy > 0.0 {
                sy / yy
            } else {
                1.0
            }
        })
        .unwrap_or(1.0);
    q.iter_mut().for_each(|v| *v *= gamma);
    for (j, p) in pairs.iter().enumerate() {
        let idx = pairs.len() - 1 - j;
        let rho = rhos[idx];
        if rho == 0.0 {
            continue;
        }
        let b = rho * masked_dot(&p.y, &q, free);
        let a = alphas[idx];
        for i in 0..n {
            if free[i] {
                q[i] += (a - b) * p.s[i];
            }
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Minimizes `prob` from `x0` (clamped into the box).
///
/// If the objective is infinite at `x0`, the start is moved halfway towards
/// the box center up to 20 times; failing that is an initialization error.
pub fn minimize<F>(
    prob: &mut BoundProblem<F>,
    x0: &[f64],
    opts: &OptimizerOptions,
) -> Result<(Vec<f64>, OptimizerReport)>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = prob.dimension();
    if x0.len() != n {
        return Err(Error::input("start point has the wrong dimension"));
    }
    if opts.memory < 1 || !(opts.tol > 0.0) {
        return Err(Error::input("memory must be >= 1 and tol > 0"));
    }
    let lo = prob.lower.clone();
    let hi = prob.upper.clone();
    let mut x = x0.to_vec();
    project(&mut x, &lo, &hi);
    let mut g = vec![0.0; n];
    let mut evaluations = 1;
    let mut f = (prob.objective)(&x, &mut g);
    let mut attempts = 0;
    while !f.is_finite() {
        if attempts == INIT_ATTEMPTS {
            return Err(Error::Initialization(format!(
                "objective still infinite after {INIT_ATTEMPTS} moves towards the box center"
            )));
        }
        for i in 0..n {
            let c = 0.5 * (lo[i] + hi[i]);
            x[i] += 0.5 * (c - x[i]);
        }
        project(&mut x, &lo, &hi);
        f = (prob.objective)(&x, &mut g);
        evaluations += 1;
        attempts += 1;
    }

    let mut trace = vec![f];
    let mut pairs: VecDeque<Pair> = VecDeque::with_capacity(opts.memory);
    let mut iterations = 0;
    let mut x_trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut free = vec![true; n];
    let mut pg = projected_gradient_norm(&x, &g, &lo, &hi);
    let mut stalled = 0;
    let stop;

    loop {
        if pg <= opts.tol {
            stop = StopReason::ProjectedGradient;
            break;
        }
        if iterations >= opts.maxit {
            stop = StopReason::MaxIterations;
            break;
        }
        for i in 0..n {
            free[i] =
                lo[i] < hi[i] && !(x[i] <= lo[i] && g[i] > 0.0) && !(x[i] >= hi[i] && g[i] < 0.0);
        }
        let mut d = lbfgs_direction(&g, &free, &pairs);
        if !(masked_dot(&g, &d, &free) < 0.0) {
            pairs.clear();
            d = (0..n).map(|i| if free[i] { -g[i] } else { 0.0 }).collect();
        }

        // first step without curvature information is scaled to move at most ~1
        let mut t = if pairs.is_empty() {
            let dmax = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if dmax > 0.0 {
                (1.0 / dmax).min(1.0)
            } else {
                1.0
            }
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..n {
                x_trial[i] = x[i] + t * d[i];
            }
            project(&mut x_trial, &lo, &hi);
            let mut decrease = 0.0;
            let mut moved = false;
            for i in 0..n {
                let s = x_trial[i] - x[i];
                if s != 0.0 {
                    moved = true;
                }
                decrease += g[i] * s;
            }
            if !moved {
                break;
            }
            let ft = (prob.objective)(&x_trial, &mut g_trial);
            evaluations += 1;
            if ft.is_finite() && ft <= f + ARMIJO * decrease && decrease < 0.0 {
                accepted = Some(ft);
                break;
            }
            t *= 0.5;
        }

        match accepted {
            Some(ft) => {
                let s: Vec<f64> = (0..n).map(|i| x_trial[i] - x[i]).collect();
                let y: Vec<f64> = (0..n).map(|i| g_trial[i] - g[i]).collect();
                let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
                let ss: f64 = s.iter().map(|a| a * a).sum();
                let yy: f64 = y.iter().map(|a| a * a).sum();
                if sy > MIN_CURVATURE * (ss * yy).sqrt() {
                    if pairs.len() == opts.memory {
                        pairs.pop_front();
                    }
                    pairs.push_back(Pair { s, y });
                }
                std::mem::swap(&mut x, &mut x_trial);
                std::mem::swap(&mut g, &mut g_trial);
                if f - ft <= STALL_FACTOR * f64::EPSILON * f.abs().max(ft.abs()).max(1.0) {
                    stalled += 1;
                } else {
                    stalled = 0;
                }
                f = ft;
                trace.push(f);
                iterations += 1;
                pg = projected_gradient_norm(&x, &g, &lo, &hi);
                if stalled >= STALL_STEPS && pg > opts.tol {
                    stop = StopReason::Stalled;
                    break;
                }
            }
            None => {
                if pairs.is_empty() {
                    stop = StopReason::LineSearch;
                    break;
                }
                // retry from steepest descent
                pairs.clear();
            }
        }
    }

    let report = OptimizerReport {
        iterations,
        evaluations,
        final_value: f,
        projected_gradient_norm: pg,
        converged: stop == StopReason::ProjectedGradient,
        stop,
        value_trace: trace,
    };
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nonincreasing(trace: &[f64]) -> bool {
        trace.windows(2).all(|w| w[1] <= w[0])
    }

    #[test]
    fn interior_quadratic() {
        let n = 6;
        let mut prob = BoundProblem::new(
            |x: &[f64], g: &mut [f64]| {
                let mut f = 0.0;
                for i in 0..x.len() {
                    f += (x[i] - 0.3).powi(2);
                    g[i] = 2.0 * (x[i] - 0.3);
                }
                f
            },
            vec![0.0; n],
            vec![1.0; n],
        )
        .unwrap();
        let (x, rep) = minimize(&mut prob, &vec![0.0; n], &OptimizerOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(x.iter().all(|v| (v - 0.3).abs() <= 1e-7), "{x:?}");
        assert!(nonincreasing(&rep.value_trace));
    }

    #[test]
    fn active_lower_bound() {
        let n = 4;
        let mut prob = BoundProblem::new(
            |x: &[f64], g: &mut [f64]| {
                let mut f = 0.0;
                for i in 0..x.len() {
                    f += (x[i] + 1.0).powi(2);
                    g[i] = 2.0 * (x[i] + 1.0);
                }
                f
            },
            vec![0.0; n],
            vec![1.0; n],
        )
        .unwrap();
        let (x, rep) = minimize(&mut prob, &vec![0.7; n], &OptimizerOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rosenbrock() {
        let mut prob = BoundProblem::new(
            |x: &[f64], g: &mut [f64]| {
                let (a, b) = (x[0], x[1]);
                g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
                g[1] = 200.0 * (b - a * a);
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
            },
            vec![-2.0; 2],
            vec![2.0; 2],
        )
        .unwrap();
        let (x, rep) = minimize(&mut prob, &[-1.2, 1.0], &OptimizerOptions::default()).unwrap();
        assert!(
            (x[0] - 1.0).abs() < 1e-5 && (x[1] - 1.0).abs() < 1e-5,
            "{x:?} {rep:?}"
        );
        assert!(nonincreasing(&rep.value_trace));
    }

    fn diagonal_quadratic_iterations(n: usize, cond: f64) -> usize {
        let diag: Vec<f64> = (0..n)
            .map(|i| cond.powf(i as f64 / (n - 1) as f64))
            .collect();
        let mut prob = BoundProblem::new(
            |x: &[f64], g: &mut [f64]| {
                let mut f = 0.0;
                for i in 0..x.len() {
                    let d = x[i] - 0.6 * i as f64 / n as f64 + 0.1;
                    f += 0.5 * diag[i] * d * d;
                    g[i] = diag[i] * d;
                }
                f
            },
            vec![0.0; n],
            vec![1.0; n],
        )
        .unwrap();
        let (_, rep) = minimize(&mut prob, &vec![0.5; n], &OptimizerOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(nonincreasing(&rep.value_trace));
        rep.iterations
    }

    #[test]
    fn quadratic_terminates_quickly() {
        for n in [10, 20, 50, 100] {
            for cond in [1.0, 4.0] {
                let it = diagonal_quadratic_iterations(n, cond);
                assert!(it <= n + 10, "n={n} cond={cond}: {it}");
            }
        }
        // ill-conditioned and small: still converges, just not within n + 10
        assert!(diagonal_quadratic_iterations(8, 100.0) < 100);
    }

    #[test]
    fn infinite_start_is_recovered_or_reported() {
        let mut prob = BoundProblem::new(
            |x: &[f64], g: &mut [f64]| {
                if x[0] < 0.2 {
                    return f64::INFINITY;
                }
                g[0] = 2.0 * (x[0] - 0.5);
                (x[0] - 0.5).powi(2)
            },
            vec![0.0],
            vec![1.0],
        )
        .unwrap();
        let (x, _) = minimize(&mut prob, &[0.0], &OptimizerOptions::default()).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-7);

        let mut never = BoundProblem::new(
            |_: &[f64], _: &mut [f64]| f64::INFINITY,
            vec![0.0],
            vec![1.0],
        )
        .unwrap();
        let err = minimize(&mut never, &[0.0], &OptimizerOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Initialization(_)));
    }

    #[test]
    fn deterministic_traces() {
        let run = || {
            let mut prob = BoundProblem::new(
                |x: &[f64], g: &mut [f64]| {
                    let mut f = 0.0;
                    for i in 0..x.len() {
                        let c = (i as f64 * 0.37).sin();
                        f += (x[i] - c).powi(4) + x[i] * x[(i + 1) % x.len()];
                        g[i] = 4.0 * (x[i] - c).powi(3);
                    }
                    for i in 0..x.len() {
                        let n = x.len();
                        g[i] += x[(i + 1) % n] + x[(i + n - 1) % n];
                    }
                    f
                },
                vec![-1.0; 10],
                vec![1.0; 10],
            )
            .unwrap();
            minimize(&mut prob, &[0.1; 10], &OptimizerOptions::default()).unwrap()
        };
        let (xa, ra) = run();
        let (xb, rb) = run();
        assert_eq!(xa, xb);
        assert_eq!(ra.value_trace, rb.value_trace);
    }

    #[test]
    fn pinned_variables_stay_put() {
        let mut prob = BoundProblem::new(
            |x: &[f64], g: &mut [f64]| {
                g[0] = 2.0 * (x[0] - 0.4);
                g[1] = 2.0 * (x[1] - 0.9);
                (x[0] - 0.4).powi(2) + (x[1] - 0.9).powi(2)
            },
            vec![0.0, 0.0],
            vec![1.0, 0.0],
        )
        .unwrap();
        let (x, rep) = minimize(&mut prob, &[0.5, 0.5], &OptimizerOptions::default()).unwrap();
        assert_eq!(x[1], 0.0);
        assert!((x[0] - 0.4).abs() < 1e-8);
        assert!(rep.converged);
    }
}
