//! Dense two-phase simplex for the small linear programs of the packing
//! refinement: maximize `c.x` subject to `A x <= b`, `x >= 0`.

use crate::error::{Error, Result};

const TOL: f64 = 1e-11;
const MAX_PIVOTS: usize = 50_000;
/// Pivots without objective progress before switching to Bland's rule.
const STALL: usize = 50;

struct Tableau {
    /// `rows x (cols + 1)`, last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, &q) in row.iter_mut().zip(&prow) {
                    *v -= f * q;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    fn value(&self, obj: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &b)| obj[b] * self.t[i][self.cols])
            .sum()
    }

    /// Maximizes `obj` over the current basic feasible tableau; columns with
    /// `allowed[j] == false` never enter.
    fn optimize(&mut self, obj: &[f64], allowed: &[bool]) -> Result<()> {
        let rhs = self.cols;
        let mut best = self.value(obj);
        let mut stalled = 0;
        for _ in 0..MAX_PIVOTS {
            let bland = stalled >= STALL;
            let mut enter = None;
            let mut best_rc = TOL;
            for j in 0..self.cols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let rc = obj[j]
                    - self
                        .basis
                        .iter()
                        .enumerate()
                        .map(|(i, &b)| obj[b] * self.t[i][j])
                        .sum::<f64>();
                if rc > best_rc {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best_rc = rc;
                }
            }
            let Some(c) = enter else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][c];
                if a > TOL {
                    let ratio = self.t[i][rhs] / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - TOL
                                || (ratio <= lr + TOL && self.basis[i] < self.basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Lp("is unbounded".into()));
            };
            self.pivot(r, c);
            let v = self.value(obj);
            if v > best + TOL * (1.0 + best.abs()) {
                best = v;
                stalled = 0;
            } else {
                stalled += 1;
            }
        }
        Err(Error::Lp("exceeded the pivot limit".into()))
    }
}

/// Returns an optimal `x`.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = c.len();
    let m = b.len();
    if a.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::Lp("has inconsistent dimensions".into()));
    }
    if c.iter()
        .chain(b)
        .chain(a.iter().flatten())
        .any(|v| !v.is_finite())
    {
        return Err(Error::Lp("has non-finite data".into()));
    }
    // columns: x (n), slacks (m), artificials (one per negative rhs)
    let neg: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let cols = n + m + neg.len();
    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0; m];
    let mut art = 0;
    for i in 0..m {
        let s = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = s * a[i][j];
        }
        t[i][n + i] = s;
        t[i][cols] = s * b[i];
        if s < 0.0 {
            t[i][n + m + art] = 1.0;
            basis[i] = n + m + art;
            art += 1;
        } else {
            basis[i] = n + i;
        }
    }
    let mut tab = Tableau { t, basis, cols };

    if !neg.is_empty() {
        let mut obj = vec![0.0; cols];
        for v in obj.iter_mut().skip(n + m) {
            *v = -1.0;
        }
        tab.optimize(&obj, &vec![true; cols])?;
        let scale = 1.0 + b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        if tab.value(&obj) < -1e-9 * scale {
            return Err(Error::Lp("is infeasible".into()));
        }
        // drive zero-level artificials out of the basis
        for i in 0..m {
            if tab.basis[i] >= n + m {
                if let Some(j) = (0..n + m).find(|&j| tab.t[i][j].abs() > 1e-9) {
                    tab.pivot(i, j);
                }
            }
        }
    }

    let mut obj = vec![0.0; cols];
    obj[..n].copy_from_slice(c);
    let allowed: Vec<bool> = (0..cols).map(|j| j < n + m).collect();
    tab.optimize(&obj, &allowed)?;
    let mut x = vec![0.0; n];
    for (i, &bv) in tab.basis.iter().enumerate() {
        if bv < n {
            x[bv] = tab.t[i][cols].max(0.0);
        }
    }
    Ok(x)
}
