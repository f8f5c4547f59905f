//! Uniform finite-difference grids, domain masks and the discrete integrals
//! that every energy is assembled from.
//!
//! Nodes are stored with the x index running fastest. Integrals use the
//! arithmetic-mean rule `volume(box) * mean(f)`. Gradient terms use first-order
//! differences across every grid edge; neighbors outside the box (non-periodic
//! grids) or outside the mask are zero.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shape::Shape;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    m: usize,
    extent: Vec<f64>,
    periodic: bool,
}

impl GridSpec {
    pub fn new(dim: usize, m: usize, extent: Vec<f64>, periodic: bool) -> Result<GridSpec> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::input(format!("dimension must be 2 or 3, got {dim}")));
        }
        if m < 4 {
            return Err(Error::input(format!(
                "need at least 4 nodes per axis, got {m}"
            )));
        }
        if extent.len() != dim {
            return Err(Error::input("extent length must equal the dimension"));
        }
        if extent.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::input("box lengths must be positive and finite"));
        }
        Ok(GridSpec {
            dim,
            m,
            extent,
            periodic,
        })
    }

    /// `[0,1]^dim` with `m` nodes per axis.
    pub fn unit(dim: usize, m: usize) -> Result<GridSpec> {
        GridSpec::new(dim, m, vec![1.0; dim], false)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    /// Node spacing along `axis`. On periodic grids node `m-1` wraps to node 0,
    /// so the spacing is `L/m`; otherwise nodes span the closed box and it is `L/(m-1)`.
    pub fn spacing(&self, axis: usize) -> f64 {
        if self.periodic {
            self.extent[axis] / self.m as f64
        } else {
            self.extent[axis] / (self.m - 1) as f64
        }
    }

    pub fn node_count(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    pub fn volume(&self) -> f64 {
        self.extent.iter().product()
    }

    /// Quadrature weight of a single node.
    pub fn cell_weight(&self) -> f64 {
        self.volume() / self.node_count() as f64
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.m.pow(axis as u32)
    }

    pub fn index(&self, ijk: &[usize]) -> usize {
        ijk.iter()
            .enumerate()
            .map(|(a, &i)| i * self.stride(a))
            .sum()
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for o in out.iter_mut().take(self.dim) {
            *o = idx % self.m;
            idx /= self.m;
        }
        out
    }

    /// Physical coordinates of node `idx`.
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let ijk = self.multi_index(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = ijk[a] as f64 * self.spacing(a);
        }
        x
    }

    /// Grid with `2m` nodes per axis over the same box.
    pub fn doubled(&self) -> GridSpec {
        GridSpec {
            m: 2 * self.m,
            ..self.clone()
        }
    }

    /// Calls `f(base, stride)` for every grid line parallel to `axis`; the nodes
    /// of the line are `base + j * stride` for `j in 0..m`.
    pub(crate) fn for_each_line(&self, axis: usize, mut f: impl FnMut(usize, usize)) {
        let s = self.stride(axis);
        let block = s * self.m;
        let outer = self.node_count() / block;
        for hi in 0..outer {
            for lo in 0..s {
                f(lo + hi * block, s);
            }
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.node_count() {
            return Err(Error::input(format!(
                "field has {len} values but the grid has {} nodes",
                self.node_count()
            )));
        }
        Ok(())
    }
}

/// Per-node inside/outside flags for a domain shape embedded in the grid box.
#[derive(Debug, Clone)]
pub struct DomainMask {
    inside: Vec<bool>,
    shape: Shape,
}

impl DomainMask {
    /// A node is inside iff its physical coordinates satisfy the shape predicate.
    pub fn build(grid: &GridSpec, shape: &Shape) -> DomainMask {
        let inside = if shape.is_box() {
            vec![true; grid.node_count()]
        } else {
            (0..grid.node_count())
                .map(|idx| {
                    let x = grid.coords(idx);
                    shape.contains(&x[..grid.dim()])
                })
                .collect()
        };
        DomainMask {
            inside,
            shape: shape.clone(),
        }
    }

    pub fn full(grid: &GridSpec) -> DomainMask {
        DomainMask::build(grid, &Shape::Box)
    }

    pub fn inside(&self) -> &[bool] {
        &self.inside
    }

    pub fn is_inside(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn is_full(&self) -> bool {
        self.inside.iter().all(|&b| b)
    }

    pub fn inside_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    /// Zero every value at a masked-out node.
    pub fn apply(&self, values: &mut [f64]) {
        for (v, &ins) in values.iter_mut().zip(&self.inside) {
            if !ins {
                *v = 0.0;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Result<ScalarField> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("non-finite field value at node {i}")));
        }
        Ok(ScalarField { values })
    }

    pub fn constant(grid: &GridSpec, c: f64) -> ScalarField {
        ScalarField {
            values: vec![c; grid.node_count()],
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(&[f64]) -> f64) -> ScalarField {
        let values = (0..grid.node_count())
            .map(|i| f(&grid.coords(i)[..grid.dim()]))
            .collect();
        ScalarField { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, s: f64) -> ScalarField {
        ScalarField {
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }
}

/// `k` density fields on a common grid and mask.
#[derive(Debug, Clone)]
pub struct PhaseSystem {
    grid: GridSpec,
    mask: DomainMask,
    phases: Vec<ScalarField>,
}

impl PhaseSystem {
    /// Checks `k >= 1`, field lengths, `0 <= u <= 1`, and zero outside the mask.
    pub fn new(grid: GridSpec, mask: DomainMask, phases: Vec<ScalarField>) -> Result<PhaseSystem> {
        if phases.is_empty() {
            return Err(Error::input("a phase system needs at least one phase"));
        }
        if mask.inside.len() != grid.node_count() {
            return Err(Error::input("mask does not match the grid"));
        }
        for (i, ph) in phases.iter().enumerate() {
            grid.check_len(ph.len())?;
            for (idx, &v) in ph.values.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::input(format!(
                        "phase {i} value {v} at node {idx} is outside [0, 1]"
                    )));
                }
                if v != 0.0 && !mask.inside[idx] {
                    return Err(Error::input(format!(
                        "phase {i} is nonzero at masked-out node {idx}"
                    )));
                }
            }
        }
        Ok(PhaseSystem { grid, mask, phases })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn mask(&self) -> &DomainMask {
        &self.mask
    }

    pub fn phases(&self) -> &[ScalarField] {
        &self.phases
    }

    pub fn phase(&self, i: usize) -> &ScalarField {
        &self.phases[i]
    }

    pub fn k(&self) -> usize {
        self.phases.len()
    }

    /// All phases concatenated, phase-major.
    pub fn to_flat(&self) -> Vec<f64> {
        self.phases
            .iter()
            .flat_map(|p| p.values.iter().copied())
            .collect()
    }

    /// Replaces the phase values from a phase-major flat vector.
    pub fn with_flat(&self, flat: &[f64]) -> Result<PhaseSystem> {
        let n = self.grid.node_count();
        if flat.len() != n * self.k() {
            return Err(Error::input("flat vector length does not match the system"));
        }
        let phases = flat
            .chunks(n)
            .map(|c| ScalarField::new(c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        PhaseSystem::new(self.grid.clone(), self.mask.clone(), phases)
    }

    /// Same system with the phase order permuted: phase `i` of the result is
    /// phase `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> PhaseSystem {
        PhaseSystem {
            grid: self.grid.clone(),
            mask: self.mask.clone(),
            phases: perm.iter().map(|&i| self.phases[i].clone()).collect(),
        }
    }

    /// Linear interpolation onto the doubled grid; the mask is rebuilt from the
    /// shape descriptor and re-applied.
    pub fn refine(&self) -> PhaseSystem {
        let fine = self.grid.doubled();
        let mask = DomainMask::build(&fine, self.mask.shape());
        let phases = self
            .phases
            .iter()
            .map(|p| {
                let (_, mut f) = refine(p, &self.grid);
                mask.apply(&mut f.values);
                for v in &mut f.values {
                    *v = v.clamp(0.0, 1.0);
                }
                f
            })
            .collect();
        PhaseSystem {
            grid: fine,
            mask,
            phases,
        }
    }
}

fn masked_values<'a>(f: &'a ScalarField, mask: &DomainMask) -> std::borrow::Cow<'a, [f64]> {
    if mask.is_full() {
        std::borrow::Cow::Borrowed(&f.values)
    } else {
        let mut v = f.values.clone();
        mask.apply(&mut v);
        std::borrow::Cow::Owned(v)
    }
}

fn check(f: &ScalarField, g: &GridSpec, mask: &DomainMask) -> Result<()> {
    g.check_len(f.len())?;
    g.check_len(mask.inside.len())
}

/// `volume(box) * mean(f)` with `f` forced to zero outside the mask.
pub fn integrate(f: &ScalarField, g: &GridSpec, mask: &DomainMask) -> Result<f64> {
    check(f, g, mask)?;
    let s: f64 = f
        .values
        .iter()
        .zip(&mask.inside)
        .filter(|(_, &ins)| ins)
        .map(|(v, _)| v)
        .sum();
    Ok(g.cell_weight() * s)
}

/// Quadrature of `|grad f|^2` from first-order edge differences with zero padding.
pub fn gradient_energy(f: &ScalarField, g: &GridSpec, mask: &DomainMask) -> Result<f64> {
    check(f, g, mask)?;
    Ok(dirichlet_energy(g, &masked_values(f, mask)))
}

/// Quadrature of `|f|^q`, `q > 1`.
pub fn lp_power(f: &ScalarField, q: f64, g: &GridSpec, mask: &DomainMask) -> Result<f64> {
    check(f, g, mask)?;
    if !(q > 1.0) {
        return Err(Error::input(format!("exponent must exceed 1, got {q}")));
    }
    let s: f64 = f
        .values
        .iter()
        .zip(&mask.inside)
        .filter(|(_, &ins)| ins)
        .map(|(v, _)| v.abs().powf(q))
        .sum();
    Ok(g.cell_weight() * s)
}

/// Multilinear interpolation of `f` onto the grid with `2m` nodes per axis.
///
/// Fine nodes are located by physical coordinates, so on non-periodic grids
/// only the box corners coincide with coarse nodes; on periodic grids every
/// coarse node `i` is fine node `2i`.
pub fn refine(f: &ScalarField, g: &GridSpec) -> (GridSpec, ScalarField) {
    let fine = g.doubled();
    let m = g.m();
    let dim = g.dim();
    let mut out = Vec::with_capacity(fine.node_count());
    for idx in 0..fine.node_count() {
        let x = fine.coords(idx);
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        let mut t = [0.0; 3];
        for a in 0..dim {
            let p = x[a] / g.spacing(a);
            if g.periodic() {
                let i0 = (p.floor() as usize) % m;
                lo[a] = i0;
                hi[a] = (i0 + 1) % m;
                t[a] = p - p.floor();
            } else {
                let p = p.clamp(0.0, (m - 1) as f64);
                let i0 = (p.floor() as usize).min(m - 2);
                lo[a] = i0;
                hi[a] = i0 + 1;
                t[a] = p - i0 as f64;
            }
        }
        let mut v = 0.0;
        for corner in 0..(1usize << dim) {
            let mut w = 1.0;
            let mut cidx = 0;
            for a in 0..dim {
                let (i, wa) = if corner >> a & 1 == 1 {
                    (hi[a], t[a])
                } else {
                    (lo[a], 1.0 - t[a])
                };
                w *= wa;
                cidx += i * g.stride(a);
            }
            if w != 0.0 {
                v += w * f.values[cidx];
            }
        }
        out.push(v);
    }
    (fine, ScalarField { values: out })
}

/// Discrete `int |grad u|^2` on a slice already zero outside the domain.
pub(crate) fn dirichlet_energy(g: &GridSpec, u: &[f64]) -> f64 {
    let m = g.m();
    let periodic = g.periodic();
    let mut total = 0.0;
    for a in 0..g.dim() {
        let inv_h2 = 1.0 / (g.spacing(a) * g.spacing(a));
        let mut acc = 0.0;
        g.for_each_line(a, |base, s| {
            let mut prev = if periodic { u[base + (m - 1) * s] } else { 0.0 };
            for j in 0..m {
                let v = u[base + j * s];
                let d = v - prev;
                acc += d * d;
                prev = v;
            }
            if !periodic {
                acc += prev * prev;
            }
        });
        total += inv_h2 * acc;
    }
    g.cell_weight() * total
}

/// Adds `scale * d/du dirichlet_energy(u)` into `out`.
pub(crate) fn dirichlet_energy_grad(g: &GridSpec, u: &[f64], scale: f64, out: &mut [f64]) {
    let m = g.m();
    let periodic = g.periodic();
    let w = g.cell_weight();
    for a in 0..g.dim() {
        let c = scale * w * 2.0 / (g.spacing(a) * g.spacing(a));
        g.for_each_line(a, |base, s| {
            for j in 0..m {
                let left = if j > 0 {
                    u[base + (j - 1) * s]
                } else if periodic {
                    u[base + (m - 1) * s]
                } else {
                    0.0
                };
                let right = if j + 1 < m {
                    u[base + (j + 1) * s]
                } else if periodic {
                    u[base]
                } else {
                    0.0
                };
                let idx = base + j * s;
                out[idx] += c * (2.0 * u[idx] - left - right);
            }
        });
    }
}

/// Raw little-endian dump: a 16-byte header (`dim`, then `m` per axis as u32,
/// zero padded) followed by one f64 per node.
pub fn write_raw<W: Write>(f: &ScalarField, g: &GridSpec, mut w: W) -> Result<()> {
    g.check_len(f.len())?;
    let mut header = [0u8; 16];
    header[0..4].copy_from_slice(&(g.dim() as u32).to_le_bytes());
    for a in 0..g.dim() {
        let o = 4 + 4 * a;
        header[o..o + 4].copy_from_slice(&(g.m() as u32).to_le_bytes());
    }
    w.write_all(&header)?;
    for v in &f.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a raw dump, returning `(dim, nodes per axis, field)`.
pub fn read_raw<R: Read>(mut r: R) -> Result<(usize, Vec<usize>, ScalarField)> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    let word = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap()) as usize;
    let dim = word(0);
    if !(dim == 2 || dim == 3) {
        return Err(Error::input(format!("raw header has dimension {dim}")));
    }
    let ms: Vec<usize> = (0..dim).map(|a| word(4 + 4 * a)).collect();
    let n: usize = ms.iter().product();
    let mut buf = vec![0u8; 8 * n];
    r.read_exact(&mut buf)?;
    let values = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((dim, ms, ScalarField::new(values)?))
}

/// CSV with one node per row: coordinates then value.
pub fn write_csv<W: Write>(f: &ScalarField, g: &GridSpec, mut w: W) -> Result<()> {
    g.check_len(f.len())?;
    let header = if g.dim() == 2 {
        "x,y,value"
    } else {
        "x,y,z,value"
    };
    writeln!(w, "{header}")?;
    for (idx, v) in f.values.iter().enumerate() {
        let x = g.coords(idx);
        for c in &x[..g.dim()] {
            write!(w, "{c},")?;
        }
        writeln!(w, "{v}")?;
    }
    Ok(())
}
