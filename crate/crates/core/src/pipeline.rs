//! Staged optimization: random start, minimize on a coarse grid, refine,
//! minimize again, and finally threshold the densities.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{
    cheeger_energy_flat, critical_alpha, log_perimeter_flat, measure_threshold, EnergyParams,
    EnergyValue, LogPerimeterParams, PNorm, SharpMeasurement,
};
use crate::grid::{write_raw, DomainMask, GridSpec, PhaseSystem, ScalarField};
use crate::optimizer::{minimize, BoundProblem, OptimizerOptions, OptimizerReport, StopReason};
use crate::render;
use crate::shape::{Domain, Shape};

/// How the interface width follows the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsSchedule {
    /// `eps = eps_factor * L / m` with `m` the nodes of the current stage.
    PerStage,
    /// `eps = eps_factor * L / m0` on every stage.
    Fixed,
}

/// Random starting densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Independent uniform values per node, see [`init_random`].
    Noise,
    /// Indicators of the Voronoi cells of `k` random inside nodes, see
    /// [`init_voronoi`].
    Voronoi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    CheegerPnorm,
    LogPerimeter,
}

/// Everything needed to reproduce a run. Deserializes from a flat JSON object;
/// missing keys take the defaults of [`RunConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub k: usize,
    pub alpha: f64,
    pub p: f64,
    /// How the per-phase ratios enter the energy.
    pub norm: PNorm,
    pub dim: usize,
    pub domain: Domain,
    /// Nodes per axis on the first stage.
    pub m0: usize,
    pub stages: usize,
    /// Interface width is `eps_factor * L / m`, `L` the longest box side and
    /// `m` chosen by `eps_schedule`.
    pub eps_factor: f64,
    pub eps_schedule: EpsSchedule,
    pub seed: u64,
    pub init: Init,
    pub objective: Objective,
    pub periodic: bool,
    /// Required final resolution; checked against `m0 * 2^(stages-1)`.
    pub target_resolution: Option<usize>,
    /// Cross-phase penalty weight; `None` means `m / (eps_factor * L)` on a
    /// stage with `m` nodes per axis, which is `1/eps` when `eps` follows the grid.
    pub penalty: Option<f64>,
    /// Log-perimeter objective: prescribed area of every cell (default: box
    /// volume over `k`) and the weight of its quadratic penalty (default `10/eps`).
    pub area_target: Option<f64>,
    pub area_weight: Option<f64>,
    /// Threshold of the final sharp measurement; `None` means the final `eps`,
    /// so the measured set still reaches the zero boundary layer.
    pub level: Option<f64>,
    pub memory: usize,
    pub tol: f64,
    pub maxit: usize,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            k: 1,
            alpha: 1.0,
            p: 1.0,
            norm: PNorm::Root,
            dim: 2,
            domain: Domain::unit_square(),
            m0: 20,
            stages: 5,
            eps_factor: 1.0,
            eps_schedule: EpsSchedule::Fixed,
            seed: 0,
            init: Init::Noise,
            objective: Objective::CheegerPnorm,
            periodic: false,
            target_resolution: None,
            penalty: None,
            area_target: None,
            area_weight: None,
            level: None,
            memory: 5,
            tol: 1e-8,
            maxit: 10000,
        }
    }
}

impl RunConfig {
    /// Defaults for a unit cube in 3D (`m0 = 10`, four stages).
    pub fn unit_cube() -> RunConfig {
        RunConfig {
            dim: 3,
            domain: Domain::new(vec![1.0; 3], Shape::Box),
            m0: 10,
            stages: 4,
            ..RunConfig::default()
        }
    }

    pub fn final_m(&self) -> usize {
        self.m0 << self.stages.saturating_sub(1)
    }

    pub fn m_at(&self, stage: usize) -> usize {
        self.m0 << stage
    }

    pub fn eps_at(&self, stage: usize) -> f64 {
        let l = self.domain.extent.iter().fold(0.0f64, |a, &b| a.max(b));
        let m = match self.eps_schedule {
            EpsSchedule::PerStage => self.m_at(stage),
            EpsSchedule::Fixed => self.m0,
        };
        self.eps_factor * l / m as f64
    }

    pub fn penalty_at(&self, stage: usize) -> f64 {
        let l = self.domain.extent.iter().fold(0.0f64, |a, &b| a.max(b));
        let grid_eps = self.eps_factor * l / self.m_at(stage) as f64;
        self.penalty
            .unwrap_or_else(|| 1.0 / (self.eps_at(stage) * grid_eps))
    }

    /// Defaults to the final `eps` for a single phase. Neighbouring cells of a
    /// cluster share their transition layers, so several phases use 1/2.
    pub fn measure_level(&self) -> f64 {
        self.level.unwrap_or_else(|| {
            if self.k == 1 {
                self.eps_at(self.stages - 1).min(0.5)
            } else {
                0.5
            }
        })
    }

    pub fn optimizer_options(&self) -> OptimizerOptions {
        OptimizerOptions {
            memory: self.memory,
            tol: self.tol,
            maxit: self.maxit,
        }
    }

    /// Checks every key; errors name the offending one.
    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::config(
                "dim",
                format!("must be 2 or 3, got {}", self.dim),
            ));
        }
        if self.domain.dim() != self.dim {
            return Err(Error::config(
                "domain",
                format!(
                    "extent has {} axes but dim = {}",
                    self.domain.dim(),
                    self.dim
                ),
            ));
        }
        if self
            .domain
            .extent
            .iter()
            .any(|&l| !(l > 0.0 && l.is_finite()))
        {
            return Err(Error::config("domain", "box extents must be positive"));
        }
        self.domain
            .shape
            .validate(self.dim)
            .map_err(|e| Error::config("domain", e.to_string()))?;
        if self.k == 0 {
            return Err(Error::config("k", "need at least one phase"));
        }
        if self.objective == Objective::CheegerPnorm && !(self.alpha > critical_alpha(self.dim)) {
            return Err(Error::config(
                "alpha",
                format!(
                    "alpha = {} must exceed (N-1)/N = {}",
                    self.alpha,
                    critical_alpha(self.dim)
                ),
            ));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::config("p", format!("must be >= 1, got {}", self.p)));
        }
        if self.m0 < 4 {
            return Err(Error::config(
                "m0",
                format!("must be >= 4, got {}", self.m0),
            ));
        }
        if self.stages == 0 || self.stages > 12 {
            return Err(Error::config("stages", "must be between 1 and 12"));
        }
        if !(self.eps_factor > 0.0 && self.eps_factor.is_finite()) {
            return Err(Error::config("eps_factor", "must be positive"));
        }
        if let Some(t) = self.target_resolution {
            if self.final_m() < t {
                return Err(Error::config(
                    "target_resolution",
                    format!(
                        "m0 * 2^(stages-1) = {} is below the target {t}",
                        self.final_m()
                    ),
                ));
            }
        }
        if let Some(c) = self.penalty {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::config("penalty", "must be >= 0"));
            }
        }
        if let Some(a) = self.area_target {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::config("area_target", "must be positive"));
            }
        }
        if let Some(w) = self.area_weight {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::config("area_weight", "must be >= 0"));
            }
        }
        if let Some(l) = self.level {
            if !(l > 0.0 && l < 1.0) {
                return Err(Error::config("level", "must lie in (0, 1)"));
            }
        }
        if self.memory == 0 {
            return Err(Error::config("memory", "must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("tol", "must be positive"));
        }
        if self.periodic && !self.domain.shape.is_box() {
            return Err(Error::config(
                "periodic",
                "periodic grids need a box domain",
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<RunConfig> {
        let c: RunConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}

/// Independent uniform values at inside nodes, jointly rescaled so the phases
/// sum to at most one at every node.
pub fn init_random(grid: &GridSpec, mask: &DomainMask, k: usize, seed: u64) -> Result<PhaseSystem> {
    if k == 0 {
        return Err(Error::input("need at least one phase"));
    }
    let n = grid.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phases = vec![vec![0.0; n]; k];
    for idx in 0..n {
        if !mask.is_inside(idx) {
            continue;
        }
        let mut s = 0.0;
        for ph in phases.iter_mut() {
            let v: f64 = rng.random_range(0.0..1.0);
            ph[idx] = v;
            s += v;
        }
        if s > 1.0 {
            for ph in phases.iter_mut() {
                ph[idx] /= s;
            }
        }
    }
    let phases = phases
        .into_iter()
        .map(ScalarField::new)
        .collect::<Result<Vec<_>>>()?;
    PhaseSystem::new(grid.clone(), mask.clone(), phases)
}

/// Each phase is the indicator of the Voronoi cell of a distinct random
/// inside node, with distances wrapped on periodic grids. A segregated start
/// for partition problems, where noise averages out to a stable uniform state.
pub fn init_voronoi(
    grid: &GridSpec,
    mask: &DomainMask,
    k: usize,
    seed: u64,
) -> Result<PhaseSystem> {
    if k == 0 {
        return Err(Error::input("need at least one phase"));
    }
    let inside: Vec<usize> = (0..grid.node_count())
        .filter(|&i| mask.is_inside(i))
        .collect();
    if inside.len() < k {
        return Err(Error::input("fewer inside nodes than phases"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sites: Vec<[f64; 3]> = Vec::with_capacity(k);
    let mut used = Vec::with_capacity(k);
    while sites.len() < k {
        let idx = inside[rng.random_range(0..inside.len())];
        if !used.contains(&idx) {
            used.push(idx);
            sites.push(grid.coords(idx));
        }
    }
    let ext = grid.extent();
    let dist2 = |a: &[f64; 3], b: &[f64; 3]| {
        (0..grid.dim())
            .map(|d| {
                let mut t = (a[d] - b[d]).abs();
                if grid.periodic() {
                    t = t.min(ext[d] - t);
                }
                t * t
            })
            .sum::<f64>()
    };
    let n = grid.node_count();
    let mut phases = vec![vec![0.0; n]; k];
    for &idx in &inside {
        let x = grid.coords(idx);
        let best = (0..k)
            .min_by(|&a, &b| dist2(&x, &sites[a]).total_cmp(&dist2(&x, &sites[b])))
            .unwrap_or(0);
        phases[best][idx] = 1.0;
    }
    let phases = phases
        .into_iter()
        .map(ScalarField::new)
        .collect::<Result<Vec<_>>>()?;
    PhaseSystem::new(grid.clone(), mask.clone(), phases)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: usize,
    pub m: usize,
    pub eps: f64,
    pub iterations: usize,
    pub evaluations: usize,
    #[serde(deserialize_with = "crate::serde_inf::scalar")]
    pub initial_value: f64,
    #[serde(deserialize_with = "crate::serde_inf::scalar")]
    pub final_value: f64,
    pub projected_gradient_norm: f64,
    pub converged: bool,
    pub stop: StopReason,
    /// Decomposition of the final energy (alpha-Cheeger objective only).
    pub energy: Option<EnergyValue>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: RunConfig,
    pub final_system: PhaseSystem,
    pub stages: Vec<StageSummary>,
    pub reports: Vec<OptimizerReport>,
    /// Threshold measurement on the final stage at [`RunConfig::measure_level`].
    pub sharp: SharpMeasurement,
}

/// JSON form of a run (the final densities go to separate files).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub stages: Vec<StageSummary>,
    pub sharp: SharpMeasurement,
    #[serde(deserialize_with = "crate::serde_inf::scalar")]
    pub final_value: f64,
}

impl RunResult {
    pub fn final_value(&self) -> f64 {
        self.stages.last().map_or(f64::INFINITY, |s| s.final_value)
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            config: self.config.clone(),
            stages: self.stages.clone(),
            sharp: self.sharp.clone(),
            final_value: self.final_value(),
        }
    }

    /// Writes `result.json`, `trace.csv`, `phase_i.f64`, `phase_i.pgm` and
    /// `composite.pgm` (3D runs render the middle z-slice).
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let f = BufWriter::new(File::create(dir.join("result.json"))?);
        serde_json::to_writer_pretty(f, &self.summary())?;

        let mut t = BufWriter::new(File::create(dir.join("trace.csv"))?);
        writeln!(t, "stage,m,iteration,value")?;
        for (s, rep) in self.stages.iter().zip(&self.reports) {
            for (i, v) in rep.value_trace.iter().enumerate() {
                writeln!(t, "{},{},{},{}", s.stage, s.m, i, v)?;
            }
        }
        t.flush()?;

        let sys = &self.final_system;
        for (i, ph) in sys.phases().iter().enumerate() {
            let w = BufWriter::new(File::create(dir.join(format!("phase_{i}.f64")))?);
            write_raw(ph, sys.grid(), w)?;
            let img = render::phase_image(sys, i);
            img.write_pgm(BufWriter::new(File::create(
                dir.join(format!("phase_{i}.pgm")),
            )?))?;
        }
        render::composite_image(sys)
            .write_pgm(BufWriter::new(File::create(dir.join("composite.pgm"))?))?;
        Ok(())
    }
}

fn phase_bounds(mask: &DomainMask, k: usize) -> (Vec<f64>, Vec<f64>) {
    let n = mask.inside().len();
    let lower = vec![0.0; n * k];
    let mut upper = Vec::with_capacity(n * k);
    for _ in 0..k {
        upper.extend(mask.inside().iter().map(|&b| if b { 1.0 } else { 0.0 }));
    }
    (lower, upper)
}

/// Minimizes the configured objective on `sys` with interface width `eps`.
fn run_stage(
    config: &RunConfig,
    sys: &PhaseSystem,
    eps: f64,
    penalty: f64,
) -> Result<(PhaseSystem, OptimizerReport, Option<EnergyValue>)> {
    let grid = sys.grid().clone();
    let mask = sys.mask().clone();
    let k = sys.k();
    let (lower, upper) = phase_bounds(&mask, k);
    let x0 = sys.to_flat();
    let opts = config.optimizer_options();
    match config.objective {
        Objective::CheegerPnorm => {
            let params = EnergyParams::new(config.alpha, config.p, eps)
                .with_norm(config.norm)
                .with_penalty(penalty);
            params.validate(grid.dim())?;
            let mut prob = BoundProblem::new(
                |x: &[f64], g: &mut [f64]| {
                    cheeger_energy_flat(&grid, &mask, k, &params, x, Some(g)).total
                },
                lower,
                upper,
            )?;
            let (x, rep) = minimize(&mut prob, &x0, &opts)?;
            let e = cheeger_energy_flat(&grid, &mask, k, &params, &x, None);
            Ok((sys.with_flat(&x)?, rep, Some(e)))
        }
        Objective::LogPerimeter => {
            let target = config.area_target.unwrap_or(grid.volume() / k as f64);
            let mut params = LogPerimeterParams::new(eps, target);
            if let Some(w) = config.area_weight {
                params.area_weight = w;
            }
            params.penalty = Some(penalty);
            let mut prob = BoundProblem::new(
                |x: &[f64], g: &mut [f64]| log_perimeter_flat(&grid, &mask, k, &params, x, Some(g)),
                lower,
                upper,
            )?;
            let (x, rep) = minimize(&mut prob, &x0, &opts)?;
            Ok((sys.with_flat(&x)?, rep, None))
        }
    }
}

/// Runs all stages from a random start.
pub fn run(config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    let grid = GridSpec::new(
        config.dim,
        config.m0,
        config.domain.extent.clone(),
        config.periodic,
    )?;
    let mask = DomainMask::build(&grid, &config.domain.shape);
    let start = match config.init {
        Init::Noise => init_random(&grid, &mask, config.k, config.seed)?,
        Init::Voronoi => init_voronoi(&grid, &mask, config.k, config.seed)?,
    };
    run_from(config, start)
}

/// Runs all stages from a given start on the first-stage grid.
pub fn run_from(config: &RunConfig, start: PhaseSystem) -> Result<RunResult> {
    config.validate()?;
    if start.grid().m() != config.m0 || start.k() != config.k {
        return Err(Error::input("start system does not match m0 and k"));
    }
    let mut sys = start;
    let mut stages = Vec::with_capacity(config.stages);
    let mut reports = Vec::with_capacity(config.stages);
    for s in 0..config.stages {
        if s > 0 {
            sys = sys.refine();
        }
        let eps = config.eps_at(s);
        let (next, rep, energy) = run_stage(config, &sys, eps, config.penalty_at(s))?;
        sys = next;
        stages.push(StageSummary {
            stage: s,
            m: sys.grid().m(),
            eps,
            iterations: rep.iterations,
            evaluations: rep.evaluations,
            initial_value: rep.value_trace[0],
            final_value: rep.final_value,
            projected_gradient_norm: rep.projected_gradient_norm,
            converged: rep.converged,
            stop: rep.stop,
            energy,
        });
        reports.push(rep);
    }
    let sharp = measure_threshold(&sys, config.measure_level(), config.alpha)?;
    Ok(RunResult {
        config: config.clone(),
        final_system: sys,
        stages,
        reports,
        sharp,
    })
}

/// Independent runs over `seeds` (in parallel); the lowest final energy wins,
/// ties going to the earliest seed.
pub fn run_seeds(config: &RunConfig, seeds: &[u64]) -> Result<RunResult> {
    if seeds.is_empty() {
        return Err(Error::config("seeds", "empty seed range"));
    }
    let results: Vec<Result<RunResult>> = seeds
        .par_iter()
        .map(|&seed| {
            let c = RunConfig {
                seed,
                ..config.clone()
            };
            run(&c)
        })
        .collect();
    let mut best: Option<RunResult> = None;
    for r in results {
        let r = r?;
        if best
            .as_ref()
            .is_none_or(|b| r.final_value() < b.final_value())
        {
            best = Some(r);
        }
    }
    Ok(best.expect("non-empty"))
}
