//! Command-line front end: builds a [`RunConfig`] from defaults, a JSON file
//! and flags, runs it, and writes the output tree.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 bad configuration (the message
//! names the key), 3 optimizer initialization failure.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::functional::critical_alpha;
use crate::klr::{self, CheegerExact, ConvexPolygon};
use crate::packing::{self, PackingResult};
use crate::pipeline::{self, Init, Objective, RunConfig, RunResult};
use crate::render;
use crate::shape::{Domain, Shape};

#[derive(Debug, Parser)]
#[command(
    name = "alpha-cheeger",
    version,
    about = "Phase-field alpha-Cheeger sets, clusters and packings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single alpha-Cheeger set (k = 1).
    Cheeger(RunArgs),
    /// Cluster of k >= 2 cells.
    Cluster(RunArgs),
    /// Cluster near the critical alpha with a large p, then a local packing refinement.
    Pack(PackArgs),
    /// Exact Cheeger set of a convex polygon.
    Oracle(OracleArgs),
    /// Phase-field Cheeger set of a convex polygon against the exact one.
    Compare(CompareArgs),
    /// Log-perimeter-product partition of a periodic box into unit-area cells.
    PerimeterProduct(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON file with RunConfig keys; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Half-open seed range `a..b`; the run with the lowest final energy is kept.
    #[arg(long, value_parser = parse_seeds)]
    pub seeds: Option<Range<u64>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub eps_factor: Option<f64>,
    #[arg(long)]
    pub stages: Option<usize>,
    #[arg(long)]
    pub m0: Option<usize>,
    #[arg(long)]
    pub periodic: bool,
    /// Any other RunConfig key, value in JSON (`--set tol=1e-9`).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PackObjective {
    Maximin,
    Product,
}

#[derive(Debug, Clone, Args)]
pub struct PackArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum, default_value = "maximin")]
    pub objective: PackObjective,
    /// Super-level set whose barycenters seed the refinement.
    #[arg(long, default_value_t = 0.5)]
    pub level: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// Vertices as `x,y;x,y;...` (default: unit square).
    #[arg(long)]
    pub polygon: Option<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Samples per corner arc in the boundary CSV.
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Vertices as `x,y;x,y;...`; otherwise the configured polygon or box.
    #[arg(long)]
    pub polygon: Option<String>,
}

fn parse_seeds(s: &str) -> std::result::Result<Range<u64>, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected a..b, got `{s}`"))?;
    let a: u64 = a
        .trim()
        .parse()
        .map_err(|e| format!("bad seed `{a}`: {e}"))?;
    let b: u64 = b
        .trim()
        .parse()
        .map_err(|e| format!("bad seed `{b}`: {e}"))?;
    if b <= a {
        return Err(format!("empty seed range {a}..{b}"));
    }
    Ok(a..b)
}

/// Parses `x,y;x,y;...`.
pub fn parse_polygon(s: &str) -> Result<ConvexPolygon> {
    let mut pts = Vec::new();
    for item in s.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        let (x, y) = item
            .split_once(',')
            .ok_or_else(|| Error::config("polygon", format!("vertex `{item}` is not `x,y`")))?;
        let x: f64 = x
            .trim()
            .parse()
            .map_err(|_| Error::config("polygon", format!("bad coordinate `{x}`")))?;
        let y: f64 = y
            .trim()
            .parse()
            .map_err(|_| Error::config("polygon", format!("bad coordinate `{y}`")))?;
        pts.push([x, y]);
    }
    ConvexPolygon::new(pts).map_err(|e| Error::config("polygon", e.to_string()))
}

/// The verb that determines config defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Cheeger,
    Cluster,
    Pack,
    Compare,
    PerimeterProduct,
}

/// User-supplied keys: config file, then `--set`, then the dedicated flags.
fn overrides(args: &RunArgs) -> Result<Map<String, Value>> {
    let mut map = Map::new();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(m)) => map.extend(m),
            Ok(_) => return Err(Error::config("config", "expected a JSON object")),
            Err(e) => return Err(Error::config("config", e.to_string())),
        }
    }
    for item in &args.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::config("set", format!("`{item}` is not KEY=VALUE")))?;
        let v = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        map.insert(k.trim().to_string(), v);
    }
    let mut put = |k: &str, v: Value| {
        map.insert(k.to_string(), v);
    };
    if let Some(s) = args.seed {
        put("seed", s.into());
    }
    if let Some(a) = args.alpha {
        put("alpha", a.into());
    }
    if let Some(p) = args.p {
        put("p", p.into());
    }
    if let Some(k) = args.k {
        put("k", k.into());
    }
    if let Some(e) = args.eps_factor {
        put("eps_factor", e.into());
    }
    if let Some(s) = args.stages {
        put("stages", s.into());
    }
    if let Some(m) = args.m0 {
        put("m0", m.into());
    }
    if args.periodic {
        put("periodic", true.into());
    }
    Ok(map)
}

fn verb_defaults(verb: Verb, user: &Map<String, Value>) -> RunConfig {
    let dim = user.get("dim").and_then(Value::as_u64).unwrap_or(2) as usize;
    let mut c = if dim == 3 {
        RunConfig::unit_cube()
    } else {
        RunConfig::default()
    };
    match verb {
        Verb::Cheeger | Verb::Compare => {}
        Verb::Cluster => c.k = 5,
        Verb::Pack => {
            c.k = 2;
            c.alpha = critical_alpha(c.dim) + 1e-3;
            c.p = 50.0;
            c.eps_factor = 2.0;
        }
        Verb::PerimeterProduct => {
            c.k = user.get("k").and_then(Value::as_u64).unwrap_or(8) as usize;
            c.objective = Objective::LogPerimeter;
            c.periodic = true;
            c.init = Init::Voronoi;
            c.area_target = Some(1.0);
            // unit-area cells tile the box
            let side = (c.k as f64).powf(1.0 / c.dim as f64);
            c.domain = Domain::new(vec![side; c.dim], Shape::Box);
        }
    }
    c
}

/// Defaults for `verb`, overlaid with the user's keys, validated.
pub fn build_config(verb: Verb, args: &RunArgs) -> Result<RunConfig> {
    let user = overrides(args)?;
    let base = verb_defaults(verb, &user);
    // deserialize each key on its own first so errors can name it
    for (key, value) in &user {
        let mut single = Map::new();
        single.insert(key.clone(), value.clone());
        if let Err(e) = serde_json::from_value::<RunConfig>(Value::Object(single)) {
            return Err(Error::config(key.clone(), e.to_string()));
        }
    }
    let mut merged = match serde_json::to_value(&base)? {
        Value::Object(m) => m,
        _ => unreachable!("RunConfig serializes to an object"),
    };
    merged.extend(user);
    let config: RunConfig = serde_json::from_value(Value::Object(merged))
        .map_err(|e| Error::config("config", e.to_string()))?;
    config.validate()?;
    match verb {
        Verb::Cheeger | Verb::Compare if config.k != 1 => Err(Error::config(
            "k",
            format!("this command computes one set, got k = {}", config.k),
        )),
        Verb::Cluster | Verb::Pack if config.k < 2 => Err(Error::config(
            "k",
            format!("needs at least two cells, got k = {}", config.k),
        )),
        _ => Ok(config),
    }
}

fn execute(config: &RunConfig, seeds: Option<&Range<u64>>) -> Result<RunResult> {
    match seeds {
        Some(r) => pipeline::run_seeds(config, &r.clone().collect::<Vec<_>>()),
        None => pipeline::run(config),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), value)?;
    Ok(())
}

fn print_run(res: &RunResult) {
    for s in &res.stages {
        eprintln!(
            "stage {}: m = {}, eps = {:.4e}, {} iterations, F = {:.10e} ({:?})",
            s.stage, s.m, s.eps, s.iterations, s.final_value, s.stop
        );
    }
    let h = &res.sharp.per_phase_h_alpha;
    println!(
        "level {:.4e}: h_alpha = {:?}, sum = {:.10}",
        res.sharp.level,
        h,
        res.sharp.sum_h_alpha()
    );
}

#[derive(Debug, Serialize)]
struct OracleReport<'a> {
    polygon: &'a [[f64; 2]],
    h: f64,
    t_star: f64,
    area: f64,
    perimeter: f64,
    exact: &'a CheegerExact,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub polygon: Vec<[f64; 2]>,
    pub exact_h: f64,
    pub measured_h: f64,
    pub level: f64,
    pub relative_error: f64,
    pub final_m: usize,
}

fn oracle(args: &OracleArgs) -> Result<()> {
    let poly = match &args.polygon {
        Some(s) => parse_polygon(s)?,
        None => ConvexPolygon::unit_square(),
    };
    let exact = klr::cheeger_exact(&poly)?;
    fs::create_dir_all(&args.out)?;
    let report = OracleReport {
        polygon: poly.vertices(),
        h: exact.h,
        t_star: exact.t_star,
        area: exact.area(),
        perimeter: exact.perimeter(),
        exact: &exact,
    };
    write_json(&args.out.join("oracle.json"), &report)?;
    exact.write_polyline_csv(
        args.samples,
        BufWriter::new(File::create(args.out.join("cheeger_boundary.csv"))?),
    )?;
    println!("h = {:.15}, t* = {:.15}", exact.h, exact.t_star);
    Ok(())
}

/// Places `poly` in a square box with its bounding box at the origin.
fn polygon_domain(poly: &ConvexPolygon) -> (ConvexPolygon, Domain) {
    let (lo, hi) = poly.bounds();
    let moved = poly.translated([-lo[0], -lo[1]]);
    let side = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let domain = Domain::new(vec![side, side], moved.to_shape());
    (moved, domain)
}

/// The polygon of a configured domain, if it has one.
fn configured_polygon(domain: &Domain) -> Result<ConvexPolygon> {
    match &domain.shape {
        Shape::Polygon { vertices } => {
            ConvexPolygon::new(vertices.clone()).map_err(|e| Error::config("domain", e.to_string()))
        }
        Shape::Box if domain.dim() == 2 => {
            let (a, b) = (domain.extent[0], domain.extent[1]);
            ConvexPolygon::new(vec![[0.0, 0.0], [a, 0.0], [a, b], [0.0, b]])
        }
        _ => Err(Error::config(
            "domain",
            "compare needs a convex polygon or a 2D box",
        )),
    }
}

/// Runs the phase field on `poly` and measures it against the exact set.
pub fn compare_polygon(
    config: &RunConfig,
    poly: &ConvexPolygon,
    seeds: Option<&Range<u64>>,
) -> Result<(RunResult, CompareReport)> {
    if config.dim != 2 || config.k != 1 || config.alpha != 1.0 {
        return Err(Error::config(
            "alpha",
            "compare needs dim = 2, k = 1 and alpha = 1",
        ));
    }
    let exact = klr::cheeger_exact(poly)?;
    let res = execute(config, seeds)?;
    let relative_error = klr::compare(&res.sharp, &exact)?;
    let report = CompareReport {
        polygon: poly.vertices().to_vec(),
        exact_h: exact.h,
        measured_h: res.sharp.per_phase_h_alpha[0],
        level: res.sharp.level,
        relative_error,
        final_m: config.final_m(),
    };
    Ok((res, report))
}

fn compare(args: &CompareArgs) -> Result<()> {
    let mut config = build_config(Verb::Compare, &args.run)?;
    let poly = match &args.polygon {
        Some(s) => {
            let (poly, domain) = polygon_domain(&parse_polygon(s)?);
            config.domain = domain;
            poly
        }
        None => configured_polygon(&config.domain)?,
    };
    config.validate()?;
    let (res, report) = compare_polygon(&config, &poly, args.run.seeds.as_ref())?;
    res.write_outputs(&args.run.out)?;
    write_json(&args.run.out.join("compare.json"), &report)?;
    let exact = klr::cheeger_exact(&poly)?;
    exact.write_polyline_csv(
        64,
        BufWriter::new(File::create(args.run.out.join("cheeger_boundary.csv"))?),
    )?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

/// Barycenters of the cells of `res`, refined into a packing.
pub fn pack_result(res: &RunResult, objective: PackObjective, level: f64) -> Result<PackingResult> {
    let centers = packing::extract_centers(&res.final_system, level)?;
    match objective {
        PackObjective::Maximin => packing::refine_maximin(&centers, &res.config.domain),
        PackObjective::Product => packing::refine_product(&centers, &res.config.domain),
    }
}

fn pack(args: &PackArgs) -> Result<()> {
    let config = build_config(Verb::Pack, &args.run)?;
    let res = execute(&config, args.run.seeds.as_ref())?;
    res.write_outputs(&args.run.out)?;
    print_run(&res);
    let packing = pack_result(&res, args.objective, args.level)?;
    write_json(&args.run.out.join("packing.json"), &packing)?;
    render::packing_svg(
        &packing,
        BufWriter::new(File::create(args.run.out.join("packing.svg"))?),
    )?;
    println!(
        "packing: {:?} value = {:.12}, radii = {:?}",
        packing.objective, packing.value, packing.config.radii
    );
    Ok(())
}

fn run_verb(verb: Verb, args: &RunArgs) -> Result<()> {
    let config = build_config(verb, args)?;
    let res = execute(&config, args.seeds.as_ref())?;
    res.write_outputs(&args.out)?;
    print_run(&res);
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Cheeger(a) => run_verb(Verb::Cheeger, a),
        Command::Cluster(a) => run_verb(Verb::Cluster, a),
        Command::PerimeterProduct(a) => run_verb(Verb::PerimeterProduct, a),
        Command::Pack(a) => pack(a),
        Command::Oracle(a) => oracle(a),
        Command::Compare(a) => compare(a),
    }
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } | Error::Json(_) => 2,
        Error::Initialization(_) => 3,
        _ => 1,
    }
}

/// Module an error originates from, for diagnostics.
fn origin(err: &Error) -> &'static str {
    match err {
        Error::Config { .. } | Error::Json(_) => "config",
        Error::Initialization(_) => "optimizer",
        Error::InfiniteEnergy(_) => "functional",
        Error::EmptyPhase { .. } | Error::Lp(_) => "packing",
        Error::Input(_) => "input",
        Error::Io(_) => "io",
    }
}

/// Parses `args` and runs the command; the binary's whole `main`.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", origin(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
