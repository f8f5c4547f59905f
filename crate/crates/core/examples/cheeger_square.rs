//! Classical Cheeger set of the unit square, one line per refinement stage.
//!
//!     cargo run --release --example cheeger_square [out_dir]

use alpha_cheeger::{run, RunConfig};
use std::path::PathBuf;

fn main() -> alpha_cheeger::Result<()> {
    let config = RunConfig {
        stages: 4,
        ..RunConfig::default()
    };
    let res = run(&config)?;
    for s in &res.stages {
        println!(
            "stage {} m = {:3} eps = {:.4}: {} iterations, energy {:.6} ({:?})",
            s.stage, s.m, s.eps, s.iterations, s.final_value, s.stop
        );
    }
    let exact = 2.0 + std::f64::consts::PI.sqrt();
    let h = res.sharp.per_phase_h_alpha[0];
    println!(
        "h = {h:.6} (exact {exact:.6}), area {:.4}",
        res.sharp.per_phase_area[0]
    );
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| PathBuf::from("out/cheeger_square"), PathBuf::from);
    res.write_outputs(&out)
}
