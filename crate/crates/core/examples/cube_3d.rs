//! Cheeger set of the unit cube, a rounded cube. Writes the middle slice.
//!
//!     cargo run --release --example cube_3d [out_dir]

use alpha_cheeger::{run, RunConfig};
use std::path::PathBuf;

fn main() -> alpha_cheeger::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| PathBuf::from("out/cube"), PathBuf::from);
    let res = run(&RunConfig::unit_cube())?;
    for s in &res.stages {
        println!(
            "m = {:3}: {} iterations, energy {:.6}",
            s.m, s.iterations, s.final_value
        );
    }
    println!(
        "h = {:.4}, volume {:.4}, area {:.4}",
        res.sharp.per_phase_h_alpha[0],
        res.sharp.per_phase_area[0],
        res.sharp.per_phase_perimeter[0]
    );
    res.write_outputs(&out)
}
