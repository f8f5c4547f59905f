//! Five-cell Cheeger cluster in the unit square (sum of Cheeger constants).
//! Takes about a minute in release mode.
//!
//!     cargo run --release --example cluster [seed] [out_dir]

use alpha_cheeger::{run, RunConfig};
use std::path::PathBuf;

fn main() -> alpha_cheeger::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(0, |s| s.parse().expect("seed"));
    let out = args
        .next()
        .map_or_else(|| PathBuf::from("out/cluster"), PathBuf::from);
    let config = RunConfig {
        k: 5,
        seed,
        ..RunConfig::default()
    };
    let res = run(&config)?;
    let s = &res.sharp;
    for i in 0..s.k() {
        println!(
            "cell {i}: area {:.4} perimeter {:.4} h {:.4}",
            s.per_phase_area[i], s.per_phase_perimeter[i], s.per_phase_h_alpha[i]
        );
    }
    // five disjoint disks of radius 0.15 fit in the square
    println!(
        "sum h = {:.4} (five disks of radius 0.15: {:.4})",
        s.sum_h_alpha(),
        5.0 * 2.0 / 0.15
    );
    res.write_outputs(&out)?;
    println!("composite image in {}", out.join("composite.pgm").display());
    Ok(())
}
