//! Equal-disk packings from clusters with alpha just above 1/2 and a large p.
//!
//!     cargo run --release --example maximin_packing [k] [out.svg]

use alpha_cheeger::packing::{extract_centers, refine_maximin};
use alpha_cheeger::pipeline::run_seeds;
use alpha_cheeger::render::packing_svg;
use alpha_cheeger::RunConfig;
use std::fs::File;
use std::io::BufWriter;

fn main() -> alpha_cheeger::Result<()> {
    let mut args = std::env::args().skip(1);
    let k = args.next().map_or(5, |s| s.parse().expect("k"));
    let config = RunConfig {
        k,
        alpha: 0.5001,
        p: 50.0,
        eps_factor: 2.0,
        stages: 4,
        ..RunConfig::default()
    };
    // a few seeds; local minima are common for k >= 5
    let res = run_seeds(&config, &[0, 1, 2, 3])?;
    let centers = extract_centers(&res.final_system, 0.5)?;
    let packing = refine_maximin(&centers, &config.domain)?;
    println!(
        "seed {}: radius {:.10}",
        res.config.seed, packing.config.radii[0]
    );
    for c in &packing.config.centers {
        println!("  center ({:.6}, {:.6})", c[0], c[1]);
    }
    if let Some(path) = args.next() {
        packing_svg(&packing, BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}
