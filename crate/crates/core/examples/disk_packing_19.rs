//! Nineteen equal disks in the unit disk, from a 19-cell cluster at alpha just
//! above 1/2. The optimal packing (center, ring of 6, ring of 12) has radius
//! 1 / (1 + sqrt 2 + sqrt 6). This is slow: a few minutes in release mode.
//!
//!     cargo run --release --example disk_packing_19 [seeds] [out.svg]

use alpha_cheeger::packing::{extract_centers, refine_maximin};
use alpha_cheeger::pipeline::run_seeds;
use alpha_cheeger::render::packing_svg;
use alpha_cheeger::{Domain, RunConfig, Shape};
use std::fs::File;
use std::io::BufWriter;

fn main() -> alpha_cheeger::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map_or(1, |s| s.parse().expect("seeds"));
    let config = RunConfig {
        k: 19,
        alpha: 0.501,
        p: 50.0,
        eps_factor: 2.0,
        m0: 40,
        stages: 3,
        domain: Domain::new(
            vec![2.0, 2.0],
            Shape::Ball {
                center: vec![1.0, 1.0],
                radius: 1.0,
            },
        ),
        ..RunConfig::default()
    };
    let seeds: Vec<u64> = (0..seeds).collect();
    let res = run_seeds(&config, &seeds)?;
    let centers = extract_centers(&res.final_system, 0.5)?;
    let packing = refine_maximin(&centers, &config.domain)?;
    let best = 1.0 / (1.0 + 2f64.sqrt() + 6f64.sqrt());
    println!(
        "seed {}: radius {:.10}, optimal {best:.10}, rel {:.2e}",
        res.config.seed,
        packing.value,
        (packing.value - best).abs() / best
    );
    if let Some(path) = args.next() {
        packing_svg(&packing, BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}
