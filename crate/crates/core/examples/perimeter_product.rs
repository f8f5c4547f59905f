//! Eight unit-area cells on a periodic square minimizing the product of their
//! perimeters. Compare with the regular hexagon perimeter 2 sqrt(2 sqrt 3).
//!
//!     cargo run --release --example perimeter_product [out_dir]

use alpha_cheeger::pipeline::{Init, Objective};
use alpha_cheeger::{run, Domain, RunConfig, Shape};
use std::path::PathBuf;

fn main() -> alpha_cheeger::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| PathBuf::from("out/perimeter_product"), PathBuf::from);
    let k = 8;
    let side = (k as f64).sqrt();
    let config = RunConfig {
        k,
        objective: Objective::LogPerimeter,
        periodic: true,
        domain: Domain::new(vec![side, side], Shape::Box),
        area_target: Some(1.0),
        init: Init::Voronoi,
        stages: 4,
        ..RunConfig::default()
    };
    let res = run(&config)?;
    let hex = 2.0 * (2.0 * 3f64.sqrt()).sqrt();
    for (a, p) in res
        .sharp
        .per_phase_area
        .iter()
        .zip(&res.sharp.per_phase_perimeter)
    {
        println!("area {a:.4} perimeter {p:.4}");
    }
    println!(
        "objective {:.8}, hexagon perimeter {hex:.4}",
        res.final_value()
    );
    res.write_outputs(&out)
}
