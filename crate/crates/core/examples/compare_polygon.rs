//! Phase-field Cheeger set of a hexagon checked against the exact one.
//!
//!     cargo run --release --example compare_polygon [stages]

use alpha_cheeger::cli::compare_polygon;
use alpha_cheeger::klr::ConvexPolygon;
use alpha_cheeger::{Domain, RunConfig};

fn main() -> alpha_cheeger::Result<()> {
    let stages = std::env::args()
        .nth(1)
        .map_or(4, |s| s.parse().expect("stages"));
    let poly = ConvexPolygon::regular(6, [0.5, 0.5], 0.48)?;
    let config = RunConfig {
        stages,
        domain: Domain::new(vec![1.0, 1.0], poly.to_shape()),
        ..RunConfig::default()
    };
    let (res, report) = compare_polygon(&config, &poly, None)?;
    for s in &res.stages {
        println!(
            "m = {:4}  iterations {:5}  energy {:.8}",
            s.m, s.iterations, s.final_value
        );
    }
    println!(
        "exact h = {:.6}, measured h = {:.6} at level {:.3}, relative error {:.4}",
        report.exact_h, report.measured_h, report.level, report.relative_error
    );
    Ok(())
}
