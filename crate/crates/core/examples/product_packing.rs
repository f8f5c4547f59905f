//! Two disks in a 2x1 rectangle maximizing the product of radii, starting
//! from the barycenters of a two-cell cluster (sum of ratios, p = 1).

use alpha_cheeger::packing::{extract_centers, refine_product};
use alpha_cheeger::{run, Domain, RunConfig, Shape};

fn main() -> alpha_cheeger::Result<()> {
    let config = RunConfig {
        k: 2,
        alpha: 0.501,
        eps_factor: 2.0,
        stages: 4,
        domain: Domain::new(vec![2.0, 1.0], Shape::Box),
        ..RunConfig::default()
    };
    let res = run(&config)?;
    let centers = extract_centers(&res.final_system, 0.5)?;
    println!("barycenters {centers:?}");
    let packing = refine_product(&centers, &config.domain)?;
    println!(
        "radii {:?}, sum log r = {:.10} (2 log 1/2 = {:.10})",
        packing.config.radii,
        packing.value,
        2.0 * 0.5f64.ln()
    );
    Ok(())
}
