//! alpha-Cheeger sets of a regular tetrahedron for alpha in {0.7, 1, 2}.

use alpha_cheeger::{run, Domain, RunConfig, Shape};

fn main() -> alpha_cheeger::Result<()> {
    for alpha in [0.7, 1.0, 2.0] {
        let config = RunConfig {
            alpha,
            domain: Domain::new(vec![1.0; 3], Shape::regular_tetrahedron(1.0)),
            stages: 3,
            ..RunConfig::unit_cube()
        };
        let res = run(&config)?;
        println!(
            "alpha {alpha}: h = {:.4}, volume {:.5} of {:.5}",
            res.sharp.per_phase_h_alpha[0],
            res.sharp.per_phase_area[0],
            1.0 / 3.0
        );
    }
    Ok(())
}
