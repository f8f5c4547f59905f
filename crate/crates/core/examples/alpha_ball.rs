//! alpha-Cheeger sets of a disk for several alpha. The disk is its own
//! alpha-Cheeger set, so the measured value is compared with 2 pi^(1-a) R^(1-2a).

use alpha_cheeger::klr::analytic_alpha_cheeger_ball;
use alpha_cheeger::{run, Domain, RunConfig, Shape};

fn main() -> alpha_cheeger::Result<()> {
    let radius = 0.4;
    for alpha in [0.6, 0.75, 1.0, 1.5, 2.0] {
        let config = RunConfig {
            alpha,
            stages: 4,
            domain: Domain::new(
                vec![1.0, 1.0],
                Shape::Ball {
                    center: vec![0.5, 0.5],
                    radius,
                },
            ),
            ..RunConfig::default()
        };
        let res = run(&config)?;
        let exact = analytic_alpha_cheeger_ball(2, radius, alpha)?;
        let h = res.sharp.per_phase_h_alpha[0];
        println!(
            "alpha {alpha:4}: h = {h:.5}, exact {exact:.5}, rel {:+.4}, area {:.4}",
            (h - exact) / exact,
            res.sharp.per_phase_area[0]
        );
    }
    Ok(())
}
