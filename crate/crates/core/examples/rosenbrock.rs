//! The bound-constrained L-BFGS on Rosenbrock's function, with the minimizer
//! pushed outside the box so that a bound ends up active.

use alpha_cheeger::optimizer::{minimize, BoundProblem, OptimizerOptions};

fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
    g[1] = 200.0 * (b - a * a);
    (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
}

fn main() -> alpha_cheeger::Result<()> {
    let opts = OptimizerOptions::default();
    for upper in [2.0, 0.5] {
        let mut prob = BoundProblem::new(rosenbrock, vec![-2.0; 2], vec![upper; 2])?;
        let (x, rep) = minimize(&mut prob, &[-1.2, 1.0], &opts)?;
        println!(
            "box [-2, {upper}]^2: x = ({:.8}, {:.8}), f = {:.3e}, {} iterations, {:?}",
            x[0], x[1], rep.final_value, rep.iterations, rep.stop
        );
    }
    Ok(())
}
