//! A user-defined problem: `-div((1 + u^2) grad u) = f` with the bubble
//! `u = 16 x (1 - x) y (1 - y)` as exact solution.

use layerfem::problem::{DiffusionKind, ProblemSpec};
use layerfem::solver::{adaptive_solve, SolverParams};

fn bubble(x: f64, y: f64) -> f64 {
    16.0 * x * (1.0 - x) * y * (1.0 - y)
}

fn bubble_grad(x: f64, y: f64) -> [f64; 2] {
    [16.0 * (1.0 - 2.0 * x) * y * (1.0 - y), 16.0 * x * (1.0 - x) * (1.0 - 2.0 * y)]
}

fn main() -> layerfem::Result<()> {
    let source = |x: f64, y: f64| {
        let (u, g) = (bubble(x, y), bubble_grad(x, y));
        let lap = -32.0 * (y * (1.0 - y) + x * (1.0 - x));
        -(1.0 + u * u) * lap - 2.0 * u * (g[0] * g[0] + g[1] * g[1])
    };
    let problem = ProblemSpec::new(DiffusionKind::SolutionDependent, |u| 1.0 + u * u, |u| 2.0 * u, source)
        .with_exact(bubble, bubble_grad);

    let params = SolverParams {
        max_dofs: 5000,
        ..SolverParams::default()
    };
    let result = adaptive_solve(&problem, &params, &mut ())?;
    for r in &result.records {
        println!(
            "k={:>2} dofs={:>5} iterations={:>2} H1 error={:.3e} gamma={:.2} delta={:.2}",
            r.k,
            r.dofs,
            r.iterations,
            r.h1_err.unwrap_or(f64::NAN),
            r.gamma,
            r.delta
        );
    }
    println!("{:?}", result.status);
    Ok(())
}
