//! Gradient-dependent diffusion `kappa(|grad u|^2)`: a short adaptive run
//! showing how `gamma` and `delta` evolve and where the mesh concentrates.

use layerfem::cli::densest_region;
use layerfem::problems::ex3_s2;
use layerfem::solver::{adaptive_solve, SolverParams};

fn main() -> layerfem::Result<()> {
    let params = SolverParams {
        max_refinements: 12,
        ..SolverParams::default()
    };
    let result = adaptive_solve(&ex3_s2(), &params, &mut ())?;
    println!("gamma_0 = {:.4}, delta_0 = {:.4}", result.gamma0, result.delta0);
    for r in &result.records {
        let bar = "#".repeat((r.gamma.log2() * 8.0).round() as usize);
        println!("k={:>2} elements={:>5} gamma={:>7.3} delta={:.3} {bar}", r.k, r.elements, r.gamma, r.delta);
    }
    let d = densest_region(&result.mesh);
    println!(
        "finest elements: {} of area {:.2e}, mean centroid ({:.3}, {:.3})",
        d.count, d.area, d.mean_centroid[0], d.mean_centroid[1]
    );
    Ok(())
}
