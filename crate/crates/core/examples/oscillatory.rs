//! Oscillatory diffusion `kappa(u) = k + sin(u/eps) + arctan(u/eps)` with a
//! known solution: prints errors and estimator against the number of dofs,
//! then the fitted rates over the consistent tail.

use layerfem::io::{rate_fit, RecordRow};
use layerfem::problems::{Case, Example, Source};
use layerfem::solver::{adaptive_solve, SolverParams};

fn main() -> layerfem::Result<()> {
    let case = Case::new(Example::Ex2, Source::S1);
    let params = SolverParams::with_eps_t(case.default_eps_t());
    let result = adaptive_solve(&case.problem(), &params, &mut ())?;

    println!("   dofs         eta          L2          H1   delta");
    for r in &result.records {
        println!(
            "{:>7} {:>11.4e} {:>11.4e} {:>11.4e} {:>7.3}",
            r.dofs,
            r.eta,
            r.l2_err.unwrap_or(f64::NAN),
            r.h1_err.unwrap_or(f64::NAN),
            r.delta
        );
    }
    let rows: Vec<RecordRow> = result.records.iter().map(RecordRow::from).collect();
    let fit = rate_fit(&rows, Some(8))?;
    println!(
        "slopes over k = {}..{}: eta {:.3}, H1 {:.3}, L2 {:.3}",
        fit.first_k,
        fit.last_k,
        fit.eta_slope,
        fit.h1_slope.unwrap_or(f64::NAN),
        fit.l2_slope.unwrap_or(f64::NAN)
    );
    Ok(())
}
