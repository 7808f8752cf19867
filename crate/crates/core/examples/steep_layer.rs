//! Steep internal layer with a nonsmooth source: runs the adaptive loop and
//! prints one line per mesh level as it is solved.
//!
//! ```text
//! cargo run --release --example steep_layer
//! ```

use layerfem::problems::ex1_s2;
use layerfem::solver::{adaptive_solve, Observer, RefinementRecord, SolverParams};

struct Printer;

impl Observer for Printer {
    fn refinement(&mut self, r: &RefinementRecord) -> layerfem::Result<()> {
        println!(
            "{:>3} {:>7} {:>4} {:<16} {:>10.3e} {:>10.3e} {:>7.3} {:>6.3}",
            r.k,
            r.dofs,
            r.iterations,
            format!("{:?}", r.exit),
            r.final_r,
            r.eta,
            r.gamma,
            r.delta
        );
        Ok(())
    }
}

fn main() -> layerfem::Result<()> {
    let params = SolverParams {
        max_dofs: 8000,
        ..SolverParams::default()
    };
    println!("  k    dofs   it exit                  |r|        eta   gamma  delta");
    let result = adaptive_solve(&ex1_s2(), &params, &mut Printer)?;
    println!(
        "{:?}: {} Newton-type iterations, resets at {:?}",
        result.status,
        result.total_iterations(),
        result.resets
    );
    Ok(())
}
