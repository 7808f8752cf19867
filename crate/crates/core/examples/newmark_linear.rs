//! On a linear problem with no regularization the Newmark step contracts
//! the residual by exactly `1 - 1/gamma` per iteration.

use std::sync::Arc;

use layerfem::fem::{assemble_laplacian, assemble_load, P1Function};
use layerfem::linalg::SparseMatrix;
use layerfem::mesh::{uniform_initial_mesh, Rectangle};
use layerfem::problem::ProblemSpec;
use layerfem::solver::{newmark_step, Iterate, StepCoefficients};

fn main() -> layerfem::Result<()> {
    let mesh = Arc::new(uniform_initial_mesh(Rectangle::unit_square(), 8)?);
    let p = ProblemSpec::constant(1.0, |x, y| (3.0 * x).sin() + y);
    let f = assemble_load(&p, &mesh)?;
    let lap = assemble_laplacian(&mesh);
    let no_reg = SparseMatrix::from_pattern(&vec![Vec::new(); mesh.num_free_dofs()]);

    for gamma in [1.0, 1.5, 2.0, 4.0, 10.0] {
        let c = StepCoefficients {
            alpha: 0.0,
            gamma,
            sigma: 1.0,
        };
        let mut it = Iterate::new(P1Function::zeros(mesh.clone()), &p, &f, 1.0)?;
        print!("gamma {gamma:>4}: expected {:.4}, observed", 1.0 - 1.0 / gamma);
        // gamma = 1 is the exact Newton step; the residual is gone after one
        let steps = if gamma == 1.0 { 1 } else { 5 };
        for _ in 0..steps {
            let (_, next) = newmark_step(&it, c, &no_reg, &lap, &p, &f, 1.0).expect("linear step");
            print!(" {:.4}", next.r_norm() / it.r_norm());
            it = next;
        }
        println!();
    }
    Ok(())
}
