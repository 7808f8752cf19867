//! Compares the assembled Jacobian with central differences of the
//! residual operator for all six benchmark problems.

use std::sync::Arc;

use layerfem::fem::{assemble_g, assemble_jacobian, P1Function};
use layerfem::linalg::norm2;
use layerfem::mesh::{uniform_initial_mesh, Rectangle};
use layerfem::problems::Case;

fn main() -> layerfem::Result<()> {
    let coarse = uniform_initial_mesh(Rectangle::unit_square(), 6)?;
    let mesh = Arc::new(coarse.refine(&(0..coarse.num_triangles()).step_by(3).collect::<Vec<_>>()));
    let n = mesh.num_free_dofs();
    // deterministic, non-symmetric data
    let u: Vec<f64> = (0..n).map(|i| 0.8 * ((i as f64 * 0.37).sin() + 1.0) / 2.0).collect();
    let w: Vec<f64> = (0..n).map(|i| (i as f64 * 1.13).cos()).collect();

    for case in Case::ALL {
        let p = case.problem();
        let base = P1Function::from_free(mesh.clone(), &u)?;
        let jw = assemble_jacobian(&base, &p)?.spmv(&w)?;
        for h in [1e-4, 1e-6, 1e-7] {
            let g = |t: f64| -> layerfem::Result<Vec<f64>> {
                let v: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a + t * b).collect();
                assemble_g(&P1Function::from_free(mesh.clone(), &v)?, &p)
            };
            let (gp, gm) = (g(h)?, g(-h)?);
            let diff: Vec<f64> = gp.iter().zip(&gm).zip(&jw).map(|((a, b), j)| (a - b) / (2.0 * h) - j).collect();
            print!("{case} h={h:.0e}: {:.2e}   ", norm2(&diff) / norm2(&jw));
        }
        println!();
    }
    Ok(())
}
