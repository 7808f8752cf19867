//! Which vertices the adaptive regularization picks for a few iterates.

use std::sync::Arc;

use layerfem::fem::{assemble_laplacian, P1Function};
use layerfem::mesh::{uniform_initial_mesh, Rectangle};
use layerfem::stabilizer::build_rk;

fn main() -> layerfem::Result<()> {
    let mesh = Arc::new(uniform_initial_mesh(Rectangle::unit_square(), 8)?);
    let lap = assemble_laplacian(&mesh);
    let iterates = [
        ("zero", P1Function::zeros(mesh.clone())),
        ("affine", P1Function::interpolate(mesh.clone(), |x, y| x - 2.0 * y)),
        ("smooth bump", P1Function::interpolate(mesh.clone(), |x, y| (x * (1.0 - x) * y * (1.0 - y)).sqrt())),
        ("kink", P1Function::interpolate(mesh.clone(), |x, y| 0.5 - (x - 0.5).abs().max((y - 0.5).abs()))),
        ("steep front", P1Function::interpolate(mesh.clone(), |x, y| (40.0 * (x + y - 1.0)).tanh())),
    ];
    for (name, u) in iterates {
        let rk = build_rk(&u, &lap);
        let flagged = rk.vertex_flags.iter().filter(|f| **f).count();
        println!(
            "{name:<12} psi={:.3e} flagged vertices {flagged:>3}/{} |R_k|_F={:.2}",
            rk.psi,
            mesh.num_vertices(),
            rk.matrix.frobenius_norm()
        );
    }
    Ok(())
}
