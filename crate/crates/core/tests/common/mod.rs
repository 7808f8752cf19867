#![allow(dead_code)]

use std::sync::Arc;

use layerfem::fem::{assemble_g, assemble_jacobian, P1Function};
use layerfem::linalg::norm2;
use layerfem::mesh::{uniform_initial_mesh, Mesh, Rectangle};
use layerfem::problem::ProblemSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The 144-element start mesh refined once at a random third of its elements.
pub fn jacobian_test_mesh(seed: u64) -> Arc<Mesh> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = uniform_initial_mesh(Rectangle::unit_square(), 6).unwrap();
    let marked: Vec<usize> = (0..m.num_triangles()).filter(|_| rng.gen_bool(0.3)).collect();
    Arc::new(m.refine(&marked))
}

/// Largest relative mismatch `|FD - J w| / |J w|` over `pairs` random `(u, w)`.
pub fn jacobian_fd_error(problem: &ProblemSpec, mesh: &Arc<Mesh>, seed: u64, pairs: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = mesh.num_free_dofs();
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let scale = rng.gen_range(0.1..1.5);
        let u: Vec<f64> = (0..n).map(|_| scale * rng.gen::<f64>()).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let base = P1Function::from_free(mesh.clone(), &u).unwrap();
        let jw = assemble_jacobian(&base, problem).unwrap().spmv(&w).unwrap();
        let u_max = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let h = 1e-7 * (1.0 + u_max);
        let shifted = |t: f64| {
            let v: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a + t * b).collect();
            assemble_g(&P1Function::from_free(mesh.clone(), &v).unwrap(), problem).unwrap()
        };
        let (gp, gm) = (shifted(h), shifted(-h));
        let diff: Vec<f64> = gp.iter().zip(&gm).zip(&jw).map(|((a, b), j)| (a - b) / (2.0 * h) - j).collect();
        worst = worst.max(norm2(&diff) / norm2(&jw));
    }
    worst
}

/// `sum_i (f_i)` style reductions are compared relative to this.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
