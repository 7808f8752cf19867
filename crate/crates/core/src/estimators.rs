//! Residual-based error indicators and Dörfler marking.
//!
//! Indicators are always evaluated for the consistent problem, i.e. with the
//! unscaled source, whatever scaling the nonlinear iteration is currently
//! using.

use crate::error::{Error, Result};
use crate::fem::P1Function;
use crate::mesh::{dist, Mesh, Point};
use crate::problem::{DiffusionKind, ProblemSpec};
use crate::quadrature::{gauss3, TRIANGLE_DEG4};

/// Per-element squared indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSet {
    pub eta_sq: Vec<f64>,
    pub zeta_sq: Vec<f64>,
    pub xi_sq: Vec<f64>,
}

impl IndicatorSet {
    /// Global estimator `eta = sqrt(sum eta_T^2)`.
    pub fn eta(&self) -> f64 {
        self.eta_sq.iter().sum::<f64>().sqrt()
    }

    pub fn zeta(&self) -> f64 {
        self.zeta_sq.iter().sum::<f64>().sqrt()
    }
}

fn unit_normal(a: Point, b: Point) -> Point {
    let len = dist(a, b);
    [(b[1] - a[1]) / len, (a[0] - b[0]) / len]
}

/// Squared `L2(e)` norm of the normal flux jump across interior edge `e`.
/// With `problem = None` the flux is the bare gradient.
fn edge_jump_sq(u: &P1Function, problem: Option<&ProblemSpec>, e: usize) -> Result<f64> {
    let mesh = u.mesh();
    let edge = &mesh.edges()[e];
    debug_assert!(edge.interior);
    let [a, b] = edge.vertices;
    let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
    let len = dist(pa, pb);
    let n = unit_normal(pa, pb);
    let [t0, t1] = edge.triangles;
    let (g0, g1) = (
        mesh.geometry(t0).gradient(u.element_values(t0)),
        mesh.geometry(t1).gradient(u.element_values(t1)),
    );
    let dn = |g: Point| g[0] * n[0] + g[1] * n[1];
    let sq = match problem {
        None => {
            // rounding in the element gradients must not register as a jump
            let jump = dn(g0) - dn(g1);
            let scale = g0[0].hypot(g0[1]).max(g1[0].hypot(g1[1]));
            if jump.abs() <= 1e-12 * scale {
                0.0
            } else {
                len * jump * jump
            }
        }
        Some(p) => match p.kind {
            DiffusionKind::SolutionDependent => {
                // kappa(u) is continuous across the edge; u is linear along it
                let (ua, ub) = (u.coeffs()[a], u.coeffs()[b]);
                let jump = dn(g0) - dn(g1);
                let mut acc = 0.0;
                for (s, w) in gauss3() {
                    let k = (p.kappa)((1.0 - s) * ua + s * ub);
                    if !k.is_finite() {
                        return Err(Error::NonFinite {
                            what: "kappa",
                            element: t0,
                        });
                    }
                    acc += w * (k * jump).powi(2);
                }
                len * acc
            }
            DiffusionKind::GradientDependent => {
                let k0 = (p.kappa)(g0[0] * g0[0] + g0[1] * g0[1]);
                let k1 = (p.kappa)(g1[0] * g1[0] + g1[1] * g1[1]);
                len * (k0 * dn(g0) - k1 * dn(g1)).powi(2)
            }
        },
    };
    Ok(sq)
}

fn jump_indicators(u: &P1Function, problem: Option<&ProblemSpec>) -> Result<Vec<f64>> {
    let mesh = u.mesh();
    let mut out = vec![0.0; mesh.num_triangles()];
    let diam: Vec<f64> = (0..mesh.num_triangles()).map(|t| mesh.geometry(t).diameter).collect();
    for (e, edge) in mesh.edges().iter().enumerate() {
        if !edge.interior {
            continue;
        }
        let sq = edge_jump_sq(u, problem, e)?;
        for &t in &edge.triangles {
            out[t] += diam[t] * sq;
        }
    }
    Ok(out)
}

/// Squared `L2(T)` norm of the element-wise strong residual `F(u, x)`.
fn interior_residual_sq(u: &P1Function, problem: &ProblemSpec, mesh: &Mesh, t: usize) -> Result<f64> {
    let geom = mesh.geometry(t);
    let vals = u.element_values(t);
    let grad = geom.gradient(vals);
    let grad_sq = grad[0] * grad[0] + grad[1] * grad[1];
    let mut acc = 0.0;
    for q in &TRIANGLE_DEG4 {
        let p = geom.point(q.bary);
        let f = (problem.source)(p[0], p[1]);
        let div_term = match problem.kind {
            // -div(kappa(u) grad u) = -kappa'(u)|grad u|^2 for P1 u
            DiffusionKind::SolutionDependent => {
                let uq: f64 = q.bary.iter().zip(vals).map(|(b, v)| b * v).sum();
                -(problem.dkappa)(uq) * grad_sq
            }
            DiffusionKind::GradientDependent => 0.0,
        };
        let r = div_term - f;
        if !r.is_finite() {
            return Err(Error::NonFinite {
                what: "strong residual",
                element: t,
            });
        }
        acc += q.weight * geom.area * r * r;
    }
    Ok(acc)
}

/// `eta_T^2 = h_T^2 |F(u)|^2_T + zeta_T^2` and `zeta_T^2 = h_T |J_T(u)|^2_dT`.
pub fn compute_indicators(u: &P1Function, problem: &ProblemSpec) -> Result<IndicatorSet> {
    let mesh = u.mesh();
    let zeta_sq = jump_indicators(u, Some(problem))?;
    let mut eta_sq = Vec::with_capacity(mesh.num_triangles());
    for (t, z) in zeta_sq.iter().enumerate() {
        let h = mesh.geometry(t).diameter;
        eta_sq.push(h * h * interior_residual_sq(u, problem, mesh, t)? + z);
    }
    Ok(IndicatorSet {
        eta_sq,
        zeta_sq,
        xi_sq: compute_xi(u),
    })
}

/// Gradient-jump indicator `xi_T^2 = h_T |[grad u . n]|^2_dT`.
pub fn compute_xi(u: &P1Function) -> Vec<f64> {
    jump_indicators(u, None).expect("pure gradient jumps are always finite")
}

/// Result of Dörfler marking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Marking {
    pub elements: Vec<usize>,
    /// Set when every indicator vanished and nothing could be marked.
    pub all_zero: bool,
}

/// Smallest set `M` with `sum_M eta_T^2 >= theta sum_T eta_T^2`.
///
/// Elements are taken in decreasing order of their indicator, ties going to
/// the lower index, which gives a set of minimal cardinality.
pub fn dorfler_mark(eta_sq: &[f64], theta: f64) -> Result<Marking> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Config(format!("Dörfler parameter {theta} outside (0, 1)")));
    }
    let total: f64 = eta_sq.iter().sum();
    if !(total > 0.0) {
        log::warn!("all error indicators vanish; nothing marked");
        return Ok(Marking {
            elements: Vec::new(),
            all_zero: true,
        });
    }
    let mut order: Vec<usize> = (0..eta_sq.len()).collect();
    order.sort_by(|&a, &b| eta_sq[b].total_cmp(&eta_sq[a]));
    let target = theta * total;
    let mut acc = 0.0;
    let mut count = order.len();
    for (i, &t) in order.iter().enumerate() {
        acc += eta_sq[t];
        if acc >= target {
            count = i + 1;
            break;
        }
    }
    order.truncate(count);
    Ok(Marking {
        elements: order,
        all_zero: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{uniform_initial_mesh, Rectangle};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn unit(n: usize) -> Arc<Mesh> {
        Arc::new(uniform_initial_mesh(Rectangle::unit_square(), n).unwrap())
    }

    #[test]
    fn zero_data_gives_zero_indicators() {
        let p = ProblemSpec::constant(1.0, |_, _| 0.0);
        let ind = compute_indicators(&P1Function::zeros(unit(3)), &p).unwrap();
        assert!(ind.eta_sq.iter().chain(&ind.zeta_sq).chain(&ind.xi_sq).all(|&v| v == 0.0));
    }

    #[test]
    fn constant_source_interior_term() {
        let m = unit(3);
        let p = ProblemSpec::constant(1.0, |_, _| 1.0);
        let ind = compute_indicators(&P1Function::zeros(m.clone()), &p).unwrap();
        for t in 0..m.num_triangles() {
            let g = m.geometry(t);
            assert_eq!(ind.zeta_sq[t], 0.0);
            assert!((ind.eta_sq[t] - g.diameter.powi(2) * g.area).abs() < 1e-15);
        }
    }

    #[test]
    fn hat_function_jumps_by_hand() {
        // on the 4-triangle mesh the centroid hat has gradients of length 2
        // pointing across the cell sides; each diagonal (length sqrt(2)/2)
        // carries a normal jump of 2 sqrt(2), and h_T = 1
        let m = unit(1);
        let u = P1Function::from_free(m, &[1.0]).unwrap();
        let p = ProblemSpec::constant(1.0, |_, _| 0.0);
        let ind = compute_indicators(&u, &p).unwrap();
        let expected = 2.0 * (2f64.sqrt() / 2.0) * 8.0;
        for t in 0..4 {
            assert!((ind.zeta_sq[t] - expected).abs() < 1e-13);
            assert!((ind.eta_sq[t] - expected).abs() < 1e-13);
            assert_eq!(ind.xi_sq[t], ind.zeta_sq[t]);
        }
    }

    #[test]
    fn affine_functions_have_no_gradient_jumps() {
        let m = unit(4).refine(&[2, 3, 30]);
        let u = P1Function::interpolate(Arc::new(m), |x, y| 0.3 - 2.0 * x + 5.0 * y);
        assert!(compute_xi(&u).iter().all(|&v| v.abs() < 1e-20));
    }

    #[test]
    fn eta_dominates_zeta() {
        let m = unit(4);
        let p = ProblemSpec::new(DiffusionKind::SolutionDependent, |s| 1.0 + s * s, |s| 2.0 * s, |x, y| x * y);
        let u = P1Function::interpolate(m, |x, y| (x * y * (1.0 - x) * (1.0 - y) * 20.0).sin());
        let ind = compute_indicators(&u, &p).unwrap();
        for (e, z) in ind.eta_sq.iter().zip(&ind.zeta_sq) {
            assert!(e >= z && *z >= 0.0);
        }
    }

    #[test]
    fn shared_edge_jumps_agree_with_per_element_recomputation() {
        let m = Arc::new(unit(3).refine(&[0, 4, 8]));
        let p = ProblemSpec::new(
            DiffusionKind::SolutionDependent,
            |s| 1.0 + 1.0 / (0.1 + (s - 0.5).powi(2)),
            |s| -2.0 * (s - 0.5) / (0.1 + (s - 0.5).powi(2)).powi(2),
            |_, _| 0.0,
        );
        let u = P1Function::interpolate(m.clone(), |x, y| 4.0 * x * y * (1.0 - x) * (1.0 - y));
        let zeta = compute_indicators(&u, &p).unwrap().zeta_sq;
        for t in 0..m.num_triangles() {
            let h = m.geometry(t).diameter;
            let mut z = 0.0;
            for e in m.triangle_edges(t) {
                if m.edges()[e].interior {
                    z += h * edge_jump_sq(&u, Some(&p), e).unwrap();
                }
            }
            assert!((z - zeta[t]).abs() <= 1e-13 * z.abs().max(1e-300));
        }
    }

    #[test]
    fn dorfler_examples() {
        assert_eq!(dorfler_mark(&[4.0, 3.0, 2.0, 1.0], 0.2).unwrap().elements, vec![0]);
        let mut all = dorfler_mark(&[1.0; 4], 0.9).unwrap().elements;
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3]);
        assert_eq!(dorfler_mark(&[1.0, 5.0, 5.0], 0.3).unwrap().elements, vec![1]);
    }

    #[test]
    fn dorfler_all_zero_is_flagged() {
        let m = dorfler_mark(&[0.0; 5], 0.5).unwrap();
        assert!(m.all_zero && m.elements.is_empty());
    }

    #[test]
    fn dorfler_rejects_bad_theta() {
        assert!(dorfler_mark(&[1.0], 1.0).is_err());
        assert!(dorfler_mark(&[1.0], 0.0).is_err());
    }

    /// Minimal subset size meeting the threshold, by enumeration.
    fn brute_force_min(vals: &[f64], theta: f64) -> usize {
        let total: f64 = vals.iter().sum();
        let n = vals.len();
        (0u32..(1 << n))
            .filter(|mask| {
                let s: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| vals[i]).sum();
                s >= theta * total
            })
            .map(|mask| mask.count_ones() as usize)
            .min()
            .unwrap()
    }

    #[test]
    fn dorfler_is_minimal_on_twelve_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let vals: Vec<f64> = (0..12).map(|_| rng.gen_range(0.01..1.0)).collect();
            let m = dorfler_mark(&vals, 0.2).unwrap();
            assert_eq!(m.elements.len(), brute_force_min(&vals, 0.2));
        }
    }

    proptest::proptest! {
        #[test]
        fn dorfler_scale_invariant(vals in proptest::collection::vec(0.0f64..10.0, 1..40), c in 0.01f64..100.0, theta in 0.05f64..0.95) {
            proptest::prop_assume!(vals.iter().sum::<f64>() > 0.0);
            let a = dorfler_mark(&vals, theta).unwrap();
            let scaled: Vec<f64> = vals.iter().map(|v| v * c).collect();
            let b = dorfler_mark(&scaled, theta).unwrap();
            proptest::prop_assert_eq!(a.clone(), dorfler_mark(&vals, theta).unwrap());
            // scaling by c can move the threshold by an ulp; compare cardinality away from ties
            let total: f64 = vals.iter().sum();
            let mut sorted = vals.clone();
            sorted.sort_by(|x, y| y.total_cmp(x));
            let prefix: f64 = sorted[..a.elements.len() - 1].iter().sum();
            if (prefix - theta * total).abs() > 1e-9 * total && (prefix + sorted[a.elements.len() - 1] - theta * total).abs() > 1e-9 * total {
                proptest::prop_assert_eq!(a.elements, b.elements);
            }
        }
    }
}
