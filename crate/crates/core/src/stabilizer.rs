//! Parameter control for the stabilized Newmark-type iteration.
//!
//! * adaptive Laplacian regularization `R_k` and the `alpha`/`beta` schedule,
//! * the stabilization weight `sigma`,
//! * the numerical dissipation `gamma`, updated from the observed residual
//!   contraction,
//! * the source scaling `delta`, updated at the end of a mesh level.
//!
//! The `gamma` and `delta` updates check their a-priori bounds at runtime.
//! A violated bound does not stop the solver; it is returned as an
//! [`Anomaly`] and ends up in the trace.

use serde::Serialize;

use crate::estimators::compute_xi;
use crate::fem::P1Function;
use crate::linalg::{dot, norm2, SparseMatrix};

/// A runtime bound check that failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Anomaly {
    /// `<r, g^{n+1} - g^n>` left the interval `|r|^2 (1/gamma - eps, 2 - 1/gamma + eps)`.
    DenominatorBound { value: f64, lower: f64, upper: f64 },
    /// `gamma~` left `(q gamma / (gamma (2 + eps) - 1), q gamma / (1 - eps gamma))`.
    GammaTildeBound { value: f64, lower: f64, upper: f64 },
    /// An update below the monotone cap increased `gamma`.
    GammaIncreased { before: f64, after: f64 },
    /// `<r, g^{n+1} - g^n> = 0`; the update was skipped.
    ZeroDenominator,
    /// Closed-form and recursive `delta` disagree.
    DeltaFormsDisagree { closed: f64, recursive: f64 },
}

/// Masked Laplacian together with the data that produced it.
#[derive(Debug, Clone)]
pub struct Regularization {
    /// `D R D` on free dofs; same pattern as the Laplacian.
    pub matrix: SparseMatrix,
    /// `D_jj` per mesh vertex.
    pub vertex_flags: Vec<bool>,
    pub psi: f64,
}

/// Element `floor((m - 1) / 2)` of the sorted values.
pub fn lower_median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty set");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

/// Laplacian restricted to the vertices touching elements whose gradient
/// jump exceeds the median-based threshold `psi`.
pub fn build_rk(u0: &P1Function, lap: &SparseMatrix) -> Regularization {
    let mesh = u0.mesh();
    let xi_sq = compute_xi(u0);
    let psi_tilde = lower_median(&xi_sq).sqrt();
    let psi = if psi_tilde > 1.0 { psi_tilde.sqrt() } else { psi_tilde };

    let mut vertex_flags = vec![false; mesh.num_vertices()];
    for (tri, x) in mesh.triangles().iter().zip(&xi_sq) {
        if x.sqrt() > psi {
            for &v in tri {
                vertex_flags[v] = true;
            }
        }
    }
    let mut matrix = lap.clone();
    let free = mesh.free_dofs();
    let rows = matrix.row_ptr().to_vec();
    let cols = matrix.col_idx().to_vec();
    let vals = matrix.values_mut();
    for i in 0..free.len() {
        for p in rows[i]..rows[i + 1] {
            if !(vertex_flags[free[i]] && vertex_flags[free[cols[p]]]) {
                vals[p] = 0.0;
            }
        }
    }
    Regularization {
        matrix,
        vertex_flags,
        psi,
    }
}

/// Regularization weight `alpha = beta |r|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaState {
    pub alpha: f64,
    pub beta: f64,
}

impl AlphaState {
    pub fn initial(r0_norm: f64) -> Self {
        Self {
            alpha: r0_norm,
            beta: 1.0,
        }
    }

    /// `beta` shrinks at most by half per step, and only while the residual decreases.
    pub fn update(self, r_norm_now: f64, r_norm_prev: f64) -> Self {
        let beta = if r_norm_now < r_norm_prev {
            (self.beta / 2.0).max(r_norm_now / r_norm_prev).min(1.0)
        } else {
            self.beta
        };
        Self {
            alpha: beta * r_norm_now,
            beta,
        }
    }
}

/// `sigma = max(sigma0, 1 - |r| / K0)`, at most one.
pub fn sigma_value(r_norm: f64, k0: f64, sigma0: f64) -> f64 {
    sigma0.max(1.0 - r_norm / k0).min(1.0)
}

/// `gamma_MONO = (1 - q / q_bar) / eps_T`.
pub fn gamma_mono_cap(eps_t: f64, q_gamma: f64, q_bar: f64) -> f64 {
    (1.0 - q_gamma / q_bar) / eps_t
}

/// Controller for the numerical dissipation `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaController {
    pub gamma: f64,
    pub eps_t: f64,
    pub q_gamma: f64,
    pub gamma_max: f64,
    pub i_min: usize,
    /// Steps taken with the current value of `gamma`.
    pub iters_since_update: usize,
    /// Updates accepted on the current mesh level.
    pub updates_this_refinement: usize,
}

/// Outcome of a `gamma` update attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaUpdate {
    pub accepted: bool,
    pub before: f64,
    pub gamma_tilde: f64,
    pub after: f64,
    /// `<r^n, r^n>`
    pub r_sq: f64,
    /// `<r^n, g^{n+1} - g^n>`
    pub inner: f64,
    pub anomalies: Vec<Anomaly>,
}

impl GammaController {
    pub fn new(gamma: f64, eps_t: f64, q_gamma: f64, gamma_max: f64, i_min: usize) -> Self {
        assert!(i_min >= 2, "at least two steps must separate gamma updates");
        assert!(gamma_max * eps_t < 1.0, "gamma_max must stay below 1/eps_T");
        Self {
            gamma: gamma.clamp(1.0, gamma_max),
            eps_t,
            q_gamma,
            gamma_max,
            i_min,
            iters_since_update: 0,
            updates_this_refinement: 0,
        }
    }

    /// Starts a new mesh level with the same `gamma`.
    pub fn begin_refinement(&mut self) {
        self.iters_since_update = 0;
        self.updates_this_refinement = 0;
    }

    pub fn record_step(&mut self) {
        self.iters_since_update += 1;
    }

    /// Checks the update criteria on `(|r^{n-1}|, |r^n|, |r^{n+1}|)`.
    pub fn update_due(&self, r_hist: [f64; 3]) -> bool {
        let [r_prev, r_now, r_next] = r_hist;
        if self.gamma <= 1.0 {
            return false;
        }
        if self.iters_since_update < self.i_min {
            return false;
        }
        let rate = r_next / r_now;
        let prev_rate = r_now / r_prev;
        (rate - (1.0 - 1.0 / self.gamma)).abs() < self.eps_t && (rate - prev_rate).abs() < self.eps_t
    }

    /// `gamma~ = q <r, r> / <r, g^{n+1} - g^n>`, `gamma = max(1, gamma~)`.
    pub fn update(&mut self, r_n: &[f64], g_n: &[f64], g_np1: &[f64]) -> GammaUpdate {
        let before = self.gamma;
        let r_sq = dot(r_n, r_n);
        let denom: f64 = r_n.iter().zip(g_np1.iter().zip(g_n)).map(|(r, (a, b))| r * (a - b)).sum();
        let mut anomalies = Vec::new();
        if denom == 0.0 || !denom.is_finite() {
            anomalies.push(Anomaly::ZeroDenominator);
            return GammaUpdate {
                accepted: false,
                before,
                gamma_tilde: f64::NAN,
                after: before,
                r_sq,
                inner: denom,
                anomalies,
            };
        }
        let (eps, q, g) = (self.eps_t, self.q_gamma, before);

        let lower = r_sq * (1.0 / g - eps);
        let upper = r_sq * (2.0 - 1.0 / g + eps);
        if !(lower < denom && denom < upper) {
            anomalies.push(Anomaly::DenominatorBound {
                value: denom,
                lower,
                upper,
            });
        }
        let gamma_tilde = q * r_sq / denom;
        let lo = q * g / (g * (2.0 + eps) - 1.0);
        let hi = q * g / (1.0 - eps * g);
        if !(lo < gamma_tilde && gamma_tilde < hi) {
            anomalies.push(Anomaly::GammaTildeBound {
                value: gamma_tilde,
                lower: lo,
                upper: hi,
            });
        }
        let after = gamma_tilde.max(1.0).min(self.gamma_max);
        if g <= gamma_mono_cap(eps, q, 1.0) && after > g {
            anomalies.push(Anomaly::GammaIncreased { before: g, after });
        }
        self.gamma = after;
        self.iters_since_update = 0;
        self.updates_this_refinement += 1;
        GammaUpdate {
            accepted: true,
            before,
            gamma_tilde,
            after,
            r_sq,
            inner: denom,
            anomalies,
        }
    }
}

/// Whether the source scaling should be updated after this step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DeltaDue {
    NotDue,
    DueByRate,
    DueByConvergence,
}

/// Residual-based conditions for ending a mesh level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitChecks {
    /// `|r^n| < eps_CON` on the latest residual.
    pub converged: bool,
    /// Sufficient decrease, acceptable rate and stable rate.
    pub acceptable_rate: bool,
}

/// Evaluates the exit conditions on the norms `r_hist = (|r^0|, ..., |r^{n+1}|)`
/// of the current level; `r_prev_final` is the final norm of the previous level.
pub fn exit_checks(r_hist: &[f64], r_prev_final: Option<f64>, gamma: f64, eps_t: f64, eps_con: f64) -> ExitChecks {
    let last = *r_hist.last().expect("at least one residual");
    let converged = last < eps_con;
    let acceptable_rate = if r_hist.len() >= 3 {
        let m = r_hist.len();
        let (r_prev, r_now, r_next) = (r_hist[m - 3], r_hist[m - 2], r_hist[m - 1]);
        let bound = r_prev_final.map_or(r_hist[0], |p| p.min(r_hist[0]));
        let decrease = r_now < bound && r_next < bound;
        let rate = r_next / r_now;
        let fast_enough = rate < 1.0 - 1.0 / (2.0 * gamma);
        let stable = rate + eps_t / 2.0 > r_now / r_prev;
        decrease && fast_enough && stable
    } else {
        false
    };
    ExitChecks {
        converged,
        acceptable_rate,
    }
}

/// The `delta` update criteria.
pub fn delta_update_due(
    delta: f64,
    r_hist: &[f64],
    r_prev_final: Option<f64>,
    gamma: f64,
    eps_t: f64,
    eps_con: f64,
) -> DeltaDue {
    if delta >= 1.0 {
        return DeltaDue::NotDue;
    }
    let checks = exit_checks(r_hist, r_prev_final, gamma, eps_t, eps_con);
    if checks.converged {
        DeltaDue::DueByConvergence
    } else if checks.acceptable_rate {
        DeltaDue::DueByRate
    } else {
        DeltaDue::NotDue
    }
}

/// Source scaling with its floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaController {
    pub delta: f64,
    pub delta_min: f64,
}

/// Quantities of the last Newmark step used by the `delta` update.
#[derive(Debug, Clone, Copy)]
pub struct DeltaInputs<'a> {
    pub f: &'a [f64],
    pub g_n: &'a [f64],
    pub g_np1: &'a [f64],
    pub w: &'a [f64],
    pub alpha: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub rk: &'a SparseMatrix,
    pub jac_bar: &'a SparseMatrix,
    /// `g'(u^n)`, only used for the linearization error in the recursive form.
    pub jac_n: &'a SparseMatrix,
}

/// Outcome of a `delta` update.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaUpdate {
    pub before: f64,
    /// Unclamped closed-form value.
    pub closed: f64,
    /// Unclamped recursive value.
    pub recursive: f64,
    pub after: f64,
    /// `<f/|f|, L^e(u^n)>`
    pub lin_err_projection: f64,
    pub anomalies: Vec<Anomaly>,
}

/// One-step linearization error `g^{n+1} - g^n - g'(u^n) w`.
pub fn linearization_error(g_n: &[f64], g_np1: &[f64], jac_n: &SparseMatrix, w: &[f64]) -> Vec<f64> {
    let jw = jac_n.spmv(w).expect("jacobian and step share the free-dof space");
    g_np1.iter().zip(g_n).zip(&jw).map(|((a, b), c)| a - b - c).collect()
}

impl DeltaController {
    pub fn new(delta: f64, delta_min: f64) -> Self {
        assert!(delta_min > 0.0 && delta_min <= 1.0);
        Self {
            delta: delta.clamp(delta_min, 1.0),
            delta_min,
        }
    }

    /// Closed-form update divided by `q_k`, cross-checked against the recursive form.
    pub fn update(&mut self, inputs: &DeltaInputs<'_>, q_k: f64) -> DeltaUpdate {
        let before = self.delta;
        let f_sq = dot(inputs.f, inputs.f);
        if f_sq == 0.0 {
            self.delta = 1.0;
            return DeltaUpdate {
                before,
                closed: 1.0,
                recursive: 1.0,
                after: 1.0,
                lin_err_projection: 0.0,
                anomalies: Vec::new(),
            };
        }
        let DeltaInputs {
            f,
            g_n,
            g_np1,
            w,
            alpha,
            gamma,
            sigma,
            rk,
            jac_bar,
            jac_n,
        } = *inputs;
        let rw = rk.spmv(w).expect("matching dimensions");
        let jw = jac_bar.spmv(w).expect("matching dimensions");
        let mut numer = 0.0;
        for i in 0..f.len() {
            let v = gamma * sigma * (g_np1[i] - g_n[i]) + gamma * (1.0 - sigma) * jw[i] + alpha * rw[i] + g_n[i];
            numer += f[i] * v;
        }
        let closed = numer / (q_k * f_sq);

        let lin_err = linearization_error(g_n, g_np1, jac_n, w);
        let proj = dot(f, &lin_err);
        let recursive = (before + gamma * sigma * proj / f_sq) / q_k;

        let mut anomalies = Vec::new();
        let scale = closed.abs().max(recursive.abs()).max(f64::MIN_POSITIVE);
        if (closed - recursive).abs() > 1e-10 * scale {
            anomalies.push(Anomaly::DeltaFormsDisagree { closed, recursive });
        }
        let after = closed.max(self.delta_min).min(1.0);
        self.delta = after;
        DeltaUpdate {
            before,
            closed,
            recursive,
            after,
            lin_err_projection: proj / f_sq.sqrt(),
            anomalies,
        }
    }
}

/// Diagnostic: the linearization error is aligned enough with `f` to raise
/// `delta` by at least `1/q_bar`.
#[allow(clippy::too_many_arguments)]
pub fn delta_increase_predicate(
    f_hat: &[f64],
    lin_err: &[f64],
    delta: f64,
    q_k: f64,
    q_bar: f64,
    gamma: f64,
    sigma: f64,
    f_norm: f64,
) -> bool {
    dot(f_hat, lin_err) > -delta * (1.0 - q_k / q_bar) * f_norm / (gamma * sigma)
}

/// `f / |f|`.
pub fn unit_vector(f: &[f64]) -> Vec<f64> {
    let n = norm2(f);
    f.iter().map(|v| v / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble_laplacian;
    use crate::mesh::{uniform_initial_mesh, Rectangle};
    use std::sync::Arc;

    #[test]
    fn alpha_schedule_examples() {
        let s = AlphaState { alpha: 2.0, beta: 1.0 }.update(1.0, 2.0);
        assert_eq!((s.beta, s.alpha), (0.5, 0.5));
        let s = AlphaState { alpha: 2.0, beta: 1.0 }.update(3.0, 2.0);
        assert_eq!((s.beta, s.alpha), (1.0, 3.0));
        let s = AlphaState { alpha: 0.2, beta: 0.1 }.update(1.9, 2.0);
        assert!((s.beta - 0.95).abs() < 1e-15 && (s.alpha - 1.805).abs() < 1e-14);
    }

    #[test]
    fn alpha_never_exceeds_residual_while_decreasing() {
        let mut s = AlphaState::initial(10.0);
        let norms = [10.0, 8.0, 7.5, 3.0, 2.9, 0.1];
        for w in norms.windows(2) {
            s = s.update(w[1], w[0]);
            assert!(s.alpha <= w[1] && s.beta <= 1.0);
        }
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_value(5.0, 5.0, 0.9), 0.9);
        assert!((sigma_value(1e-12, 5.0, 0.9) - 1.0).abs() < 1e-12);
        assert!((sigma_value(0.25, 5.0, 0.9) - 0.95).abs() < 1e-15);
        assert_eq!(sigma_value(0.0, 5.0, 0.9), 1.0);
    }

    #[test]
    fn gamma_mono_examples() {
        assert!((gamma_mono_cap(0.005, 0.9, 1.0) - 20.0).abs() < 1e-12);
        assert!((gamma_mono_cap(0.01, 0.9, 1.0) - 10.0).abs() < 1e-12);
        assert!((gamma_mono_cap(0.005, 0.9, 0.95) - 200.0 * (1.0 - 0.9 / 0.95)).abs() < 1e-12);
    }

    fn controller(gamma: f64) -> GammaController {
        let mut c = GammaController::new(gamma, 0.005, 0.9, 100.0, 2);
        c.iters_since_update = 2;
        c
    }

    #[test]
    fn gamma_due_examples() {
        assert!(!controller(1.0).update_due([1.0, 0.5, 0.25]));
        assert!(controller(2.0).update_due([1.0, 0.5, 0.25]));
        assert!(!controller(2.0).update_due([1.0, 0.6, 0.36]));
        let mut c = controller(2.0);
        c.iters_since_update = 1;
        assert!(!c.update_due([1.0, 0.5, 0.25]));
    }

    #[test]
    fn gamma_update_examples() {
        // ideal step: g^{n+1} - g^n = r^n
        let mut c = controller(2.0);
        let r = [1.0, -2.0, 0.5];
        let g0 = [0.0; 3];
        let up = c.update(&r, &g0, &r);
        assert!((up.gamma_tilde - 0.9).abs() < 1e-15);
        assert_eq!(c.gamma, 1.0);
        assert_eq!(c.updates_this_refinement, 1);
        assert_eq!(c.iters_since_update, 0);

        let mut c = controller(2.0);
        let half: Vec<f64> = r.iter().map(|v| 0.5 * v).collect();
        let up = c.update(&r, &g0, &half);
        assert!((up.gamma_tilde - 1.8).abs() < 1e-15);
        assert!((c.gamma - 1.8).abs() < 1e-15);
        assert!(up.anomalies.is_empty());

        let mut c = controller(2.0);
        let up = c.update(&[1.0, 0.0, 0.0], &g0, &[0.4, 1.0, -1.0]);
        assert!((up.gamma_tilde - 2.25).abs() < 1e-15);
    }

    #[test]
    fn gamma_zero_denominator_is_rejected() {
        let mut c = controller(3.0);
        let up = c.update(&[1.0, 0.0], &[0.0, 0.0], &[0.0, 5.0]);
        assert!(!up.accepted);
        assert_eq!(c.gamma, 3.0);
        assert_eq!(up.anomalies, vec![Anomaly::ZeroDenominator]);
    }

    #[test]
    fn gamma_bound_violation_is_reported() {
        // denominator far outside the lemma interval
        let mut c = controller(2.0);
        let up = c.update(&[1.0], &[0.0], &[10.0]);
        assert!(up.accepted);
        assert!(up.anomalies.iter().any(|a| matches!(a, Anomaly::DenominatorBound { .. })));
    }

    #[test]
    fn delta_due_examples() {
        assert_eq!(delta_update_due(1.0, &[1.0, 0.5, 1e-9], None, 2.0, 0.005, 1e-7), DeltaDue::NotDue);
        assert_eq!(delta_update_due(0.5, &[1.0, 1e-8], None, 2.0, 0.005, 1e-7), DeltaDue::DueByConvergence);
        assert_eq!(delta_update_due(0.5, &[1.0, 0.7, 0.49], Some(1.0), 2.0, 0.005, 1e-7), DeltaDue::DueByRate);
        // rate 0.8 is slower than 1 - 1/4
        assert_eq!(delta_update_due(0.5, &[1.0, 0.8, 0.64], Some(1.0), 2.0, 0.005, 1e-7), DeltaDue::NotDue);
        // no sufficient decrease relative to the previous level
        assert_eq!(delta_update_due(0.5, &[1.0, 0.7, 0.49], Some(0.5), 2.0, 0.005, 1e-7), DeltaDue::NotDue);
    }

    fn diag(v: &[f64]) -> SparseMatrix {
        let t: Vec<_> = v.iter().enumerate().map(|(i, &x)| (i, i, x)).collect();
        SparseMatrix::from_triplets(v.len(), &t)
    }

    #[test]
    fn delta_linear_problem_grows_by_one_over_q() {
        // g(u) = A u exactly linear, and the step solves the Newmark system
        let a = diag(&[2.0, 3.0, 4.0]);
        let rk = diag(&[1.0, 0.0, 1.0]);
        let f = [1.0, 2.0, -1.0];
        let (alpha, gamma, sigma, delta) = (0.3, 2.0, 0.95, 0.4);
        let u = [0.1, 0.2, 0.3];
        let g_n = a.spmv(&u).unwrap();
        let r: Vec<f64> = g_n.iter().zip(&f).map(|(g, f)| -g + delta * f).collect();
        let m = rk.combine(alpha, &a, gamma);
        let w = m.solve(&r).unwrap();
        let u1: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a + b).collect();
        let g_np1 = a.spmv(&u1).unwrap();
        let mut ctl = DeltaController::new(delta, 0.01);
        let q = 0.9;
        let up = ctl.update(
            &DeltaInputs {
                f: &f,
                g_n: &g_n,
                g_np1: &g_np1,
                w: &w,
                alpha,
                gamma,
                sigma,
                rk: &rk,
                jac_bar: &a,
                jac_n: &a,
            },
            q,
        );
        assert!((up.recursive - delta / q).abs() < 1e-14);
        assert!((up.closed - delta / q).abs() < 1e-12);
        assert!(up.anomalies.is_empty());
        assert!(ctl.delta > delta);
    }

    #[test]
    fn delta_recursive_arithmetic() {
        // gamma sigma <f, L^e> / |f|^2 = -0.05 with f = e_1
        let f = [1.0, 0.0, 0.0];
        let zero = diag(&[0.0; 3]);
        let g_n = [0.0; 3];
        let g_np1 = [-0.05, 0.3, 0.0];
        let w = [0.0; 3];
        let mut ctl = DeltaController::new(0.5, 0.01);
        // with w = 0 the closed form sees only g^{n+1} - g^n, and the step
        // relation requires -g^n + delta f = M w = 0, which fails here; only
        // check the recursive value
        let up = ctl.update(
            &DeltaInputs {
                f: &f,
                g_n: &g_n,
                g_np1: &g_np1,
                w: &w,
                alpha: 0.0,
                gamma: 1.0,
                sigma: 1.0,
                rk: &zero,
                jac_bar: &zero,
                jac_n: &zero,
            },
            0.9,
        );
        assert!((up.recursive - 0.5).abs() < 1e-15);
    }

    #[test]
    fn delta_without_source_is_one() {
        let zero = diag(&[0.0; 2]);
        let mut ctl = DeltaController::new(0.2, 0.01);
        let v = [0.0; 2];
        ctl.update(
            &DeltaInputs {
                f: &v,
                g_n: &v,
                g_np1: &v,
                w: &v,
                alpha: 0.0,
                gamma: 1.0,
                sigma: 1.0,
                rk: &zero,
                jac_bar: &zero,
                jac_n: &zero,
            },
            0.9,
        );
        assert_eq!(ctl.delta, 1.0);
    }

    #[test]
    fn increase_predicate_examples() {
        let f_hat = [1.0, 0.0];
        assert!(delta_increase_predicate(&f_hat, &[0.0, 0.0], 0.5, 0.9, 1.0, 2.0, 0.95, 3.0));
        let bound = -0.5 * (1.0 - 0.9) * 3.0 / (2.0 * 0.95);
        assert!(!delta_increase_predicate(&f_hat, &[bound, 7.0], 0.5, 0.9, 1.0, 2.0, 0.95, 3.0));
    }

    #[test]
    fn median_is_lower_median() {
        assert_eq!(lower_median(&[4.0, 1.0, 3.0, 2.0]), 2.0);
        assert_eq!(lower_median(&[5.0, 1.0, 3.0]), 3.0);
    }

    #[test]
    fn smooth_iterate_gets_no_regularization() {
        let m = Arc::new(uniform_initial_mesh(Rectangle::unit_square(), 4).unwrap());
        let lap = assemble_laplacian(&m);
        let rk = build_rk(&P1Function::zeros(m.clone()), &lap);
        assert_eq!(rk.matrix.max_abs(), 0.0);
        assert!(rk.matrix.same_pattern(&lap));

        let fine = Arc::new(m.refine(&[0, 7, 19]));
        let affine = P1Function::interpolate(fine.clone(), |x, y| 0.4 * x - 0.7 * y + 0.1);
        let rk = build_rk(&affine, &assemble_laplacian(&fine));
        assert!(rk.vertex_flags.iter().all(|f| !f));
    }
}
