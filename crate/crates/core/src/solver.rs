//! Inner Newmark-type iteration, exit and reset logic, and the adaptive loop.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{compute_indicators, dorfler_mark};
use crate::fem::{assemble_g_and_jacobian, assemble_jacobian, assemble_laplacian, assemble_load, error_norms, residual_from, P1Function};
use crate::linalg::{norm2, SolveFailure, SparseMatrix};
use crate::mesh::{transfer, uniform_initial_mesh, Mesh, Rectangle};
use crate::problem::ProblemSpec;
use crate::stabilizer::{
    build_rk, delta_update_due, exit_checks, gamma_mono_cap, sigma_value, AlphaState, Anomaly, DeltaController, DeltaDue,
    DeltaInputs, DeltaUpdate, GammaController,
};

/// Matrix norm of `g'(0)` used for the initial `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum JacobianNorm {
    Frobenius,
    MaxRowSum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverParams {
    pub q_gamma: f64,
    pub sigma0: f64,
    pub theta: f64,
    pub eps_con: f64,
    pub eps_t: f64,
    pub gamma_max: f64,
    pub delta_min: f64,
    pub i_base: usize,
    pub i_min: usize,
    /// Reference reduction `q_bar` in the monotonicity cap.
    pub q_bar: f64,
    /// Number of mesh refinements allowed after the initial mesh.
    pub max_refinements: usize,
    /// No mesh with more free dofs than this is solved on.
    pub max_dofs: usize,
    /// The run stops once a consistent converged solution has at least this many dofs ...
    pub target_dofs: usize,
    /// ... and at least this many levels were solved with `delta = 1`.
    pub min_tail: usize,
    /// Cells per side of the initial crisscross mesh.
    pub initial_cells: usize,
    /// Bisection passes per adaptive step; pass `j + 1` bisects the children of the elements of pass `j`.
    pub bisections: usize,
    pub jacobian_norm: JacobianNorm,
}

impl SolverParams {
    /// Defaults for a given rate tolerance; `gamma_max` and `delta_min` follow from it.
    pub fn with_eps_t(eps_t: f64) -> Self {
        let gamma_max = (0.9 / eps_t).min(100.0);
        Self {
            q_gamma: 0.9,
            sigma0: 0.9,
            theta: 0.2,
            eps_con: 1e-7,
            eps_t,
            gamma_max,
            delta_min: 1.0 / gamma_max,
            i_base: 30,
            i_min: 2,
            q_bar: 1.0,
            max_refinements: 60,
            max_dofs: 50_000,
            target_dofs: 15_000,
            min_tail: 10,
            initial_cells: 6,
            bisections: 2,
            jacobian_norm: JacobianNorm::Frobenius,
        }
    }

    /// Sets `gamma_max` and the matching floor `delta_min = 1 / gamma_max`.
    pub fn set_gamma_max(&mut self, gamma_max: f64) {
        self.gamma_max = gamma_max;
        self.delta_min = 1.0 / gamma_max;
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::Config(msg.to_string())) };
        check(self.q_gamma > 0.0 && self.q_gamma < 1.0, "q_gamma must lie in (0, 1)")?;
        check(self.sigma0 > 0.0 && self.sigma0 <= 1.0, "sigma0 must lie in (0, 1]")?;
        check(self.theta > 0.0 && self.theta < 1.0, "theta must lie in (0, 1)")?;
        check(self.eps_con > 0.0, "eps_con must be positive")?;
        check(self.eps_t > 0.0 && self.eps_t < 1.0, "eps_t must lie in (0, 1)")?;
        check(self.gamma_max >= 1.0, "gamma_max must be at least 1")?;
        check(self.eps_t * self.gamma_max < 1.0, "eps_t * gamma_max must be below 1")?;
        check(self.delta_min > 0.0 && self.delta_min <= 1.0, "delta_min must lie in (0, 1]")?;
        check(self.i_base >= 1, "i_base must be positive")?;
        check(self.i_min >= 2, "i_min must be at least 2")?;
        check(self.q_bar >= self.q_gamma && self.q_bar <= 1.0, "q_bar must lie in [q_gamma, 1]")?;
        check(self.initial_cells >= 1, "initial mesh needs at least one cell")?;
        check(self.bisections >= 1, "bisections must be at least 1")?;
        Ok(())
    }
}

impl Default for SolverParams {
    fn default() -> Self {
        Self::with_eps_t(0.005)
    }
}

/// How the iteration on one mesh ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitCondition {
    Converged,
    AcceptableRate,
    #[serde(rename = "reset")]
    MaxIterationsReset,
}

impl ExitCondition {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::AcceptableRate => "acceptable_rate",
            Self::MaxIterationsReset => "reset",
        }
    }
}

impl fmt::Display for ExitCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ExitCondition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "converged" => Ok(Self::Converged),
            "acceptable_rate" => Ok(Self::AcceptableRate),
            "reset" => Ok(Self::MaxIterationsReset),
            other => Err(format!("unknown exit condition `{other}`")),
        }
    }
}

/// Summary of one mesh level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementRecord {
    pub k: usize,
    pub dofs: usize,
    pub elements: usize,
    pub iterations: usize,
    pub exit: ExitCondition,
    pub final_r: f64,
    pub eta: f64,
    pub zeta: f64,
    /// `gamma` after the last step, including a final update.
    pub gamma: f64,
    /// `delta` the level was solved with.
    pub delta: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub l2_err: Option<f64>,
    pub h1_err: Option<f64>,
    /// `gamma` used in the last step.
    #[serde(skip)]
    pub gamma_last_step: f64,
    /// Final residual norm of the previous level.
    #[serde(skip)]
    pub r_prev_final: Option<f64>,
}

impl RefinementRecord {
    /// Solved with consistent data, to tolerance, with `gamma = 1`.
    pub fn is_consistent(&self, eps_con: f64) -> bool {
        self.delta == 1.0 && self.gamma == 1.0 && self.final_r < eps_con && self.exit != ExitCondition::MaxIterationsReset
    }
}

/// A `gamma` update as it appears in the trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaUpdateRecord {
    pub k: usize,
    pub n: usize,
    pub before: f64,
    pub gamma_tilde: f64,
    pub after: f64,
    pub accepted: bool,
    pub r_sq: f64,
    pub inner: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnomalyRecord {
    pub k: usize,
    pub n: usize,
    #[serde(flatten)]
    pub anomaly: Anomaly,
}

/// One line of the per-iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub k: usize,
    /// Index of the step; `r_norm` is the residual after it.
    pub n: usize,
    pub r_norm: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `gamma` used in the step.
    pub gamma: f64,
    pub sigma: f64,
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_update: Option<GammaUpdateRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_update: Option<DeltaUpdate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exit: Option<ExitCondition>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reset: Option<ResetEvent>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_failure: Option<String>,
    pub anomalies: Vec<Anomaly>,
}

/// Parameters chosen by a reset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResetEvent {
    pub gamma: f64,
    pub delta: f64,
}

/// Receives trace lines and level records as they are produced.
pub trait Observer {
    fn iteration(&mut self, _trace: &IterationTrace) -> Result<()> {
        Ok(())
    }

    fn refinement(&mut self, _record: &RefinementRecord) -> Result<()> {
        Ok(())
    }
}

impl Observer for () {}

/// Collects every trace line in memory.
#[derive(Debug, Default)]
pub struct TraceCollector {
    pub iterations: Vec<IterationTrace>,
}

impl Observer for TraceCollector {
    fn iteration(&mut self, trace: &IterationTrace) -> Result<()> {
        self.iterations.push(trace.clone());
        Ok(())
    }
}

/// An iterate with the assembled quantities needed for the next step.
#[derive(Debug, Clone)]
pub struct Iterate {
    pub u: P1Function,
    pub g: Vec<f64>,
    pub jac: SparseMatrix,
    pub r: Vec<f64>,
}

impl Iterate {
    pub fn new(u: P1Function, problem: &ProblemSpec, f: &[f64], delta: f64) -> Result<Self> {
        let (g, jac) = assemble_g_and_jacobian(&u, problem)?;
        let r = residual_from(delta, &g, f);
        if !r.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                what: "residual",
                element: 0,
            });
        }
        Ok(Self { u, g, jac, r })
    }

    pub fn r_norm(&self) -> f64 {
        norm2(&self.r)
    }
}

/// Scalar coefficients of one Newmark step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCoefficients {
    pub alpha: f64,
    pub gamma: f64,
    pub sigma: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum StepFailure {
    #[error("linear solve failed: {0}")]
    Solve(#[from] SolveFailure),
    #[error("assembly at the new iterate failed: {0}")]
    Assembly(#[from] Error),
}

/// `alpha R + gamma (sigma g'(u^n) + (1 - sigma) g'(u_bar))`.
pub fn newmark_matrix(c: StepCoefficients, rk: &SparseMatrix, jac_n: &SparseMatrix, jac_bar: &SparseMatrix) -> SparseMatrix {
    let mut m = jac_n.combine(c.gamma * c.sigma, jac_bar, c.gamma * (1.0 - c.sigma));
    if c.alpha != 0.0 {
        m = m.combine(1.0, rk, c.alpha);
    }
    m
}

/// Solves for the update `w` and assembles the next iterate.
pub fn newmark_step(
    it: &Iterate,
    c: StepCoefficients,
    rk: &SparseMatrix,
    jac_bar: &SparseMatrix,
    problem: &ProblemSpec,
    f: &[f64],
    delta: f64,
) -> std::result::Result<(Vec<f64>, Iterate), StepFailure> {
    let m = newmark_matrix(c, rk, &it.jac, jac_bar);
    let w = m.solve(&it.r)?;
    let mut u = it.u.clone();
    u.add_free(&w);
    let next = Iterate::new(u, problem, f, delta)?;
    Ok((w, next))
}

/// `I_MAX = max(I_ACC, I_BASE)` with the accepted rate `1 - 1/(2 gamma)`.
pub fn compute_imax(r_prev_final: f64, r0_norm: f64, gamma: f64, i_base: usize) -> usize {
    let q_acc = 1.0 - 1.0 / (2.0 * gamma);
    let i_acc = ((r_prev_final.ln() - r0_norm.ln()) / q_acc.ln()).ceil() + 1.0;
    if i_acc.is_finite() && i_acc > i_base as f64 {
        i_acc as usize
    } else {
        i_base
    }
}

/// State carried from one mesh level to the next.
#[derive(Debug, Clone)]
pub struct Carry {
    pub u: P1Function,
    pub gamma: f64,
    pub delta: f64,
    pub r_prev_final: Option<f64>,
}

fn reset_event(gamma: f64, delta: f64, params: &SolverParams) -> ResetEvent {
    ResetEvent {
        gamma: (2.0 * gamma).min(params.gamma_max),
        delta: (delta / 2.0).max(params.delta_min),
    }
}

/// `u = 0`, `gamma` doubled and `delta` halved within their bounds.
pub fn reset(carry: &Carry, params: &SolverParams) -> Carry {
    let ResetEvent { gamma, delta } = reset_event(carry.gamma, carry.delta, params);
    Carry {
        u: P1Function::zeros(carry.u.mesh().clone()),
        gamma,
        delta,
        r_prev_final: carry.r_prev_final,
    }
}

/// Cold start on `mesh`: `u = 0`, `gamma = |f| / |g'(0)|` and `delta = 1/gamma`.
pub fn initial_values(problem: &ProblemSpec, mesh: Arc<Mesh>, params: &SolverParams) -> Result<Carry> {
    let f = assemble_load(problem, &mesh)?;
    let u = P1Function::zeros(mesh);
    let f_norm = norm2(&f);
    let (gamma, delta) = if f_norm == 0.0 {
        (1.0, 1.0)
    } else {
        let jac = assemble_jacobian(&u, problem)?;
        let jn = match params.jacobian_norm {
            JacobianNorm::Frobenius => jac.frobenius_norm(),
            JacobianNorm::MaxRowSum => jac.norm_inf(),
        };
        let gamma = (f_norm / jn).clamp(1.0, params.gamma_max);
        (gamma, (1.0 / gamma).clamp(params.delta_min, 1.0))
    };
    Ok(Carry {
        u,
        gamma,
        delta,
        r_prev_final: None,
    })
}

/// Result of the iteration on one mesh.
#[derive(Debug, Clone)]
pub struct LevelOutcome {
    pub record: RefinementRecord,
    /// Last iterate, finite when it could be assembled.
    pub u: P1Function,
    /// `gamma` controller state at exit, before any reset.
    pub gamma: f64,
    /// `delta` for the next level, before any reset.
    pub next_delta: f64,
    pub gamma_updates: Vec<GammaUpdateRecord>,
    pub delta_update: Option<DeltaUpdate>,
    pub anomalies: Vec<AnomalyRecord>,
}

/// Iterates on one mesh until an exit condition holds.
///
/// The record's estimator and error fields are left at zero; the adaptive
/// loop fills them in.
pub fn inner_solve(
    problem: &ProblemSpec,
    params: &SolverParams,
    carry: &Carry,
    k: usize,
    observer: &mut dyn Observer,
) -> Result<LevelOutcome> {
    let mesh = carry.u.mesh().clone();
    let f = assemble_load(problem, &mesh)?;
    let lap = assemble_laplacian(&mesh);
    let jac_bar = assemble_jacobian(&P1Function::zeros(mesh.clone()), problem)?;
    let rk = build_rk(&carry.u, &lap).matrix;
    let delta = carry.delta;

    let mut gamma_ctl = GammaController::new(carry.gamma, params.eps_t, params.q_gamma, params.gamma_max, params.i_min);
    gamma_ctl.begin_refinement();
    let mut delta_ctl = DeltaController::new(delta, params.delta_min);

    let mut it = Iterate::new(carry.u.clone(), problem, &f, delta)?;
    let r0 = it.r_norm();
    let k0 = r0;
    let mut alpha = AlphaState::initial(r0);
    let mut hist = vec![r0];
    let i_max = compute_imax(carry.r_prev_final.unwrap_or(r0), r0, gamma_ctl.gamma, params.i_base);

    let mut gamma_updates = Vec::new();
    let mut anomalies = Vec::new();
    let mut delta_update = None;
    let mut sigma = params.sigma0;
    let mut gamma_step = gamma_ctl.gamma;
    let mut n = 0;

    let exit = loop {
        if r0 == 0.0 {
            break ExitCondition::Converged;
        }
        sigma = sigma_value(hist[n], k0, params.sigma0);
        gamma_step = gamma_ctl.gamma;
        let coeffs = StepCoefficients {
            alpha: alpha.alpha,
            gamma: gamma_step,
            sigma,
        };
        let mut trace = IterationTrace {
            k,
            n,
            r_norm: f64::NAN,
            alpha: alpha.alpha,
            beta: alpha.beta,
            gamma: gamma_step,
            sigma,
            delta,
            gamma_update: None,
            delta_update: None,
            exit: None,
            reset: None,
            step_failure: None,
            anomalies: Vec::new(),
        };
        let (w, next) = match newmark_step(&it, coeffs, &rk, &jac_bar, problem, &f, delta) {
            Ok(step) => step,
            Err(e) => {
                log::debug!("level {k} step {n}: {e}");
                trace.step_failure = Some(e.to_string());
                trace.r_norm = hist[n];
                trace.exit = Some(ExitCondition::MaxIterationsReset);
                trace.reset = Some(reset_event(gamma_ctl.gamma, delta, params));
                observer.iteration(&trace)?;
                break ExitCondition::MaxIterationsReset;
            }
        };
        let r_next = next.r_norm();
        hist.push(r_next);
        trace.r_norm = r_next;
        gamma_ctl.record_step();

        if n >= 1 && gamma_ctl.update_due([hist[n - 1], hist[n], hist[n + 1]]) {
            let up = gamma_ctl.update(&it.r, &it.g, &next.g);
            let rec = GammaUpdateRecord {
                k,
                n,
                before: up.before,
                gamma_tilde: up.gamma_tilde,
                after: up.after,
                accepted: up.accepted,
                r_sq: up.r_sq,
                inner: up.inner,
            };
            trace.anomalies.extend(up.anomalies);
            gamma_updates.push(rec.clone());
            trace.gamma_update = Some(rec);
        }
        let alpha_next = alpha.update(hist[n + 1], hist[n]);

        let checks = exit_checks(&hist, carry.r_prev_final, gamma_step, params.eps_t, params.eps_con);
        let exit = if checks.converged {
            Some(ExitCondition::Converged)
        } else if checks.acceptable_rate {
            Some(ExitCondition::AcceptableRate)
        } else if n + 1 >= i_max {
            Some(ExitCondition::MaxIterationsReset)
        } else {
            None
        };
        if matches!(exit, Some(ExitCondition::Converged | ExitCondition::AcceptableRate)) {
            let due = delta_update_due(delta, &hist, carry.r_prev_final, gamma_step, params.eps_t, params.eps_con);
            if due != DeltaDue::NotDue {
                let q_k = params.q_gamma.powi(gamma_ctl.updates_this_refinement as i32 + 1);
                let up = delta_ctl.update(
                    &DeltaInputs {
                        f: &f,
                        g_n: &it.g,
                        g_np1: &next.g,
                        w: &w,
                        alpha: alpha.alpha,
                        gamma: gamma_step,
                        sigma,
                        rk: &rk,
                        jac_bar: &jac_bar,
                        jac_n: &it.jac,
                    },
                    q_k,
                );
                trace.anomalies.extend(up.anomalies.iter().cloned());
                trace.delta_update = Some(up.clone());
                delta_update = Some(up);
            }
        }
        trace.exit = exit;
        if exit == Some(ExitCondition::MaxIterationsReset) {
            trace.reset = Some(reset_event(gamma_ctl.gamma, delta, params));
        }
        anomalies.extend(trace.anomalies.iter().map(|a| AnomalyRecord {
            k,
            n,
            anomaly: a.clone(),
        }));
        observer.iteration(&trace)?;

        alpha = alpha_next;
        it = next;
        n += 1;
        if let Some(e) = exit {
            break e;
        }
    };

    let record = RefinementRecord {
        k,
        dofs: mesh.num_free_dofs(),
        elements: mesh.num_triangles(),
        iterations: n,
        exit,
        final_r: hist[n],
        eta: 0.0,
        zeta: 0.0,
        gamma: gamma_ctl.gamma,
        delta,
        alpha: alpha.alpha,
        sigma,
        l2_err: None,
        h1_err: None,
        gamma_last_step: gamma_step,
        r_prev_final: carry.r_prev_final,
    };
    Ok(LevelOutcome {
        record,
        u: it.u,
        gamma: gamma_ctl.gamma,
        next_delta: delta_ctl.delta,
        gamma_updates,
        delta_update,
        anomalies,
    })
}

/// Overall outcome of an adaptive run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RunStatus {
    Converged,
    NotConverged,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub status: RunStatus,
    pub records: Vec<RefinementRecord>,
    pub gamma0: f64,
    pub delta0: f64,
    /// Levels that ended in a reset.
    pub resets: Vec<usize>,
    pub gamma_updates: Vec<GammaUpdateRecord>,
    pub delta_updates: Vec<(usize, DeltaUpdate)>,
    pub anomalies: Vec<AnomalyRecord>,
    /// Mesh and iterate of the last level.
    pub mesh: Arc<Mesh>,
    pub solution: P1Function,
}

impl RunResult {
    pub fn total_iterations(&self) -> usize {
        self.records.iter().map(|r| r.iterations).sum()
    }

    /// Index of the first level solved with `delta = 1`.
    pub fn first_consistent_level(&self) -> Option<usize> {
        self.records.iter().position(|r| r.delta == 1.0)
    }

    /// Accepted `gamma` updates starting at or below the monotonicity cap that increased `gamma`.
    pub fn monotonicity_violations(&self, params: &SolverParams) -> Vec<&GammaUpdateRecord> {
        let cap = gamma_mono_cap(params.eps_t, params.q_gamma, params.q_bar);
        self.gamma_updates
            .iter()
            .filter(|u| u.accepted && u.before <= cap && u.after > u.before)
            .collect()
    }
}

/// Runs the adaptive algorithm on the unit square from a cold start.
pub fn adaptive_solve(problem: &ProblemSpec, params: &SolverParams, observer: &mut dyn Observer) -> Result<RunResult> {
    let mesh = Arc::new(uniform_initial_mesh(Rectangle::unit_square(), params.initial_cells)?);
    adaptive_solve_on(problem, params, mesh, observer)
}

/// Runs the adaptive algorithm starting from `mesh`.
pub fn adaptive_solve_on(
    problem: &ProblemSpec,
    params: &SolverParams,
    mesh: Arc<Mesh>,
    observer: &mut dyn Observer,
) -> Result<RunResult> {
    params.validate()?;
    let mut carry = initial_values(problem, mesh, params)?;
    let (gamma0, delta0) = (carry.gamma, carry.delta);
    log::info!("initial gamma {gamma0:.6e}, delta {delta0:.6e}");

    let mut records = Vec::new();
    let mut resets = Vec::new();
    let mut gamma_updates = Vec::new();
    let mut delta_updates = Vec::new();
    let mut anomalies = Vec::new();
    let mut status = RunStatus::NotConverged;

    for k in 0.. {
        let mut out = inner_solve(problem, params, &carry, k, observer)?;
        gamma_updates.append(&mut out.gamma_updates);
        anomalies.append(&mut out.anomalies);
        if let Some(up) = out.delta_update.take() {
            delta_updates.push((k, up));
        }
        let mut record = out.record;

        let finite = out.u.coeffs().iter().all(|v| v.is_finite());
        let estimate_on = if finite { out.u.clone() } else { carry.u.clone() };
        let indicators = compute_indicators(&estimate_on, problem)?;
        record.eta = indicators.eta();
        record.zeta = indicators.zeta();
        if problem.exact.is_some() {
            let (l2, h1) = error_norms(&estimate_on, problem)?;
            record.l2_err = Some(l2);
            record.h1_err = Some(h1);
        }
        log::info!(
            "k={k} dofs={} it={} exit={} |r|={:.3e} gamma={:.4} delta={:.4} eta={:.4e}",
            record.dofs,
            record.iterations,
            record.exit,
            record.final_r,
            record.gamma,
            record.delta,
            record.eta
        );
        observer.refinement(&record)?;

        let next_carry = Carry {
            u: out.u,
            gamma: out.gamma,
            delta: out.next_delta,
            r_prev_final: Some(record.final_r),
        };
        let next_carry = if record.exit == ExitCondition::MaxIterationsReset {
            resets.push(k);
            reset(&next_carry, params)
        } else {
            next_carry
        };
        let consistent = record.is_consistent(params.eps_con);
        let tail = records.iter().filter(|r: &&RefinementRecord| r.delta == 1.0).count() + usize::from(record.delta == 1.0);
        let dofs = record.dofs;
        records.push(record);

        if consistent && tail >= params.min_tail && dofs >= params.target_dofs {
            status = RunStatus::Converged;
            break;
        }
        if k >= params.max_refinements {
            break;
        }
        let marking = dorfler_mark(&indicators.eta_sq, params.theta)?;
        if marking.all_zero {
            // nothing left to refine: the discrete solution is exact
            if consistent {
                status = RunStatus::Converged;
            }
            break;
        }
        let was_reset = next_carry.u.coeffs().iter().all(|v| *v == 0.0) || !finite;
        let mut u = next_carry.u.clone();
        let mut marked = marking.elements.clone();
        for pass in 0..params.bisections {
            if pass > 0 {
                marked = u.mesh().children_of(&marked);
            }
            let fine = Arc::new(u.mesh().refine(&marked));
            u = if was_reset { P1Function::zeros(fine) } else { transfer(&u, fine)? };
        }
        if u.mesh().num_free_dofs() > params.max_dofs {
            break;
        }
        carry = Carry { u, ..next_carry };
    }
    if status == RunStatus::NotConverged && records.last().is_some_and(|r| r.is_consistent(params.eps_con)) {
        status = RunStatus::Converged;
    }
    let mesh = carry.u.mesh().clone();
    let solution = carry.u.clone();
    Ok(RunResult {
        status,
        records,
        gamma0,
        delta0,
        resets,
        gamma_updates,
        delta_updates,
        anomalies,
        mesh,
        solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn imax_examples() {
        assert_eq!(compute_imax(1e-3, 1e-1, 1.0, 1), 8);
        assert_eq!(compute_imax(0.3, 0.3, 4.0, 30), 30);
        assert_eq!(compute_imax(1e-3, 1e-1, 10.0, 30), 91);
        assert_eq!(compute_imax(2.0, 1.0, 3.0, 30), 30);
    }

    #[test]
    fn reset_examples() {
        let mesh = Arc::new(uniform_initial_mesh(Rectangle::unit_square(), 2).unwrap());
        let mut params = SolverParams::default();
        params.set_gamma_max(20.0);
        params.delta_min = 0.05;
        let mut u = P1Function::zeros(mesh.clone());
        u.add_free(&vec![1.0; mesh.num_free_dofs()]);
        let c = Carry {
            u,
            gamma: 5.0,
            delta: 0.1,
            r_prev_final: Some(1.0),
        };
        let r = reset(&c, &params);
        assert_eq!((r.gamma, r.delta), (10.0, 0.05));
        assert!(r.u.coeffs().iter().all(|v| *v == 0.0));
        let r = reset(&Carry { gamma: 15.0, ..c }, &params);
        assert_eq!(r.gamma, 20.0);
    }

    #[test]
    fn default_params() {
        let p = SolverParams::default();
        assert_eq!(p.gamma_max, 100.0);
        assert_eq!(p.delta_min, 0.01);
        p.validate().unwrap();
        let p = SolverParams::with_eps_t(0.01);
        assert!((p.gamma_max - 90.0).abs() < 1e-12);
        p.validate().unwrap();
        let mut bad = SolverParams::default();
        bad.eps_t = 0.02;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_load_starts_consistent() {
        let mesh = Arc::new(uniform_initial_mesh(Rectangle::unit_square(), 3).unwrap());
        let c = initial_values(&ProblemSpec::constant(1.0, |_, _| 0.0), mesh, &SolverParams::default()).unwrap();
        assert_eq!((c.gamma, c.delta), (1.0, 1.0));
    }

    #[test]
    fn constant_kappa_initial_gamma() {
        let mesh = Arc::new(uniform_initial_mesh(Rectangle::unit_square(), 3).unwrap());
        let p = ProblemSpec::constant(1.0, |x, y| 1e4 * x * y);
        let c = initial_values(&p, mesh.clone(), &SolverParams::default()).unwrap();
        let f = assemble_load(&p, &mesh).unwrap();
        let expect = norm2(&f) / assemble_laplacian(&mesh).frobenius_norm();
        assert!(expect > 1.0);
        assert!((c.gamma - expect).abs() < 1e-12 * expect);
        assert!((c.delta - 1.0 / expect).abs() < 1e-12);
    }

    #[test]
    fn linear_problem_converges_in_one_step() {
        let mesh = Arc::new(uniform_initial_mesh(Rectangle::unit_square(), 4).unwrap());
        let p = ProblemSpec::constant(1.0, |_, _| 1.0);
        let carry = Carry {
            u: P1Function::zeros(mesh),
            gamma: 1.0,
            delta: 1.0,
            r_prev_final: None,
        };
        let out = inner_solve(&p, &SolverParams::default(), &carry, 0, &mut ()).unwrap();
        assert_eq!(out.record.exit, ExitCondition::Converged);
        assert!(out.record.iterations <= 2);
    }
}
