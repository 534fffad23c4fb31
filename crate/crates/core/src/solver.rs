//! Outer regularization loop and its inner machinery.
//!
//! The outer loop solves `(P_k): min_{x in C} f(x) + eps_k g_D(x)` for a
//! strictly decreasing schedule `eps_k = eps0 / (k+1)^alpha` and stops as soon
//! as `g_D(x_k) < mu`: any point of `C` with vanishing gap value solves the
//! bilevel problem, so the threshold is the honest stopping rule. Each
//! subproblem is convex but nonsmooth on both sides (`f` may be an l1 norm,
//! `g_D` is a supremum), so it is solved by projected subgradient descent.
//!
//! A reference extragradient method for the lower-level VI is included; it
//! produces feasible points of the equilibrium constraint independently of
//! the outer loop.

use nalgebra::DVector;
use serde::Serialize;

use crate::gap::{self, GapEvaluation};
use crate::model::{validate_instance, ProblemInstance};
use crate::{Error, Result};

/// Step-size policy for the projected subgradient subproblem solver. Steps
/// are lengths: the update moves `s` along the normalized subgradient.
#[derive(Debug, Clone, Serialize)]
pub enum StepRule {
    /// `s_t = s0 / sqrt(t + 1)`.
    DiminishingSqrt { s0: Option<f64> },
    /// Constant step within a stage; on `window` consecutive non-improving
    /// steps the iterate restarts from the incumbent and the step shrinks.
    /// Converges linearly on the sharp minima produced by polyhedral gap
    /// terms, where the square-root schedule cannot reach tight tolerances
    /// within the iteration cap.
    GeometricRestart {
        s0: Option<f64>,
        shrink: f64,
        window: usize,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct SubproblemConfig {
    pub step_rule: StepRule,
    pub max_inner: usize,
    /// Absolute objective improvement below which a step counts as a stall.
    pub inner_tol: f64,
}

impl Default for SubproblemConfig {
    fn default() -> Self {
        SubproblemConfig {
            step_rule: StepRule::GeometricRestart {
                s0: None,
                shrink: 0.5,
                window: 40,
            },
            max_inner: 5000,
            inner_tol: 1e-12,
        }
    }
}

/// Configuration of the outer regularization loop.
#[derive(Debug, Clone, Serialize)]
pub struct SolveConfig {
    /// Initial regularization weight `eps_0`.
    pub epsilon0: f64,
    /// Decay exponent in `eps_k = eps0 / (k+1)^alpha`; must lie in `(0, 1]`.
    pub alpha: f64,
    /// Optimality threshold on the gap value.
    pub mu: f64,
    pub max_outer: usize,
    pub subproblem: SubproblemConfig,
    /// Outer starting point; projected onto the set. Defaults to the
    /// projection of the origin.
    #[serde(skip)]
    pub start: Option<DVector<f64>>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            epsilon0: 1.0,
            alpha: 1.0,
            mu: 1e-6,
            max_outer: 200,
            subproblem: SubproblemConfig::default(),
            start: None,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon0 > 0.0) {
            return Err(Error::InvalidConfig("epsilon0 must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig("alpha must lie in (0, 1]".into()));
        }
        if !(self.mu >= 0.0) {
            return Err(Error::InvalidConfig("mu must be nonnegative".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidConfig("max_outer must be at least 1".into()));
        }
        Ok(())
    }

    pub fn epsilon_at(&self, k: usize) -> f64 {
        self.epsilon0 / ((k + 1) as f64).powf(self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    /// `g_D(x_k) < mu`: the iterate solves the bilevel problem up to `mu`.
    ThresholdMet,
    IterationCap,
    /// Two successive subproblems returned the same point with the gap still
    /// above `mu` and the schedule numerically exhausted.
    Stalled,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::ThresholdMet => "threshold-met",
            SolveStatus::IterationCap => "iteration-cap",
            SolveStatus::Stalled => "stalled",
        }
    }
}

/// One outer iteration of the regularization loop.
#[derive(Debug, Clone)]
pub struct TraceEntry {
    pub k: usize,
    pub x: DVector<f64>,
    pub epsilon: f64,
    /// `g_D(x_k)`.
    pub gap: f64,
    /// `f(x_k)`.
    pub objective: f64,
    pub inner_iterations: usize,
    /// `u_k`, the objective subgradient at `x_k`.
    pub f_subgradient: DVector<f64>,
    /// `v_k`, the (unscaled) Danskin subgradient of `g_D` at `x_k`.
    pub gap_subgradient: DVector<f64>,
}

impl TraceEntry {
    /// `w_k = -u_k - eps_k v_k`, the normal-cone element recovered from the
    /// subproblem stationarity identity `u_k + eps_k v_k + w_k = 0`.
    pub fn recovered_normal(&self) -> DVector<f64> {
        -&self.f_subgradient - &self.gap_subgradient * self.epsilon
    }
}

#[derive(Debug, Clone)]
pub struct SolveTrace {
    pub entries: Vec<TraceEntry>,
    pub status: SolveStatus,
}

impl SolveTrace {
    pub fn terminal(&self) -> &TraceEntry {
        self.entries.last().expect("trace is never empty")
    }

    /// Deterministic CSV export with 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,epsilon,gap,objective,inner_iters,status\n");
        for (i, e) in self.entries.iter().enumerate() {
            let status = if i + 1 == self.entries.len() {
                self.status.as_str()
            } else {
                "running"
            };
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{},{}\n",
                e.k, e.epsilon, e.gap, e.objective, e.inner_iterations, status
            ));
        }
        out
    }
}

/// Approximately minimizes `f + eps * g_D` over `C` by projected subgradient
/// descent with incumbent tracking, starting from `x0`. Returns the best
/// point found, its gap evaluation, and the iteration count.
pub fn solve_pk(
    inst: &ProblemInstance,
    epsilon: f64,
    x0: &DVector<f64>,
    cfg: &SubproblemConfig,
) -> Result<(DVector<f64>, GapEvaluation, usize)> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidConfig(
            "subproblem epsilon must be positive".into(),
        ));
    }
    let set = inst.set();
    let f = inst.objective();
    let diam = set.diameter()?;

    let mut x = set.project(x0)?;
    let mut eval = gap::eval_gap(inst, &x)?;
    let mut phi = f.value(&x) + epsilon * eval.value;
    let mut best_x = x.clone();
    let mut best_eval = eval.clone();
    let mut best_phi = phi;

    let s0 = match &cfg.step_rule {
        StepRule::DiminishingSqrt { s0 } | StepRule::GeometricRestart { s0, .. } => {
            s0.unwrap_or(0.25 * diam)
        }
    };
    let step_floor = 1e-13 * diam.max(1.0);
    let mut step = s0;
    let mut stall = 0usize;
    let mut iterations = 0usize;

    for t in 0..cfg.max_inner {
        iterations = t + 1;
        let g = f.subgradient(&x) + &eval.subgradient * epsilon;
        let gn = g.norm();
        if gn <= 1e-15 {
            break;
        }
        let s_t = match &cfg.step_rule {
            StepRule::DiminishingSqrt { .. } => s0 / ((t + 1) as f64).sqrt(),
            StepRule::GeometricRestart { .. } => step,
        };
        x = set.project(&(&x - &g * (s_t / gn)))?;
        eval = gap::eval_gap(inst, &x)?;
        phi = f.value(&x) + epsilon * eval.value;

        if phi < best_phi - cfg.inner_tol * (1.0 + best_phi.abs()) {
            best_phi = phi;
            best_x = x.clone();
            best_eval = eval.clone();
            stall = 0;
        } else {
            stall += 1;
            match &cfg.step_rule {
                StepRule::DiminishingSqrt { .. } => {
                    if stall >= 100 {
                        break;
                    }
                }
                StepRule::GeometricRestart { shrink, window, .. } => {
                    if stall >= *window {
                        step *= shrink;
                        stall = 0;
                        x = best_x.clone();
                        eval = best_eval.clone();
                        if step < step_floor {
                            break;
                        }
                    }
                }
            }
        }
    }
    Ok((best_x, best_eval, iterations))
}

/// Runs the outer regularization loop with warm starts and records the full
/// per-iteration trace.
pub fn solve_smpec(inst: &ProblemInstance, cfg: &SolveConfig) -> Result<SolveTrace> {
    cfg.validate()?;
    validate_instance(inst)?;
    let set = inst.set();
    let f = inst.objective();

    let mut x = match &cfg.start {
        Some(x0) => set.project(x0)?,
        None => set.project(&DVector::zeros(inst.dim()))?,
    };

    let mut entries: Vec<TraceEntry> = Vec::new();
    let mut status = SolveStatus::IterationCap;
    for k in 0..cfg.max_outer {
        let epsilon = cfg.epsilon_at(k);
        let (x_next, eval, inner_iterations) = solve_pk(inst, epsilon, &x, &cfg.subproblem)?;
        let identical = k > 0 && (&x_next - &x).norm() == 0.0;
        x = x_next;
        entries.push(TraceEntry {
            k,
            x: x.clone(),
            epsilon,
            gap: eval.value,
            objective: f.value(&x),
            inner_iterations,
            f_subgradient: f.subgradient(&x),
            gap_subgradient: eval.subgradient.clone(),
        });
        if eval.value < cfg.mu {
            status = SolveStatus::ThresholdMet;
            break;
        }
        if identical && epsilon < 1e-12 {
            status = SolveStatus::Stalled;
            break;
        }
    }
    Ok(SolveTrace { entries, status })
}

/// Result of the reference extragradient solve of `VI(F, C)`.
#[derive(Debug, Clone)]
pub struct ViSolveResult {
    pub point: DVector<f64>,
    /// `g_D` value at the returned point.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Extragradient iterations `x_bar = P(x - tau F(x))`,
/// `x+ = P(x - tau F(x_bar))` with the step halved whenever the local
/// Lipschitz test fails. Convergence is declared only once the gap value
/// drops below `tol`.
pub fn solve_vi(inst: &ProblemInstance, tol: f64) -> Result<ViSolveResult> {
    solve_vi_detailed(inst, tol, |_| {})
}

/// [`solve_vi`] with an iterate observer, for diagnostics and tests.
pub fn solve_vi_detailed(
    inst: &ProblemInstance,
    tol: f64,
    mut on_iterate: impl FnMut(&DVector<f64>),
) -> Result<ViSolveResult> {
    validate_instance(inst)?;
    let set = inst.set();
    let map = inst.map();
    let diam = set.diameter()?;

    let probes = crate::model::sample_points(set, 16, 0x0ddb_a11);
    let lipschitz = map.lipschitz_estimate(&probes);
    let mut tau = (0.9 / lipschitz).min(1e8);

    let mut x = set.project(&DVector::zeros(inst.dim()))?;
    on_iterate(&x);
    let mut natural_tol = 1e-7 * (1.0 + diam);

    const CAP: usize = 200_000;
    let mut iterations = 0;
    while iterations < CAP {
        iterations += 1;
        let fx = map.eval(&x);
        let x_bar = set.project(&(&x - &fx * tau))?;
        let f_bar = map.eval(&x_bar);
        let dx = (&x_bar - &x).norm();
        if tau * (&f_bar - &fx).norm() > 0.9 * dx && dx > 1e-15 {
            tau *= 0.5;
            continue;
        }
        let x_next = set.project(&(&x - &f_bar * tau))?;
        x = x_next;
        on_iterate(&x);

        if dx <= natural_tol {
            let eval = gap::eval_gap(inst, &x)?;
            if eval.value <= tol {
                return Ok(ViSolveResult {
                    point: x,
                    residual: eval.value,
                    iterations,
                    converged: true,
                });
            }
            natural_tol *= 0.1;
            if natural_tol < 1e-16 * (1.0 + diam) {
                break;
            }
        }
    }
    let eval = gap::eval_gap(inst, &x)?;
    if eval.value <= tol {
        return Ok(ViSolveResult {
            point: x,
            residual: eval.value,
            iterations,
            converged: true,
        });
    }
    Err(Error::NonConvergence {
        what: "extragradient",
        iterations,
        residual: eval.value,
    })
}
