//! Continuation of mountain-pass solutions along a decreasing α-schedule.
//!
//! Each step solves the regularized problem warm-started at the previous
//! solution and records the quantities that certify the logarithmic
//! limit: the H¹ increment between consecutive solutions (which must
//! eventually decrease), the level staying inside a fixed window, the
//! residual of the limiting log-kernel equation, and the uniform
//! exponential decay of the tails. Subsequence extraction is replaced by
//! a hard monotone-improvement demand: collapse to zero or a failed step
//! truncates the trace loudly instead of being averaged away.

use std::path::PathBuf;
use std::sync::Arc;

use crate::certificates::decay_certificate;
use crate::energy::energy_log;
use crate::grid::{RadialFunction, RadialGrid};
use crate::kernel::{g_alpha, ConvolutionOperator, KernelSpec};
use crate::laplacian::H1Form;
use crate::nonlinearity::Nonlinearity;
use crate::report::CertResult;
use crate::solver::{mountain_pass, solve_warm_started, SolveOptions};
use crate::{ChoquardError, Result};

#[derive(Debug, Clone)]
pub struct ContinuationOptions {
    pub solve: SolveOptions,
    /// start of the decay fit window (defaults to R_max/4 when 0)
    pub decay_fit_from: f64,
    /// run the decay certificate for alpha <= this value
    pub decay_alpha_max: f64,
    pub cache_dir: Option<PathBuf>,
    pub max_operator_n: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            solve: SolveOptions::default(),
            decay_fit_from: 0.0,
            decay_alpha_max: 0.1,
            cache_dir: None,
            max_operator_n: crate::kernel::DEFAULT_MAX_OPERATOR_N,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContinuationStep {
    pub alpha: f64,
    pub c_level: f64,
    pub residual: f64,
    /// `‖u_k - u_{k-1}‖_{H¹}` (0 at the first step)
    pub dh1: f64,
    pub log_residual: f64,
    pub energy_log: f64,
    pub decay: Option<CertResult>,
    pub warm_started: bool,
    pub u: RadialFunction,
}

#[derive(Debug, Clone)]
pub struct ContinuationTrace {
    pub steps: Vec<ContinuationStep>,
    /// whole schedule processed and the final solution is nontrivial
    pub completed: bool,
    pub notes: Vec<String>,
}

impl ContinuationTrace {
    pub fn final_step(&self) -> Option<&ContinuationStep> {
        self.steps.last()
    }

    /// The H¹ increment is nonincreasing over the last `window` steps.
    pub fn dh1_eventually_decreasing(&self, window: usize) -> bool {
        let d: Vec<f64> = self.steps.iter().skip(1).map(|s| s.dh1).collect();
        if d.len() < window {
            return false;
        }
        d[d.len() - window..].windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9))
    }

    /// Every recorded level sits inside `(lo, hi)`.
    pub fn levels_within(&self, lo: f64, hi: f64) -> bool {
        self.steps.iter().all(|s| s.c_level > lo && s.c_level < hi)
    }
}

/// `α_k = α₀ · 2^{-k}`, `k = 0..steps`.
pub fn geometric_schedule(alpha0: f64, steps: usize) -> Vec<f64> {
    (0..steps).map(|k| alpha0 * 0.5f64.powi(k as i32)).collect()
}

/// Runs the α-continuation. The schedule must be nonempty, strictly
/// decreasing, inside (0, 1).
pub fn run_continuation(
    nl: &Nonlinearity,
    grid: Arc<RadialGrid>,
    schedule: &[f64],
    opts: &ContinuationOptions,
) -> Result<ContinuationTrace> {
    if schedule.is_empty() {
        return Err(ChoquardError::Config {
            key: "continuation.schedule".into(),
            message: "schedule must not be empty".into(),
        });
    }
    for w in schedule.windows(2) {
        if !(w[1] < w[0]) {
            return Err(ChoquardError::Config {
                key: "continuation.schedule".into(),
                message: format!("schedule must be strictly decreasing ({} then {})", w[0], w[1]),
            });
        }
    }
    if schedule.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
        return Err(ChoquardError::Config {
            key: "continuation.schedule".into(),
            message: "every alpha must lie in (0, 1)".into(),
        });
    }

    let log_op = ConvolutionOperator::load_or_build(
        grid.clone(),
        KernelSpec::log(),
        opts.cache_dir.as_deref(),
        opts.max_operator_n,
    )?;
    let form = H1Form::new(grid.clone())?;
    let decay_from = if opts.decay_fit_from > 0.0 { opts.decay_fit_from } else { grid.r_max() / 4.0 };

    let mut steps: Vec<ContinuationStep> = Vec::with_capacity(schedule.len());
    let mut notes = Vec::new();
    let mut completed = true;

    for (k, &alpha) in schedule.iter().enumerate() {
        let op = ConvolutionOperator::load_or_build(
            grid.clone(),
            KernelSpec::riesz(alpha)?,
            opts.cache_dir.as_deref(),
            opts.max_operator_n,
        )?;
        let solved = match steps.last() {
            None => mountain_pass(nl, &op, &opts.solve),
            Some(prev) => solve_warm_started(nl, &op, &prev.u, &opts.solve),
        };
        let result = match solved {
            Ok(r) => r,
            Err(e) => {
                notes.push(format!("step {k} (alpha = {alpha}): solve failed: {e}"));
                completed = false;
                break;
            }
        };
        if !result.converged {
            notes.push(format!(
                "step {k} (alpha = {alpha}): not converged (residual {})",
                result.residual
            ));
            completed = false;
            break;
        }
        let norm = result.u_star.h1_norm();
        if norm < 10.0 * opts.solve.tol {
            notes.push(format!(
                "step {k} (alpha = {alpha}): trivial-limit failure, ‖u‖ = {norm}"
            ));
            completed = false;
            break;
        }

        let dh1 = match steps.last() {
            None => 0.0,
            Some(prev) => {
                let diff: Vec<f64> = result
                    .u_star
                    .samples()
                    .iter()
                    .zip(prev.u.samples())
                    .map(|(a, b)| a - b)
                    .collect();
                form.quadratic(&diff).max(0.0).sqrt()
            }
        };
        let log_res = log_residual(&result.u_star, nl, &log_op)?;
        let e_log = energy_log(&result.u_star, nl, &log_op)?;
        let decay = if alpha <= opts.decay_alpha_max {
            Some(decay_certificate(&result.u_star, decay_from)?)
        } else {
            None
        };
        steps.push(ContinuationStep {
            alpha,
            c_level: result.c_level,
            residual: result.residual,
            dh1,
            log_residual: log_res,
            energy_log: e_log,
            decay,
            warm_started: k > 0,
            u: result.u_star,
        });
    }

    if completed && steps.len() != schedule.len() {
        completed = false;
    }
    Ok(ContinuationTrace { steps, completed, notes })
}

/// Weighted ℓ² residual of the limiting log-kernel equation
/// `(-Δ_r + 1)u = (ln(1/|·|) ∗ F(u)) f(u)` at `u`.
pub fn log_residual(u: &RadialFunction, nl: &Nonlinearity, op_log: &ConvolutionOperator) -> Result<f64> {
    if op_log.spec() != KernelSpec::Log {
        return Err(ChoquardError::InvalidKernel("log residual needs the log operator".into()));
    }
    u.check_grid(op_log.grid())?;
    let grid = op_log.grid().clone();
    let form = H1Form::new(grid.clone())?;
    let fu = nl.big_f_samples(u.samples())?;
    let conv = op_log.apply(&fu);
    let fv = nl.f_samples(u.samples())?;
    let mu = form.apply(u.samples());
    let w = grid.weights();
    let mut acc = 0.0;
    for i in 0..grid.len() {
        let g = mu[i] / w[i] - conv[i] * fv[i];
        acc += w[i] * g * g;
    }
    Ok(acc.max(0.0).sqrt())
}

/// Kernel tail bounds used in the limit passage, checked on a separation
/// mesh: for `s >= 1`, `|G_α(s)| = s^{-τ(s)α} ln s <= ln s <= s` with the
/// implied `τ(s) ∈ (0, 1)`; for `s <= 1` the empirical constant in
/// `G_α(s) <= C s^{-4(ω-1)/(3ω)}` is finite. Also verifies that `α` sits
/// inside the admissible interval `(0, 4(ω-1)/(3ω))`.
pub fn tail_kernel_bound_check(alpha: f64, omega: f64, mesh: &[f64]) -> Result<CertResult> {
    if !(omega > 1.0) {
        return Err(ChoquardError::Config {
            key: "continuation.omega".into(),
            message: format!("omega = {omega} must exceed 1"),
        });
    }
    let admissible_hi = 4.0 * (omega - 1.0) / (3.0 * omega);
    let exponent = admissible_hi;
    let mut max_abs_vs_log = f64::NEG_INFINITY;
    let mut max_abs_vs_s = f64::NEG_INFINITY;
    let mut tau_ok = true;
    let mut c_small = f64::NEG_INFINITY;
    for &s in mesh.iter().filter(|&&s| s > 0.0) {
        let g = g_alpha(s, alpha)?;
        if s > 1.0 {
            max_abs_vs_log = max_abs_vs_log.max(g.abs() - s.ln());
            max_abs_vs_s = max_abs_vs_s.max(g.abs() - s);
            // G_α(s) = -s^{-τα} ln s  =>  τ = -ln[(1-s^{-α})/(α ln s)]/(α ln s)
            let tau = -((1.0 - s.powf(-alpha)) / (alpha * s.ln())).ln() / (alpha * s.ln());
            if !(tau > 0.0 && tau < 1.0) {
                tau_ok = false;
            }
        } else if s < 1.0 {
            c_small = c_small.max(g * s.powf(exponent));
        }
    }
    Ok(CertResult::new("kernel_tail_bounds")
        .detail("alpha", alpha)
        .detail("omega", omega)
        .detail("admissible_upper", admissible_hi)
        .detail("max_G_minus_log", max_abs_vs_log)
        .detail("max_G_minus_s", max_abs_vs_s)
        .detail("small_s_constant", c_small)
        .require(alpha < admissible_hi, "alpha inside (0, 4(omega-1)/(3 omega))")
        .require(max_abs_vs_log <= 1e-12, "|G_alpha(s)| <= ln s for s >= 1")
        .require(max_abs_vs_s <= 1e-12, "|G_alpha(s)| <= s for s >= 1")
        .require(tau_ok, "implied tau(s) in (0, 1)")
        .require(c_small.is_finite(), "finite small-separation constant"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn schedule_shapes() {
        let s = geometric_schedule(0.5, 9);
        assert_eq!(s.len(), 9);
        assert_relative_eq!(s[0], 0.5);
        assert_relative_eq!(s[8], 0.5 / 256.0);
        assert!(s.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn empty_or_bad_schedules_rejected() {
        let nl = Nonlinearity::power(1.0, 4.0).unwrap();
        let grid = Arc::new(RadialGrid::new(64, 8.0, 1.05, 0.25).unwrap());
        let opts = ContinuationOptions::default();
        assert!(run_continuation(&nl, grid.clone(), &[], &opts).is_err());
        assert!(run_continuation(&nl, grid.clone(), &[0.2, 0.3], &opts).is_err());
        assert!(run_continuation(&nl, grid, &[0.5, 1.2], &opts).is_err());
    }

    #[test]
    fn single_entry_schedule_equals_plain_solve() {
        let nl = Nonlinearity::power(1.0, 4.0).unwrap();
        let grid = Arc::new(RadialGrid::new(128, 12.0, 1.05, 0.25).unwrap());
        let opts = ContinuationOptions::default();
        let trace = run_continuation(&nl, grid.clone(), &[0.5], &opts).unwrap();
        assert!(trace.completed, "{:?}", trace.notes);
        assert_eq!(trace.steps.len(), 1);
        let op = ConvolutionOperator::build(grid, KernelSpec::riesz(0.5).unwrap()).unwrap();
        let direct = mountain_pass(&nl, &op, &opts.solve).unwrap();
        assert_relative_eq!(trace.steps[0].c_level, direct.c_level, max_relative = 1e-6);
    }

    #[test]
    fn short_continuation_power_family() {
        let nl = Nonlinearity::power(1.0, 4.0).unwrap();
        let grid = Arc::new(RadialGrid::new(128, 12.0, 1.05, 0.25).unwrap());
        let opts = ContinuationOptions::default();
        let trace = run_continuation(&nl, grid, &[0.5, 0.25, 0.125], &opts).unwrap();
        assert!(trace.completed, "{:?}", trace.notes);
        assert_eq!(trace.steps.len(), 3);
        assert!(trace.steps.iter().all(|s| s.residual <= opts.solve.tol));
        assert!(trace.steps[1].warm_started);
        // log residual must shrink as alpha does
        let lr: Vec<f64> = trace.steps.iter().map(|s| s.log_residual).collect();
        assert!(lr[2] < lr[0], "log residual did not improve: {lr:?}");
    }

    #[test]
    fn log_residual_zero_for_zero_function() {
        let nl = Nonlinearity::power(1.0, 4.0).unwrap();
        let grid = Arc::new(RadialGrid::new(96, 8.0, 1.05, 0.25).unwrap());
        let op = ConvolutionOperator::build(grid.clone(), KernelSpec::log()).unwrap();
        let z = RadialFunction::zero(grid);
        assert_eq!(log_residual(&z, &nl, &op).unwrap(), 0.0);
    }

    #[test]
    fn tail_bounds_certificate() {
        let mesh: Vec<f64> = (1..=4000).map(|i| i as f64 * 0.01).collect();
        let cert = tail_kernel_bound_check(0.02, 1.05, &mesh).unwrap();
        assert!(cert.passed, "{:?}", cert.notes);
        assert_relative_eq!(
            cert.get("admissible_upper").unwrap(),
            0.063492063492063,
            max_relative = 1e-12
        );
        // alpha outside the admissible interval fails the first clause
        let cert = tail_kernel_bound_check(0.1, 1.05, &mesh).unwrap();
        assert!(!cert.passed);
    }
}
