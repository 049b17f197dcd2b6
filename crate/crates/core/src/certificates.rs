//! Numerical certificates for the closed-form objects and inequalities
//! behind the mountain-pass level analysis: logarithmic cap profiles with
//! exact H¹ norms, the level majorant that pins the minimax value below
//! 1/2, the radial decay bound, and the Hardy-Littlewood-Sobolev quotient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;

use crate::energy::AlphaEnergy;
use crate::grid::{RadialFunction, RadialGrid};
use crate::kernel::{ConvolutionOperator, KernelSpec};
use crate::laplacian::H1Form;
use crate::nonlinearity::{f4_threshold, Nonlinearity};
use crate::report::CertResult;
use crate::{ChoquardError, Result};

/// Logarithmic cap profile supported in `B_ρ`:
///
/// ```text
///   w_n(r) = (2π)^{-1/2} · { sqrt(ln n)              0 <= r <= ρ/n,
///                            ln(ρ/r)/sqrt(ln n)      ρ/n <= r <= ρ,
///                            0                       r >= ρ }
/// ```
///
/// Its gradient part integrates to exactly 1 and the full squared H¹ norm
/// is `1 + ρ² δ_n` with `δ_n = 1/(4 ln n) - 1/(4 n² ln n) - 1/(2 n²)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MoserConfig {
    pub n: u32,
    pub rho: f64,
}

impl MoserConfig {
    pub fn new(n: u32, rho: f64) -> Result<Self> {
        if n < 2 {
            return Err(ChoquardError::Config {
                key: "moser.n".into(),
                message: format!("index must be >= 2, got {n}"),
            });
        }
        if !(rho > 0.0 && rho < 0.25) {
            return Err(ChoquardError::Config {
                key: "moser.rho".into(),
                message: format!("rho = {rho} must lie in (0, 1/4)"),
            });
        }
        Ok(Self { n, rho })
    }

    /// `δ_n` as printed in the norm identity.
    pub fn delta(&self) -> f64 {
        let n = self.n as f64;
        let ln_n = n.ln();
        1.0 / (4.0 * ln_n) - 1.0 / (4.0 * n * n * ln_n) - 1.0 / (2.0 * n * n)
    }

    /// Closed-form `‖w_n‖² = 1 + ρ² δ_n`.
    pub fn norm_sq_closed(&self) -> f64 {
        1.0 + self.rho * self.rho * self.delta()
    }

    /// Peak value `w_n(0) = sqrt(ln n / 2π)`.
    pub fn peak(&self) -> f64 {
        ((self.n as f64).ln() / (2.0 * std::f64::consts::PI)).sqrt()
    }
}

/// Samples `w_n` on `grid` with the kink radii `ρ/n` and `ρ` inserted as
/// nodes, attaching exact derivative samples. At a kink the attached value
/// is the root-mean-square of the one-sided slopes, which makes the
/// trapezoidal quadrature of `|∇w_n|²` exact for the locally constant
/// one-sided limits. Returns the function on the augmented grid.
pub fn moser_w(cfg: &MoserConfig, grid: &RadialGrid) -> Result<RadialFunction> {
    let rho = cfg.rho;
    let r_inner = rho / cfg.n as f64;
    if grid.r_max() <= rho {
        return Err(ChoquardError::InvalidGrid(format!(
            "grid R_max = {} does not contain the support radius {rho}",
            grid.r_max()
        )));
    }
    let grid = Arc::new(grid.with_nodes_inserted(&[r_inner, rho])?);
    if grid.nodes_below(r_inner) < 32 {
        return Err(ChoquardError::InvalidGrid(format!(
            "grid does not resolve the cap core: {} nodes in (0, {r_inner}]",
            grid.nodes_below(r_inner)
        )));
    }

    let ln_n = (cfg.n as f64).ln();
    let c = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let value = |r: f64| -> f64 {
        if r <= r_inner {
            c * ln_n.sqrt()
        } else if r < rho {
            c * (rho / r).ln() / ln_n.sqrt()
        } else {
            0.0
        }
    };
    let slope_mid = |r: f64| -> f64 { -c / (r * ln_n.sqrt()) };

    // At a kink the attached |derivative|² is the t-cell-weighted mean of
    // the one-sided slope squares, which makes the trapezoidal quadrature
    // of |∇w_n|² exact for the locally constant one-sided limits even when
    // node insertion left uneven neighbor cells.
    let nodes = grid.nodes();
    let cell_weighted = |k: usize, g_left: f64, g_right: f64| -> f64 {
        let t = |i: usize| nodes[i] * nodes[i];
        let m_a = t(k) - t(k.saturating_sub(1));
        let m_b = if k + 1 < nodes.len() { t(k + 1) - t(k) } else { m_a };
        -(((m_a * g_left + m_b * g_right) / (m_a + m_b)).max(0.0)).sqrt()
    };

    let mut samples = Vec::with_capacity(grid.len());
    let mut deriv = Vec::with_capacity(grid.len());
    for (k, &r) in nodes.iter().enumerate() {
        samples.push(value(r));
        let d = if (r - r_inner).abs() <= 1e-15 * rho {
            let s = slope_mid(r);
            cell_weighted(k, 0.0, s * s)
        } else if (r - rho).abs() <= 1e-15 * rho {
            let s = slope_mid(r);
            cell_weighted(k, s * s, 0.0)
        } else if r > r_inner && r < rho {
            slope_mid(r)
        } else {
            0.0
        };
        deriv.push(d);
    }
    RadialFunction::from_samples(grid.clone(), samples)?.with_derivative(deriv)
}

/// Graded grid tuned for cap-profile certificates: core refinement at
/// `core_cut = ρ` deep enough to resolve `ρ/n` for indices up to ~10³.
pub fn moser_grid(n_nodes: usize, rho: f64) -> Result<RadialGrid> {
    let grade = 1.0 + 26.0 / n_nodes as f64;
    RadialGrid::new(n_nodes, 2.5 * rho, grade, rho)
}

/// Quadrature-vs-closed-form check of the norm identity for one index.
pub fn moser_norm_certificate(cfg: &MoserConfig, grid: &RadialGrid) -> Result<CertResult> {
    let w = moser_w(cfg, grid)?;
    let quad = w.h1_norm().powi(2);
    let closed = cfg.norm_sq_closed();
    let rel = (quad - closed).abs() / closed;
    Ok(CertResult::new("moser_norm")
        .detail("n", cfg.n as f64)
        .detail("rho", cfg.rho)
        .detail("quadrature_norm_sq", quad)
        .detail("closed_form_norm_sq", closed)
        .detail("relative_error", rel)
        .require(rel <= 1e-4, "quadrature matches 1 + rho^2 delta_n within 1e-4"))
}

/// `ψ_n(t) = (1 + δ_n ρ²) t²/2 - n^{4(t²-1)}/(2 ln n)` — the analytic
/// majorant of the level curve on the middle window.
pub fn psi_majorant(cfg: &MoserConfig, t: f64) -> f64 {
    let ln_n = (cfg.n as f64).ln();
    let d = cfg.delta();
    (1.0 + d * cfg.rho * cfg.rho) * t * t / 2.0 - (4.0 * (t * t - 1.0) * ln_n).exp() / (2.0 * ln_n)
}

/// Maximizer of `ψ_n`: `t_n² = 1 + (ln(1+ρ²δ_n) - ln 4)/(4 ln n)`.
pub fn psi_maximizer_sq(cfg: &MoserConfig) -> f64 {
    let ln_n = (cfg.n as f64).ln();
    let d = cfg.delta();
    1.0 + ((1.0 + cfg.rho * cfg.rho * d).ln() - 4.0f64.ln()) / (4.0 * ln_n)
}

/// `ψ_n(t_n)` in the simplified closed form `(1+δρ²)(t_n²/2 - 1/(8 ln n))`.
pub fn psi_peak(cfg: &MoserConfig) -> f64 {
    let ln_n = (cfg.n as f64).ln();
    let d = cfg.delta();
    (1.0 + d * cfg.rho * cfg.rho) * (psi_maximizer_sq(cfg) / 2.0 - 1.0 / (8.0 * ln_n))
}

/// Case-2 comparison function `g(n,t) = n^{4(t²-1)}/(t⁴ ln n)`.
pub fn case2_g(n: u32, t: f64) -> f64 {
    let ln_n = (n as f64).ln();
    (4.0 * (t * t - 1.0) * ln_n).exp() / (t.powi(4) * ln_n)
}

/// Full level certificate for one cap index: the measured curve
/// `t ↦ I_α(t w_n)`, its analytic majorant where that applies, and the
/// `< 1/2` verdicts.
#[derive(Debug, Clone, Serialize)]
pub struct LevelCertificate {
    pub n: u32,
    pub rho: f64,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub t_mesh: Vec<f64>,
    pub levels: Vec<f64>,
    pub max_level: f64,
    pub max_level_t: f64,
    /// first mesh t with a negative level
    pub t_negative: Option<f64>,
    pub t_n: f64,
    pub psi_at_t_n: f64,
    /// smallest index from which the psi peak stays below 1/2
    pub n_min_psi: Option<u32>,
    /// smallest index with g(n, t) >= 1 for all meshed t >= sqrt 2
    pub case2_n0: Option<u32>,
    /// threshold t above which the pointwise majorant hypothesis
    /// `t w_n(0) >= t_eps` holds
    pub majorant_from_t: f64,
    /// worst (level - majorant) over the applicable middle window
    pub majorant_violation: f64,
    pub verdict_below_half: bool,
    pub verdict_psi_below_half: bool,
    pub verdict_majorant: bool,
    pub notes: Vec<String>,
}

impl LevelCertificate {
    pub fn passed(&self) -> bool {
        self.verdict_below_half && self.verdict_psi_below_half && self.verdict_majorant
    }
}

/// Runs the level certificate. The nonlinearity's declared `β` must clear
/// the `(f4)` threshold for the configured `ρ`; `ε` is set to half the
/// gap. The mesh is extended automatically until the level goes negative
/// (or the nonlinearity domain ends, which is reported).
pub fn level_certificate(
    cfg: &MoserConfig,
    nl: &Nonlinearity,
    alpha: f64,
    grid: &RadialGrid,
    t_mesh: &[f64],
) -> Result<LevelCertificate> {
    let threshold = f4_threshold(cfg.rho);
    if nl.beta() <= threshold {
        return Err(ChoquardError::InvalidNonlinearity(format!(
            "declared beta = {} does not clear the (f4) threshold {threshold}",
            nl.beta()
        )));
    }
    let epsilon = 0.5 * (nl.beta() - threshold);
    let beta_eff = nl.beta() - epsilon;

    let w = moser_w(cfg, grid)?;
    let wgrid = w.grid().clone();
    let op = ConvolutionOperator::build(wgrid.clone(), KernelSpec::riesz(alpha)?)?;
    let form = H1Form::new(wgrid.clone())?;
    let energy = AlphaEnergy::new(nl, &op, &form)?;

    let mut notes = Vec::new();

    // t_eps: smallest t where t F(t) >= beta_eff e^{4π t²} (log-space scan
    // plus bisection; the compliant families have a monotone tail)
    let t_eps = {
        let crit = |t: f64| -> f64 {
            match nl.big_f(t) {
                Ok(fv) if fv > 0.0 => {
                    t.ln() + fv.ln() - 4.0 * std::f64::consts::PI * t * t - beta_eff.ln()
                }
                _ => f64::NEG_INFINITY,
            }
        };
        let mut lo = 1e-3;
        let mut hi = nl.domain_max() * 0.999;
        if crit(hi) < 0.0 {
            notes.push("growth never reaches beta - epsilon inside the domain".into());
            f64::INFINITY
        } else {
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if crit(mid) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        }
    };
    let majorant_from_t = t_eps / cfg.peak();

    // evaluate the level curve, extending past the mesh until negative
    let mut ts: Vec<f64> = t_mesh.iter().copied().filter(|&t| t >= 0.0).collect();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();
    let t_cap = 0.999 * nl.domain_max() / cfg.peak();
    let step = ts
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
        .max(1e-3);
    let mut levels = Vec::with_capacity(ts.len());
    let mut i = 0;
    let mut t_negative = None;
    while i < ts.len() {
        let t = ts[i];
        let scaled: Vec<f64> = w.samples().iter().map(|v| t * v).collect();
        let level = match energy.energy(&scaled) {
            Ok(v) => v,
            Err(ChoquardError::Range { .. }) => {
                notes.push(format!("mesh shrunk: range error at t = {t}"));
                ts.truncate(i);
                break;
            }
            Err(e) => return Err(e),
        };
        levels.push(level);
        if level < 0.0 && t_negative.is_none() {
            t_negative = Some(t);
        }
        // extend until the curve crosses zero
        if i == ts.len() - 1 && t_negative.is_none() && t + step <= t_cap {
            ts.push(t + step);
        }
        i += 1;
    }
    if t_negative.is_none() {
        notes.push("level curve never went negative inside the evaluable range".into());
    }

    let (max_level, max_level_t) = levels
        .iter()
        .zip(&ts)
        .fold((f64::NEG_INFINITY, 0.0), |acc, (&l, &t)| if l > acc.0 { (l, t) } else { acc });

    // psi verdicts
    let t_n = psi_maximizer_sq(cfg).max(0.0).sqrt();
    let psi_at_t_n = psi_peak(cfg);
    let n_min_psi = {
        let mut found = None;
        for n in 2..=4000u32 {
            let c = MoserConfig { n, rho: cfg.rho };
            if psi_peak(&c) < 0.5 {
                found = Some(n);
                break;
            }
        }
        // spot-check the tail so "from n on" is meaningful
        if let Some(n0) = found {
            let tail_ok = [1e4f64, 1e5, 1e6, 1e8]
                .iter()
                .all(|&nf| psi_peak(&MoserConfig { n: nf as u32, rho: cfg.rho }) < 0.5);
            if !tail_ok {
                notes.push("psi peak re-enters above 1/2 at large n".into());
                found = None;
            }
            let _ = n0;
        }
        found
    };

    // case-2 comparison: smallest n with g(n, t) >= 1 on the meshed t >= sqrt 2
    let case2_n0 = {
        let tail: Vec<f64> = ts
            .iter()
            .copied()
            .filter(|&t| t >= std::f64::consts::SQRT_2)
            .collect();
        let ok = |n: u32| tail.iter().all(|&t| case2_g(n, t) >= 1.0);
        (2..=64u32).find(|&n| ok(n))
    };

    // pointwise majorant on the applicable middle window, requiring the
    //-1/2-power product (ln 2) π³ (β-ε)² ρ⁴ >= 1 that the reduction uses
    let product = std::f64::consts::LN_2
        * std::f64::consts::PI.powi(3)
        * beta_eff
        * beta_eff
        * cfg.rho.powi(4);
    if product < 1.0 {
        notes.push(format!("majorant product {product} < 1; psi reduction not valid"));
    }
    let ln_n = (cfg.n as f64).ln();
    let d = cfg.delta();
    let window_lo = (0.5f64).sqrt().max(majorant_from_t);
    let mut majorant_violation = f64::NEG_INFINITY;
    let mut window_nonempty = false;
    for (&t, &level) in ts.iter().zip(&levels) {
        if t < window_lo || t > std::f64::consts::SQRT_2 {
            continue;
        }
        window_nonempty = true;
        let majorant = (1.0 + d * cfg.rho * cfg.rho) * t * t / 2.0
            - product * (4.0 * (t * t - 1.0) * ln_n).exp() / (t * t * ln_n);
        majorant_violation = majorant_violation.max(level - majorant);
    }
    if !window_nonempty {
        notes.push(format!(
            "majorant window empty: applies from t = {majorant_from_t:.3} at this n"
        ));
        majorant_violation = 0.0;
    }

    let verdict_below_half = max_level < 0.5 && !levels.is_empty();
    let verdict_psi_below_half = psi_at_t_n < 0.5 && n_min_psi.map_or(false, |n0| cfg.n >= n0);
    let verdict_majorant = majorant_violation <= 1e-9 && product >= 1.0;

    Ok(LevelCertificate {
        n: cfg.n,
        rho: cfg.rho,
        alpha,
        beta: nl.beta(),
        epsilon,
        t_mesh: ts,
        levels,
        max_level,
        max_level_t,
        t_negative,
        t_n,
        psi_at_t_n,
        n_min_psi,
        case2_n0,
        majorant_from_t,
        majorant_violation,
        verdict_below_half,
        verdict_psi_below_half,
        verdict_majorant,
        notes,
    })
}

/// Empirical radial bound `|u(r)| <= C r^{-1/2} ‖u‖` for `r >= 1`: the
/// observed constant is logged for regression, finiteness is the verdict.
pub fn radial_bound_check(u: &RadialFunction) -> Result<CertResult> {
    let norm = u.h1_norm();
    if norm == 0.0 {
        return Err(ChoquardError::Solver("radial bound check needs u != 0".into()));
    }
    let mut sup = 0.0f64;
    let mut witness = f64::NAN;
    for (&r, &v) in u.grid().nodes().iter().zip(u.samples()) {
        if r >= 1.0 {
            let q = v.abs() * r.sqrt() / norm;
            if q > sup {
                sup = q;
                witness = r;
            }
        }
    }
    Ok(CertResult::new("radial_bound")
        .detail("sup_constant", sup)
        .detail("witness_r", witness)
        .detail("h1_norm", norm)
        .require(sup.is_finite(), "empirical radial constant is finite"))
}

/// Least-squares fit of `ln u ≈ ln M - rate · r` on `[r_fit, R_max/2]`;
/// passes when the fitted rate reaches `0.45` and the tail sits below
/// `1.05 · M e^{-r/2}` pointwise. A nonpositive tail yields a
/// not-applicable verdict.
pub fn decay_certificate(u: &RadialFunction, r_fit: f64) -> Result<CertResult> {
    let r_hi = u.grid().r_max() / 2.0;
    if !(r_fit > 0.0 && r_fit < r_hi) {
        return Err(ChoquardError::Config {
            key: "decay.r_fit".into(),
            message: format!("fit window start {r_fit} must lie in (0, R_max/2)"),
        });
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut applicable = true;
    for (&r, &v) in u.grid().nodes().iter().zip(u.samples()) {
        if r >= r_fit && r <= r_hi {
            if v <= 0.0 {
                applicable = false;
                break;
            }
            xs.push(r);
            ys.push(v.ln());
        }
    }
    if !applicable || xs.len() < 4 {
        return Ok(CertResult::new("decay")
            .detail("applicable", 0.0)
            .note("not applicable: nonpositive or empty tail in the fit window")
            .require(false, "tail must be positive on the fit window"));
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let det = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy * sxx - sx * sxy) / det;
    let rate = -slope;
    let m_fit = intercept.exp();

    let mut pointwise_ok = true;
    for (&r, &v) in u.grid().nodes().iter().zip(u.samples()) {
        if r >= r_fit && r <= r_hi && v > 1.05 * m_fit * (-0.5 * r).exp() {
            pointwise_ok = false;
            break;
        }
    }
    Ok(CertResult::new("decay")
        .detail("applicable", 1.0)
        .detail("m_fit", m_fit)
        .detail("rate", rate)
        .detail("window_lo", r_fit)
        .detail("window_hi", r_hi)
        .require(rate >= 0.45, "fitted decay rate >= 1/2 - 0.05")
        .require(pointwise_ok, "u(r) <= 1.05 M_fit e^{-r/2} on the window"))
}

/// Seeded random nonnegative radial profile: a sum of Gaussian bumps.
fn random_profile(grid: &Arc<RadialGrid>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let bumps = rng.gen_range(1..=3);
    let params: Vec<(f64, f64, f64)> = (0..bumps)
        .map(|_| {
            (
                rng.gen_range(0.2..1.0),
                rng.gen_range(0.0..0.35) * grid.r_max(),
                rng.gen_range(0.2..1.2),
            )
        })
        .collect();
    grid.nodes()
        .iter()
        .map(|&r| {
            params
                .iter()
                .map(|(a, c, s)| a * (-((r - c) / s).powi(2)).exp())
                .sum()
        })
        .collect()
}

/// Hardy-Littlewood-Sobolev quotient sweep: over seeded random profile
/// pairs, the discrete `∬ g h /|x-y|^α` against `‖g‖‖h‖` in
/// `L^{4/(4-α)}` never exceeds `2 sqrt(π)` (up to quadrature slack).
pub fn hls_certificate(
    alpha: f64,
    trials: usize,
    seed: u64,
    op: &ConvolutionOperator,
) -> Result<CertResult> {
    if op.spec().alpha() != Some(alpha) {
        return Err(ChoquardError::InvalidKernel(
            "HLS certificate operator must match the requested alpha".into(),
        ));
    }
    let grid = op.grid().clone();
    let p = 4.0 / (4.0 - alpha);
    let bound = 2.0 * std::f64::consts::PI.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_q = 0.0f64;
    let mut max_trial = 0usize;
    for trial in 0..trials {
        let g = random_profile(&grid, &mut rng);
        let h = random_profile(&grid, &mut rng);
        let gn = RadialFunction::from_samples(grid.clone(), g.clone())?.lp_norm(p)?;
        let hn = RadialFunction::from_samples(grid.clone(), h.clone())?.lp_norm(p)?;
        if gn == 0.0 || hn == 0.0 {
            continue;
        }
        let q = op.bilinear(&g, &h) / (gn * hn);
        if q > max_q {
            max_q = q;
            max_trial = trial;
        }
    }
    Ok(CertResult::new("hls_quotient")
        .detail("alpha", alpha)
        .detail("trials", trials as f64)
        .detail("seed", seed as f64)
        .detail("max_quotient", max_q)
        .detail("bound", bound)
        .detail("worst_trial", max_trial as f64)
        .require(max_q <= bound * 1.001, "discrete HLS quotient <= 2 sqrt(pi)"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn delta_and_norm_closed_forms() {
        // frozen scalar-oracle values at rho = 0.2
        let c10 = MoserConfig::new(10, 0.2).unwrap();
        assert_relative_eq!(c10.delta(), 0.10248788427105483, max_relative = 1e-14);
        assert_relative_eq!(c10.norm_sq_closed(), 1.0040995153708422, max_relative = 1e-14);
        assert_relative_eq!(c10.peak(), 0.6053658393399101, max_relative = 1e-14);
        // delta -> 0 monotically in the limit
        let big = MoserConfig::new(1_000_000, 0.2).unwrap();
        assert!(big.delta() < 2e-2);
        assert_relative_eq!(big.norm_sq_closed(), 1.0, epsilon = 1e-3);
    }

    #[test]
    fn config_validation() {
        assert!(MoserConfig::new(1, 0.2).is_err());
        assert!(MoserConfig::new(10, 0.25).is_err());
        assert!(MoserConfig::new(10, -0.1).is_err());
    }

    #[test]
    fn moser_profile_shape() {
        let cfg = MoserConfig::new(10, 0.2).unwrap();
        let grid = moser_grid(4000, 0.2).unwrap();
        let w = moser_w(&cfg, &grid).unwrap();
        let g = w.grid();
        // peak value at 0 and constant through the core
        assert_relative_eq!(w.samples()[0], cfg.peak(), max_relative = 1e-14);
        // continuity at rho/n: the two formulas agree there
        let i = g.nodes().iter().position(|&r| (r - 0.02).abs() < 1e-12).unwrap();
        assert_relative_eq!(w.samples()[i], cfg.peak(), max_relative = 1e-12);
        // support ends at rho
        for (&r, &v) in g.nodes().iter().zip(w.samples()) {
            if r >= 0.2 {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn moser_norm_matches_closed_form_on_certificate_grid() {
        let grid = moser_grid(6000, 0.2).unwrap();
        for n in [10u32, 100, 1000] {
            let cfg = MoserConfig::new(n, 0.2).unwrap();
            let cert = moser_norm_certificate(&cfg, &grid).unwrap();
            assert!(
                cert.passed,
                "n = {n}: rel err {:?}",
                cert.get("relative_error")
            );
        }
    }

    #[test]
    fn unresolvable_grid_is_rejected() {
        let cfg = MoserConfig::new(1000, 0.2).unwrap();
        let coarse = RadialGrid::uniform(64, 1.0).unwrap();
        assert!(moser_w(&cfg, &coarse).is_err());
    }

    #[test]
    fn psi_formulas() {
        // frozen oracle: t_100² at rho = 0.2
        let cfg = MoserConfig::new(100, 0.2).unwrap();
        assert_relative_eq!(psi_maximizer_sq(&cfg), 0.9248601354893381, max_relative = 1e-13);
        // t_n in [sqrt(1/2), sqrt 2] and psi peak below 1/2 for a spread of n
        for n in [5u32, 20, 100, 1000, 100000] {
            let c = MoserConfig::new(n, 0.2).unwrap();
            let tn = psi_maximizer_sq(&c).sqrt();
            assert!(tn >= 0.5f64.sqrt() - 1e-9 && tn <= 2.0f64.sqrt() + 1e-9, "t_n = {tn} at n = {n}");
            assert!(psi_peak(&c) < 0.5, "psi peak {} at n = {n}", psi_peak(&c));
        }
    }

    #[test]
    fn case2_g_exceeds_one_quickly() {
        for n in 2..=20u32 {
            assert!(case2_g(n, 2.0f64.sqrt()) >= 1.0, "g({n}, sqrt2) < 1");
        }
        // increasing in t beyond sqrt 2
        assert!(case2_g(3, 1.6) > case2_g(3, 2.0f64.sqrt()));
    }

    #[test]
    fn level_certificate_small_run() {
        let cfg = MoserConfig::new(20, 0.2).unwrap();
        let nl = Nonlinearity::exp_critical(10.0).unwrap();
        let grid = moser_grid(900, 0.2).unwrap();
        let mesh: Vec<f64> = (0..=40).map(|i| i as f64 * 0.05).collect();
        let cert = level_certificate(&cfg, &nl, 0.3, &grid, &mesh).unwrap();
        assert!(cert.verdict_below_half, "max level {}", cert.max_level);
        assert!(cert.t_negative.is_some());
        assert!(cert.verdict_psi_below_half, "n_min {:?}", cert.n_min_psi);
        assert!(cert.verdict_majorant, "violation {}", cert.majorant_violation);
        assert!(cert.t_n >= 0.5f64.sqrt() && cert.t_n <= 2.0f64.sqrt());
    }

    #[test]
    fn level_certificate_requires_compliant_beta() {
        let cfg = MoserConfig::new(20, 0.2).unwrap();
        // declared beta below the threshold must be refused
        let nl = Nonlinearity::exp_critical(1.0)
            .unwrap()
            .with_declared(0.5, 2.0, 0.2)
            .unwrap();
        let grid = moser_grid(900, 0.2).unwrap();
        assert!(level_certificate(&cfg, &nl, 0.3, &grid, &[0.0, 0.5, 1.0]).is_err());
    }

    #[test]
    fn radial_bound_examples() {
        let grid = Arc::new(RadialGrid::new(2000, 20.0, 1.03, 0.25).unwrap());
        let u = RadialFunction::from_fn(grid.clone(), |r| (-r).exp()).unwrap();
        let cert = radial_bound_check(&u).unwrap();
        assert!(cert.passed);
        // e^{-r} sqrt(r) peaks at r = 1/2, so the sup over r >= 1 sits at 1
        assert_relative_eq!(cert.get("witness_r").unwrap(), 1.0, max_relative = 1e-2);
        assert!(radial_bound_check(&RadialFunction::zero(grid)).is_err());
    }

    #[test]
    fn decay_fit_classifies_rates() {
        let grid = Arc::new(RadialGrid::new(2000, 30.0, 1.03, 0.25).unwrap());
        let fast = RadialFunction::from_fn(grid.clone(), |r| (-r).exp()).unwrap();
        let cert = decay_certificate(&fast, 5.0).unwrap();
        assert!(cert.passed, "{:?}", cert.notes);
        assert_relative_eq!(cert.get("rate").unwrap(), 1.0, max_relative = 1e-6);

        let slow = RadialFunction::from_fn(grid.clone(), |r| (-r / 4.0).exp()).unwrap();
        let cert = decay_certificate(&slow, 5.0).unwrap();
        assert!(!cert.passed);
        assert_relative_eq!(cert.get("rate").unwrap(), 0.25, max_relative = 1e-6);

        let signed = RadialFunction::from_fn(grid, |r| 10.0 - r).unwrap();
        let cert = decay_certificate(&signed, 5.0).unwrap();
        assert_eq!(cert.get("applicable"), Some(0.0));
    }

    #[test]
    fn hls_sweep_small() {
        let grid = Arc::new(RadialGrid::new(220, 10.0, 1.04, 0.25).unwrap());
        let op = ConvolutionOperator::build(grid, KernelSpec::riesz(0.5).unwrap()).unwrap();
        let cert = hls_certificate(0.5, 10, 1234, &op).unwrap();
        assert!(cert.passed, "max quotient {:?}", cert.get("max_quotient"));
        assert!(cert.get("max_quotient").unwrap() > 0.0);
    }
}
