//! Pluggable nonlinearities `(F, f, f')` with a machine-checkable audit of
//! the structural assumptions the solver relies on:
//!
//! * (f1) sign, `f(t) = o(t)` at `0+`, and the exponential growth envelope
//!   `F(t) <= C t^2` near zero / `F(t) <= C t^{p-1} e^{4π t^2}` at infinity;
//! * (f2) `τ <= F f'/f² <= C` with declared `0 < τ < 1 < C`;
//! * (f3) `F f'/f² → 1` at infinity;
//! * (f4) `lim t F(t) e^{-4π t²} >= β > 1/(ρ² √(ln 2) π^{3/2})`;
//! * (f5) `F <= M₀ f` for large `t` (a consequence used by the compactness
//!   diagnostics).
//!
//! Constants `τ, C, β, ρ` are *declared* per family and then *audited* on a
//! mesh, because the analysis treats them as existential.

use serde::Serialize;

use crate::{ChoquardError, Result};

/// `1/(ρ² √(ln 2) π^{3/2})` — the lower threshold that β must exceed in
/// assumption (f4).
pub fn f4_threshold(rho: f64) -> f64 {
    1.0 / (rho * rho * std::f64::consts::LN_2.sqrt() * std::f64::consts::PI.powf(1.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    /// `F(t) = κ t^q`, `q > 2`. Testing family: fails (f3) and (f4).
    Power,
    /// `F(t) = κ t³ e^{a t²}` with `a = 4π` by default; satisfies (f1)-(f4).
    ExpCritical,
    /// `F(t) = κ t² e^{4π t²} / ln(1/ln(1+t))`, only defined on `(0, e-1)`:
    /// the denominator vanishes at `t = e-1` and turns negative beyond.
    PaperExample,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Power => "power",
            Family::ExpCritical => "exp_critical",
            Family::PaperExample => "paper_example",
        }
    }
}

/// A nonlinearity family together with its declared assumption constants.
#[derive(Debug, Clone, Serialize)]
pub struct Nonlinearity {
    family: Family,
    kappa: f64,
    /// power exponent (power family only)
    q: f64,
    /// coefficient of `t²` in the exponential factor
    a: f64,
    tau: f64,
    c_upper: f64,
    beta: f64,
    rho: f64,
    /// polynomial exponent in the (f1) growth envelope
    p: f64,
    /// envelope constant and split points of the two-branch bound
    c_env: f64,
    t_bar: f64,
    t_tilde: f64,
    /// largest t for which evaluation stays finite in f64
    domain_max: f64,
}

const A_CRITICAL: f64 = 4.0 * std::f64::consts::PI;

impl Nonlinearity {
    /// `F(t) = κ t^q`. Requires `q > 2`. Declared `τ = (q-1)/q`; fails the
    /// compactness assumptions (f3)/(f4), which the audit reports.
    pub fn power(kappa: f64, q: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(ChoquardError::InvalidNonlinearity(format!("kappa = {kappa} must be > 0")));
        }
        if !(q.is_finite() && q > 2.0) {
            return Err(ChoquardError::InvalidNonlinearity(format!("power needs q > 2, got {q}")));
        }
        Ok(Self {
            family: Family::Power,
            kappa,
            q,
            a: A_CRITICAL,
            tau: (q - 1.0) / q,
            c_upper: 1.05,
            beta: 1.0,
            rho: 0.2,
            p: q - 1.0,
            c_env: 2.0 * kappa,
            t_bar: 1.0f64.min((1.0 / kappa).powf(1.0 / (q - 2.0))),
            t_tilde: 1.0,
            domain_max: (1e300 / kappa).powf(1.0 / q).min(1e6),
        })
    }

    /// `F(t) = κ t³ e^{4π t²}` — the default compliant family.
    pub fn exp_critical(kappa: f64) -> Result<Self> {
        Self::exp_critical_with_growth(kappa, A_CRITICAL)
    }

    /// Same shape with a custom exponential rate `a`; only `a = 4π` passes
    /// both (f1) and (f4), which the audit makes visible.
    pub fn exp_critical_with_growth(kappa: f64, a: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(ChoquardError::InvalidNonlinearity(format!("kappa = {kappa} must be > 0")));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(ChoquardError::InvalidNonlinearity(format!("a = {a} must be > 0")));
        }
        // ratio F f'/f² = (6 + 14x + 4x²)/(9 + 12x + 4x²), x = a t², which
        // ranges over [2/3, 25/24]
        Ok(Self {
            family: Family::ExpCritical,
            kappa,
            q: 3.0,
            a,
            tau: 2.0 / 3.0,
            c_upper: 25.0 / 24.0 + 1e-9,
            beta: 6.0,
            rho: 0.2,
            p: 4.0,
            c_env: 2.0 * kappa * (0.25 * (a * 0.0625).exp()).max(1.0),
            t_bar: 0.25,
            t_tilde: 1.0,
            domain_max: 7.0f64.min((690.0 / a).sqrt()),
        })
    }

    /// `F(t) = t² e^{4π t²} / ln(1/ln(1+t))` on `(0, e-1)`. The domain
    /// boundary is flagged in the audit; no global extension is attempted.
    pub fn paper_example() -> Result<Self> {
        let singularity = std::f64::consts::E - 1.0;
        Ok(Self {
            family: Family::PaperExample,
            kappa: 1.0,
            q: 2.0,
            a: A_CRITICAL,
            tau: 0.45,
            c_upper: 2.2,
            beta: 6.0,
            rho: 0.2,
            p: 3.0,
            c_env: 2.0,
            t_bar: 0.25,
            t_tilde: 1.0,
            domain_max: singularity,
        })
    }

    /// Overrides the declared constants (they are audited, not trusted).
    pub fn with_declared(mut self, tau: f64, beta: f64, rho: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(ChoquardError::InvalidNonlinearity(format!("tau = {tau} not in (0,1)")));
        }
        if !(beta > 0.0) {
            return Err(ChoquardError::InvalidNonlinearity(format!("beta = {beta} must be > 0")));
        }
        if !(rho > 0.0 && rho < 0.25) {
            return Err(ChoquardError::InvalidNonlinearity(format!("rho = {rho} not in (0, 1/4)")));
        }
        self.tau = tau;
        self.beta = beta;
        self.rho = rho;
        Ok(self)
    }

    pub fn family(&self) -> Family {
        self.family
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn c_upper(&self) -> f64 {
        self.c_upper
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn growth_exponent(&self) -> f64 {
        self.p
    }
    pub fn domain_max(&self) -> f64 {
        self.domain_max
    }

    fn range_check(&self, t: f64) -> Result<()> {
        if t > self.domain_max {
            return Err(ChoquardError::Range { t, domain_max: self.domain_max });
        }
        Ok(())
    }

    /// paper_example pieces: L = ln(1+t), D = -ln L, g = t²/D and its two
    /// derivatives. Only valid for 0 < t < e-1.
    fn pe_parts(&self, t: f64) -> Result<(f64, f64, f64, f64, f64)> {
        let l = t.ln_1p();
        if l >= 1.0 - 1e-12 {
            return Err(ChoquardError::Range { t, domain_max: self.domain_max });
        }
        let d = -l.ln();
        let g = t * t / d;
        let u = 1.0 + t;
        // g'  = 2t/D + t² / ((1+t) L D²)
        let gp = 2.0 * t / d + t * t / (u * l * d * d);
        // g'' = 2/D + 4t/((1+t) L D²) - t² (L D + D - 2) / ((1+t)² L² D³)
        let gpp = 2.0 / d + 4.0 * t / (u * l * d * d)
            - t * t * (l * d + d - 2.0) / (u * u * l * l * d * d * d);
        Ok((l, d, g, gp, gpp))
    }

    /// `F(t)`; zero for `t <= 0`, range error past `domain_max`.
    pub fn big_f(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        self.range_check(t)?;
        let v = match self.family {
            Family::Power => self.kappa * t.powf(self.q),
            Family::ExpCritical => {
                let ln_v = self.kappa.ln() + 3.0 * t.ln() + self.a * t * t;
                if ln_v > 705.0 {
                    return Err(ChoquardError::Range { t, domain_max: self.domain_max });
                }
                ln_v.exp()
            }
            Family::PaperExample => {
                let (_, d, _, _, _) = self.pe_parts(t)?;
                self.kappa * t * t * (A_CRITICAL * t * t).exp() / d
            }
        };
        if !v.is_finite() {
            return Err(ChoquardError::Range { t, domain_max: self.domain_max });
        }
        Ok(v)
    }

    /// `f(t) = F'(t)`.
    pub fn f(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        self.range_check(t)?;
        let v = match self.family {
            Family::Power => self.kappa * self.q * t.powf(self.q - 1.0),
            Family::ExpCritical => {
                let a = self.a;
                self.kappa * (3.0 * t * t + 2.0 * a * t.powi(4)) * (a * t * t).exp()
            }
            Family::PaperExample => {
                let (_, _, g, gp, _) = self.pe_parts(t)?;
                let e = (A_CRITICAL * t * t).exp();
                self.kappa * e * (2.0 * A_CRITICAL * t * g + gp)
            }
        };
        if !v.is_finite() {
            return Err(ChoquardError::Range { t, domain_max: self.domain_max });
        }
        Ok(v)
    }

    /// `f'(t) = F''(t)`.
    pub fn f_prime(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        self.range_check(t)?;
        let v = match self.family {
            Family::Power => self.kappa * self.q * (self.q - 1.0) * t.powf(self.q - 2.0),
            Family::ExpCritical => {
                let a = self.a;
                self.kappa
                    * (6.0 * t + 14.0 * a * t.powi(3) + 4.0 * a * a * t.powi(5))
                    * (a * t * t).exp()
            }
            Family::PaperExample => {
                let (_, _, g, gp, gpp) = self.pe_parts(t)?;
                let e = (A_CRITICAL * t * t).exp();
                let b = 2.0 * A_CRITICAL;
                self.kappa * e * (b * b * t * t * g + 2.0 * b * t * gp + b * g + gpp)
            }
        };
        if !v.is_finite() {
            return Err(ChoquardError::Range { t, domain_max: self.domain_max });
        }
        Ok(v)
    }

    /// `F(t) f'(t) / f(t)²`, evaluated with the exponential factor cancelled
    /// analytically so it never overflows. Defined for `t > 0`; the limit
    /// value is returned below `t = 1e-8`.
    pub fn ratio(&self, t: f64) -> f64 {
        match self.family {
            Family::Power => (self.q - 1.0) / self.q,
            Family::ExpCritical => {
                let x = self.a * t * t;
                (6.0 + 14.0 * x + 4.0 * x * x) / (9.0 + 12.0 * x + 4.0 * x * x)
            }
            Family::PaperExample => {
                if t < 1e-8 {
                    return 0.5;
                }
                match self.pe_parts(t) {
                    Ok((_, _, g, gp, gpp)) => {
                        let b = 2.0 * A_CRITICAL;
                        let fp = b * b * t * t * g + 2.0 * b * t * gp + b * g + gpp;
                        let f = b * t * g + gp;
                        g * fp / (f * f)
                    }
                    Err(_) => f64::NAN,
                }
            }
        }
    }

    /// `Q(t) = F(t)/f(t)` for `t > 0`, continuously extended by `Q(0) = 0`,
    /// and `(1-τ) t` for `t <= 0` (the test-function convention used by the
    /// compactness diagnostics). Satisfies `|Q(t)| <= (1-τ)|t|`.
    pub fn quotient(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        if t < 0.0 {
            return (1.0 - self.tau) * t;
        }
        match self.family {
            Family::Power => t / self.q,
            Family::ExpCritical => t / (3.0 + 2.0 * self.a * t * t),
            Family::PaperExample => {
                if t < 1e-8 {
                    return 0.5 * t;
                }
                match self.pe_parts(t) {
                    Ok((l, d, _, _, _)) => {
                        let u = 1.0 + t;
                        t * t / (2.0 * A_CRITICAL * t * t * t + 2.0 * t + t * t / (u * l * d))
                    }
                    Err(_) => f64::NAN,
                }
            }
        }
    }

    /// `H(t) = ∫₀ᵗ sqrt(F f')/f ds`; the integrand equals `sqrt(F f'/f²)`
    /// and stays in `[sqrt(τ), sqrt(C)]`, so the integral is benign.
    pub fn h_transform(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(ChoquardError::InvalidNonlinearity(format!(
                "H is defined for t >= 0, got {t}"
            )));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        self.range_check(t)?;
        crate::quad::adaptive(
            |s| self.ratio(s).max(0.0).sqrt(),
            0.0,
            t,
            1e-11,
            1e-13,
            28,
            2048,
            "H transform",
        )
    }

    /// `F` on the positive part of a sample vector.
    pub fn big_f_samples(&self, u: &[f64]) -> Result<Vec<f64>> {
        u.iter().map(|&t| self.big_f(t)).collect()
    }

    /// `f` on the positive part of a sample vector.
    pub fn f_samples(&self, u: &[f64]) -> Result<Vec<f64>> {
        u.iter().map(|&t| self.f(t)).collect()
    }
}

/// Outcome of a single audited assumption.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub passed: bool,
    /// t at which the reported quantity was observed (worst case / terminal)
    pub witness_t: f64,
    pub observed: f64,
    pub bound: f64,
    pub note: String,
}

/// Full audit of (f1)-(f5) on a mesh.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub family: String,
    pub kappa: f64,
    pub tau: f64,
    pub c_upper: f64,
    pub beta: f64,
    pub rho: f64,
    pub checks: Vec<AssumptionCheck>,
    /// Some(t*) when the family is only defined below a finite singularity.
    pub domain_singularity: Option<f64>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed_names(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

/// Runs the (f1)-(f5) audit on `mesh ⊂ (0, domain_max]`. Mesh points past
/// the evaluable domain are dropped (reported via the singularity flag).
pub fn check_assumptions(nl: &Nonlinearity, mesh: &[f64]) -> Result<AssumptionReport> {
    let mut ts: Vec<f64> = mesh
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t <= nl.domain_max() && nl.big_f(t).is_ok())
        .collect();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();
    if ts.len() < 8 {
        return Err(ChoquardError::InvalidNonlinearity(
            "assumption audit needs at least 8 usable mesh points".into(),
        ));
    }
    let t_end = *ts.last().unwrap();
    let mut checks = Vec::new();

    // (f1) sign and one-sided vanishing
    {
        let mut worst = (ts[0], f64::INFINITY);
        for &t in &ts {
            let v = nl.big_f(t)?.min(nl.f(t)?);
            if v < worst.1 {
                worst = (t, v);
            }
        }
        let neg_ok = nl.big_f(-1.0)? == 0.0 && nl.f(-1.0)? == 0.0 && nl.big_f(0.0)? == 0.0;
        checks.push(AssumptionCheck {
            name: "f1.sign".into(),
            passed: worst.1 >= 0.0 && neg_ok,
            witness_t: worst.0,
            observed: worst.1,
            bound: 0.0,
            note: "F, f >= 0 on (0, domain_max]; F = f = 0 for t <= 0".into(),
        });
    }

    // (f1) f(t) = o(t) at 0+: small slope at the lowest mesh point, or a
    // decreasing trend of f(t)/t over the smallest points (covers slowly
    // vanishing families).
    {
        let k = 4.min(ts.len());
        let slopes: Vec<f64> =
            ts[..k].iter().map(|&t| nl.f(t).unwrap_or(f64::INFINITY) / t).collect();
        // ts ascends, so f(t)/t must grow away from zero when f = o(t) at 0+
        let vanishing_trend = slopes.windows(2).all(|w| w[1] >= w[0]);
        checks.push(AssumptionCheck {
            name: "f1.origin".into(),
            passed: slopes[0] <= 0.05 || vanishing_trend,
            witness_t: ts[0],
            observed: slopes[0],
            bound: 0.05,
            note: "f(t)/t at the smallest mesh point (or a vanishing trend)".into(),
        });
    }

    // (f1)/(1.4) envelope with declared (C, t_bar, t_tilde, p)
    {
        let mut worst = (0.0f64, 0.0f64);
        for &t in &ts {
            let fv = nl.big_f(t)?;
            let bound = if t <= nl.t_bar {
                nl.c_env * t * t
            } else if t >= nl.t_tilde {
                nl.c_env * t.powf(nl.p - 1.0) * (A_CRITICAL * t * t).exp()
            } else {
                continue;
            };
            let excess = fv / bound;
            if excess > worst.1 {
                worst = (t, excess);
            }
        }
        checks.push(AssumptionCheck {
            name: "f1.envelope".into(),
            passed: worst.1 <= 1.0 + 1e-9,
            witness_t: worst.0,
            observed: worst.1,
            bound: 1.0,
            note: "max of F(t)/envelope over the two declared branches".into(),
        });
    }

    // (f2) ratio window
    {
        let mut lo = (ts[0], f64::INFINITY);
        let mut hi = (ts[0], f64::NEG_INFINITY);
        for &t in &ts {
            let r = nl.ratio(t);
            if r < lo.1 {
                lo = (t, r);
            }
            if r > hi.1 {
                hi = (t, r);
            }
        }
        checks.push(AssumptionCheck {
            name: "f2.lower".into(),
            passed: lo.1 >= nl.tau() - 1e-9,
            witness_t: lo.0,
            observed: lo.1,
            bound: nl.tau(),
            note: "min of F f'/f² vs declared tau".into(),
        });
        checks.push(AssumptionCheck {
            name: "f2.upper".into(),
            passed: hi.1 <= nl.c_upper() + 1e-9,
            witness_t: hi.0,
            observed: hi.1,
            bound: nl.c_upper(),
            note: "max of F f'/f² vs declared C".into(),
        });
    }

    // (f3) terminal ratio -> 1
    {
        let r = nl.ratio(t_end);
        checks.push(AssumptionCheck {
            name: "f3.limit".into(),
            passed: (r - 1.0).abs() <= 0.02,
            witness_t: t_end,
            observed: r,
            bound: 1.0,
            note: "F f'/f² at the mesh end (limit must be 1)".into(),
        });
    }

    // (f4) declared beta vs threshold, and the empirical lower growth
    {
        let thr = f4_threshold(nl.rho());
        checks.push(AssumptionCheck {
            name: "f4.beta_threshold".into(),
            passed: nl.beta() > thr,
            witness_t: f64::NAN,
            observed: nl.beta(),
            bound: thr,
            note: "declared beta vs 1/(rho^2 sqrt(ln 2) pi^{3/2})".into(),
        });

        // m(t) = t F(t) e^{-4π t²}, computed in log space; must reach beta
        // (or diverge) at the mesh end and not be collapsing there.
        let log_m = |t: f64| -> f64 {
            match nl.big_f(t) {
                Ok(fv) if fv > 0.0 => t.ln() + fv.ln() - A_CRITICAL * t * t,
                _ => f64::NEG_INFINITY,
            }
        };
        let m_end = log_m(t_end);
        let m_mid = log_m(ts[ts.len() / 2]);
        let growing = m_end >= m_mid - 1e-12;
        let reaches_beta = m_end >= nl.beta().ln() - 1e-9;
        checks.push(AssumptionCheck {
            name: "f4.growth".into(),
            passed: growing && reaches_beta,
            witness_t: t_end,
            observed: m_end.exp(),
            bound: nl.beta(),
            note: "terminal t F(t) e^{-4π t²} vs beta (must not decay)".into(),
        });
    }

    // (f5) F <= M0 f for large t: report M0 = sup F/f on [1, end]; fail if
    // the sup sits at the mesh end with an increasing trend (unbounded).
    {
        let tail: Vec<f64> = ts.iter().copied().filter(|&t| t >= 1.0).collect();
        if tail.len() >= 2 {
            let mut sup = (tail[0], f64::NEG_INFINITY);
            for &t in &tail {
                let q = nl.quotient(t);
                if q > sup.1 {
                    sup = (t, q);
                }
            }
            let at_end = (sup.0 - t_end).abs() < 1e-12;
            let increasing_at_end =
                nl.quotient(t_end) > nl.quotient(tail[tail.len().saturating_sub(2)]) - 1e-15;
            checks.push(AssumptionCheck {
                name: "f5.bound".into(),
                passed: !(at_end && increasing_at_end),
                witness_t: sup.0,
                observed: sup.1,
                bound: f64::INFINITY,
                note: "M0 = sup F/f on [1, end]; fails when still growing at the end".into(),
            });
        }
    }

    let domain_singularity = match nl.family() {
        Family::PaperExample => Some(std::f64::consts::E - 1.0),
        _ => None,
    };

    Ok(AssumptionReport {
        family: nl.family().name().to_string(),
        kappa: nl.kappa(),
        tau: nl.tau(),
        c_upper: nl.c_upper(),
        beta: nl.beta(),
        rho: nl.rho(),
        checks,
        domain_singularity,
    })
}

/// Log-spaced audit mesh on `(lo, hi]`.
pub fn audit_mesh(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn exp_critical_point_values() {
        let nl = Nonlinearity::exp_critical(1.0).unwrap();
        assert_eq!(nl.big_f(0.0).unwrap(), 0.0);
        assert_eq!(nl.big_f(-1.0).unwrap(), 0.0);
        assert_eq!(nl.f(-1.0).unwrap(), 0.0);
        // F(1/2) = (1/8) e^pi, f(1/2) = (3/4 + pi/2) e^pi (scalar oracle)
        assert_relative_eq!(nl.big_f(0.5).unwrap(), 2.8925865790974086, max_relative = 1e-14);
        assert_relative_eq!(nl.f(0.5).unwrap(), 53.704834461643853, max_relative = 1e-14);
    }

    #[test]
    fn range_error_instead_of_infinity() {
        let nl = Nonlinearity::exp_critical(1.0).unwrap();
        match nl.big_f(8.0) {
            Err(ChoquardError::Range { t, .. }) => assert_eq!(t, 8.0),
            other => panic!("expected range error, got {other:?}"),
        }
        // at domain_max everything is still finite
        assert!(nl.big_f(nl.domain_max()).unwrap().is_finite());
        assert!(nl.f_prime(nl.domain_max()).unwrap().is_finite());
    }

    /// Central finite differences of F reproduce f with second-order decay
    /// (Richardson sweep), and likewise f' from f.
    #[test]
    fn derivatives_match_finite_differences() {
        // q = 3.7 keeps both F and f genuinely non-polynomial of low
        // degree, so neither difference hits the rounding floor
        for nl in [
            Nonlinearity::power(0.7, 3.7).unwrap(),
            Nonlinearity::exp_critical(1.0).unwrap(),
            Nonlinearity::paper_example().unwrap(),
        ] {
            let t = 1.0f64.min(0.6 * nl.domain_max());
            let fd = |h: f64| (nl.big_f(t + h).unwrap() - nl.big_f(t - h).unwrap()) / (2.0 * h);
            let fd2 = |h: f64| (nl.f(t + h).unwrap() - nl.f(t - h).unwrap()) / (2.0 * h);
            let exact = nl.f(t).unwrap();
            let exact2 = nl.f_prime(t).unwrap();
            let e1: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
                .iter()
                .map(|&h| ((fd(h) - exact) / exact).abs())
                .collect();
            let e2: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
                .iter()
                .map(|&h| ((fd2(h) - exact2) / exact2).abs())
                .collect();
            // halving h divides the error by ~4 (down to rounding)
            let order2 = |e: &[f64]| e[2] < 1e-11 || (e[1] < e[0] / 2.5 && e[2] < e[1] / 2.5);
            assert!(order2(&e1), "{:?} {:?}", nl.family(), e1);
            assert!(order2(&e2), "{:?} {:?}", nl.family(), e2);
        }
    }

    #[test]
    fn power_quotient_is_linear() {
        let nl = Nonlinearity::power(1.0, 3.0).unwrap();
        assert_eq!(nl.quotient(0.0), 0.0);
        for t in [0.1, 1.0, 5.0] {
            assert_relative_eq!(nl.quotient(t), t / 3.0, max_relative = 1e-14);
            // Q(t) <= (1-tau) t with tau = 2/3: equality here
            assert!(nl.quotient(t) <= (1.0 - nl.tau()) * t + 1e-14);
        }
        assert_relative_eq!(nl.quotient(-2.0), (1.0 - nl.tau()) * -2.0, max_relative = 1e-14);
    }

    #[test]
    fn exp_critical_quotient_bound() {
        let nl = Nonlinearity::exp_critical(1.0).unwrap();
        // scalar oracle: Q(2) = 2/(3 + 8*pi*4)
        assert_relative_eq!(nl.quotient(2.0), 2.0 / (3.0 + 32.0 * PI), max_relative = 1e-14);
        assert!(nl.quotient(2.0) <= (1.0 - nl.tau()) * 2.0);
    }

    #[test]
    fn h_transform_power_is_linear() {
        // integrand = sqrt((q-1)/q) = sqrt(2/3) for q = 3
        let nl = Nonlinearity::power(1.0, 3.0).unwrap();
        assert_eq!(nl.h_transform(0.0).unwrap(), 0.0);
        let h = nl.h_transform(2.5).unwrap();
        assert_relative_eq!(h, 0.8164965809277260 * 2.5, max_relative = 1e-12);
    }

    #[test]
    fn h_transform_exp_critical_approaches_identity() {
        // (f3): the integrand tends to 1, so H(t)/t -> 1; at t = 5 the
        // oracle value is 0.99877...
        let nl = Nonlinearity::exp_critical(1.0).unwrap();
        let h = nl.h_transform(5.0).unwrap();
        assert_relative_eq!(h / 5.0, 0.9987732075152250, max_relative = 1e-9);
        assert!((h / 5.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn h_is_nondecreasing() {
        let nl = Nonlinearity::exp_critical(1.0).unwrap();
        let mut prev = 0.0;
        for i in 1..=20 {
            let h = nl.h_transform(0.3 * i as f64).unwrap();
            assert!(h >= prev);
            prev = h;
        }
    }

    #[test]
    fn audit_exp_critical_passes_everything() {
        let nl = Nonlinearity::exp_critical(1.0).unwrap();
        let report = check_assumptions(&nl, &audit_mesh(1e-3, 7.0, 400)).unwrap();
        assert!(report.all_passed(), "failed: {:?}", report.failed_names());
        assert!(report.domain_singularity.is_none());
    }

    #[test]
    fn audit_power_fails_compactness_conditions() {
        let nl = Nonlinearity::power(1.0, 3.0).unwrap();
        let report = check_assumptions(&nl, &audit_mesh(1e-3, 10.0, 400)).unwrap();
        assert!(report.check("f1.sign").unwrap().passed);
        assert!(report.check("f1.origin").unwrap().passed);
        assert!(report.check("f1.envelope").unwrap().passed);
        assert!(report.check("f2.lower").unwrap().passed);
        assert!(report.check("f2.upper").unwrap().passed);
        // t F(t) e^{-4π t²} -> 0: the decisive (f4) failure
        assert!(!report.check("f4.growth").unwrap().passed);
        // ratio == (q-1)/q = 2/3 != 1, so the (f3) limit fails as well
        assert!(!report.check("f3.limit").unwrap().passed);
    }

    #[test]
    fn audit_paper_example_flags_singularity() {
        let nl = Nonlinearity::paper_example().unwrap();
        let report = check_assumptions(&nl, &audit_mesh(1e-3, 1.7, 300)).unwrap();
        let s = report.domain_singularity.expect("singularity must be flagged");
        assert_relative_eq!(s, std::f64::consts::E - 1.0, max_relative = 1e-15);
        // evaluation right of the singularity is a range error, not a sign flip
        assert!(nl.big_f(1.72).is_err());
    }

    #[test]
    fn f4_threshold_value() {
        // 1/(rho² sqrt(ln 2) π^{3/2}) at rho = 0.2 (scalar oracle)
        assert_relative_eq!(f4_threshold(0.2), 5.392652917850160, max_relative = 1e-14);
        // beta for the compliant default must clear it
        let nl = Nonlinearity::exp_critical(1.0).unwrap();
        assert!(nl.beta() > f4_threshold(nl.rho()));
    }

    #[test]
    fn exp_critical_wrong_rate_fails_audit() {
        // a < 4π kills (f4); a > 4π kills the (f1) envelope
        let low = Nonlinearity::exp_critical_with_growth(1.0, 0.9 * A_CRITICAL).unwrap();
        let r = check_assumptions(&low, &audit_mesh(1e-3, low.domain_max(), 300)).unwrap();
        assert!(!r.check("f4.growth").unwrap().passed);

        let high = Nonlinearity::exp_critical_with_growth(1.0, 1.1 * A_CRITICAL).unwrap();
        let r = check_assumptions(&high, &audit_mesh(1e-3, high.domain_max(), 300)).unwrap();
        assert!(!r.check("f1.envelope").unwrap().passed);
    }

    proptest! {
        // (f2) literal assertion on random points, both compliant families
        #[test]
        fn ratio_window_holds(t in 1e-6f64..7.0) {
            let nl = Nonlinearity::exp_critical(1.0).unwrap();
            let r = nl.ratio(t);
            prop_assert!(r >= nl.tau() - 1e-12);
            prop_assert!(r <= nl.c_upper() + 1e-12);
        }

        // F(t) <= (1-tau) f(t) t, the integrated form of (f2)
        #[test]
        fn primitive_bound(t in 1e-6f64..6.9) {
            let nl = Nonlinearity::exp_critical(1.0).unwrap();
            let lhs = nl.big_f(t).unwrap();
            let rhs = (1.0 - nl.tau()) * nl.f(t).unwrap() * t;
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }

        // |Q(t)| <= (1-tau)|t| on both sides of zero
        #[test]
        fn quotient_contracts(t in -5.0f64..5.0) {
            let nl = Nonlinearity::exp_critical(1.0).unwrap();
            prop_assert!(nl.quotient(t).abs() <= (1.0 - nl.tau()) * t.abs() + 1e-13);
        }
    }
}
