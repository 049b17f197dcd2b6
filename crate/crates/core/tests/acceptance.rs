//! Acceptance suite: every criterion runs at its stated tolerance and
//! prints one pass/fail line. The whole suite is a single sequential test
//! so the per-criterion wall-clock budgets are measured without
//! interference.
//!
//! Run with `cargo test -p choquard --test acceptance -- --nocapture`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use choquard::certificates::{
    hls_certificate, level_certificate, moser_grid, moser_w, MoserConfig,
};
use choquard::continuation::{geometric_schedule, run_continuation, ContinuationOptions};
use choquard::energy::AlphaEnergy;
use choquard::grid::{RadialFunction, RadialGrid};
use choquard::kernel::{angular_avg, g_alpha, ConvolutionOperator, KernelSpec};
use choquard::laplacian::H1Form;
use choquard::nonlinearity::{audit_mesh, check_assumptions, f4_threshold, Nonlinearity};
use choquard::solver::{cerami_diagnostics, mountain_pass, SolveOptions};

struct Criterion {
    name: &'static str,
    passed: bool,
    seconds: f64,
    detail: String,
}

fn record(
    name: &'static str,
    start: Instant,
    passed: bool,
    detail: String,
) -> Criterion {
    Criterion { name, passed, seconds: start.elapsed().as_secs_f64(), detail }
}

/// 1. Quadrature reproduces the closed-form cap norms `1 + ρ²δ_n` within
/// 1e-4 relative for n in {10, 100, 1000} at N = 20000, in under 2 s.
fn criterion_1() -> Criterion {
    let start = Instant::now();
    let rho = 0.2;
    let grid = moser_grid(20000, rho).unwrap();
    let mut worst = 0.0f64;
    for n in [10u32, 100, 1000] {
        let cfg = MoserConfig::new(n, rho).unwrap();
        let w = moser_w(&cfg, &grid).unwrap();
        let rel = (w.h1_norm().powi(2) - cfg.norm_sq_closed()).abs() / cfg.norm_sq_closed();
        worst = worst.max(rel);
    }
    let elapsed = start.elapsed().as_secs_f64();
    record(
        "1 cap-norm identity",
        start,
        worst <= 1e-4 && elapsed < 2.0,
        format!("worst rel err {worst:.2e}, {elapsed:.2}s (budget 2s)"),
    )
}

/// 2. Angular average of ln(1/|x|) equals -ln max(r,s) within 1e-10 on
/// 100 seeded random pairs against a 10^4-point periodic trapezoid
/// oracle, in under 1 s.
fn criterion_2() -> Criterion {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20250);
    let spec = KernelSpec::log();
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 100 {
        let r: f64 = rng.gen_range(0.05..5.0);
        let s: f64 = rng.gen_range(0.05..5.0);
        if (r - s).abs() < 1e-2 * r.max(s) {
            // the oracle's exponential convergence stalls on近-equal radii
            continue;
        }
        let n = 10_000;
        let mut sum = 0.0;
        for k in 0..n {
            let theta = 2.0 * PI * k as f64 / n as f64;
            let d2 = r * r + s * s - 2.0 * r * s * theta.cos();
            sum += -0.5 * d2.ln();
        }
        let oracle = sum / n as f64;
        worst = worst.max((angular_avg(&spec, r, s).unwrap() - oracle).abs());
        checked += 1;
    }
    let elapsed = start.elapsed().as_secs_f64();
    record(
        "2 log-kernel identity",
        start,
        worst <= 1e-10 && elapsed < 1.0,
        format!("worst abs err {worst:.2e}, {elapsed:.2}s (budget 1s)"),
    )
}

/// 3. Kernel limit: sup over s in [0.05, 20] of |G_α(s) + ln s| is below
/// 0.01 at α = 1e-3 and decreases monotonically along the α-ladder.
fn criterion_3() -> Criterion {
    let start = Instant::now();
    let mesh: Vec<f64> = (0..=8000).map(|i| 0.05 + 19.95 * i as f64 / 8000.0).collect();
    let sup = |alpha: f64| -> f64 {
        mesh.iter()
            .map(|&s| (g_alpha(s, alpha).unwrap() + s.ln()).abs())
            .fold(0.0f64, f64::max)
    };
    let ladder = [0.1, 0.03, 0.01, 0.003, 0.001];
    let sups: Vec<f64> = ladder.iter().map(|&a| sup(a)).collect();
    let monotone = sups.windows(2).all(|w| w[1] < w[0]);
    let passed = monotone && sups[4] <= 0.01;
    record(
        "3 kernel limit",
        start,
        passed,
        format!("sup at 1e-3: {:.2e} (<= 0.01), ladder {:?}", sups[4], sups),
    )
}

/// 4. Lower bound `G_α(s) >= ln(1/s)` on (0, 1] with violations at most
/// 1e-12 for α in {0.5, 0.1, 0.01}.
fn criterion_4() -> Criterion {
    let start = Instant::now();
    let mesh: Vec<f64> = (1..=200_000).map(|i| i as f64 / 200_000.0).collect();
    let mut worst = 0.0f64;
    for alpha in [0.5, 0.1, 0.01] {
        for &s in &mesh {
            let v = (-s.ln()) - g_alpha(s, alpha).unwrap();
            if v > worst {
                worst = v;
            }
        }
    }
    record(
        "4 kernel lower bound",
        start,
        worst <= 1e-12,
        format!("max violation {worst:.2e}"),
    )
}

/// 5. Central-difference directional derivatives of I_α match the
/// assembled gradient with log-log slope 2.0 ± 0.1 over h in
/// {1e-2..1e-5}, for 5 seeded (u, v) pairs and two families at α = 0.25.
fn criterion_5() -> Criterion {
    let start = Instant::now();
    let grid = Arc::new(RadialGrid::new(192, 12.0, 1.05, 0.25).unwrap());
    let op = ConvolutionOperator::build(grid.clone(), KernelSpec::riesz(0.25).unwrap()).unwrap();
    let form = H1Form::new(grid.clone()).unwrap();
    let families = [
        Nonlinearity::power(1.0, 4.0).unwrap(),
        Nonlinearity::exp_critical(1.0).unwrap(),
    ];
    let hs = [1e-2, 1e-3, 1e-4, 1e-5];
    let mut worst_slope: Option<f64> = None;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut ok = true;
    for nl in &families {
        let energy = AlphaEnergy::new(nl, &op, &form).unwrap();
        for _ in 0..5 {
            let c: f64 = rng.gen_range(0.5..2.0);
            let amp: f64 = rng.gen_range(0.4..0.7);
            let u: Vec<f64> = grid.nodes().iter().map(|&r| amp * (-c * r * r).exp()).collect();
            let v: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let eg = energy.euclidean_gradient(&u).unwrap();
            let dir: f64 = eg.iter().zip(&v).map(|(a, b)| a * b).sum();
            let errs: Vec<f64> = hs
                .iter()
                .map(|&h| {
                    let up: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + h * b).collect();
                    let um: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - h * b).collect();
                    let fd = (energy.energy(&up).unwrap() - energy.energy(&um).unwrap())
                        / (2.0 * h);
                    ((fd - dir) / dir.abs().max(1e-30)).abs().max(1e-300)
                })
                .collect();
            // least-squares slope of ln err vs ln h
            let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
            let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
            let n = xs.len() as f64;
            let sx: f64 = xs.iter().sum();
            let sy: f64 = ys.iter().sum();
            let sxx: f64 = xs.iter().map(|x| x * x).sum();
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
            let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            if (slope - 2.0).abs() > 0.1 {
                ok = false;
            }
            worst_slope = Some(match worst_slope {
                Some(p) if (p - 2.0).abs() > (slope - 2.0).abs() => p,
                _ => slope,
            });
        }
    }
    record(
        "5 gradient consistency",
        start,
        ok,
        format!("worst slope {:.3} (target 2.0 +/- 0.1)", worst_slope.unwrap()),
    )
}

/// 6. Radial-vs-planar convolution: the Riesz convolution of the unit-disk
/// indicator at α = 0.5 matches a brute 2D polar tensor oracle within 1e-2
/// relative at 10 radii, in under 30 s.
fn criterion_6() -> Criterion {
    let start = Instant::now();
    let base = RadialGrid::new(600, 6.0, 1.02, 0.25).unwrap();
    let grid = Arc::new(base.with_nodes_inserted(&[1.0]).unwrap());
    let op = ConvolutionOperator::build(grid.clone(), KernelSpec::riesz(0.5).unwrap()).unwrap();
    let chi: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&r| {
            if (r - 1.0).abs() < 1e-14 {
                0.5
            } else if r < 1.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let conv = op.apply(&chi);

    let oracle = |r: f64| -> f64 {
        // midpoint tensor rule in (s, θ); fine enough for 1e-3 accuracy
        let ns = 600;
        let nt = 2400;
        let mut total = 0.0;
        for a in 0..ns {
            let s = (a as f64 + 0.5) / ns as f64;
            let mut ring = 0.0;
            for b in 0..nt {
                let theta = 2.0 * PI * (b as f64 + 0.5) / nt as f64;
                let d2 = r * r + s * s - 2.0 * r * s * theta.cos();
                ring += d2.powf(-0.25);
            }
            total += ring * s;
        }
        total * (1.0 / ns as f64) * (2.0 * PI / nt as f64)
    };

    let targets = [0.0, 0.35, 0.55, 0.75, 0.95, 1.1, 1.3, 1.6, 2.5, 4.0];
    let mut worst = 0.0f64;
    for &t in &targets {
        let i = grid.nodes().iter().position(|&r| r >= t).unwrap();
        let r = grid.nodes()[i];
        let rel = (conv[i] - oracle(r)).abs() / oracle(r).abs();
        worst = worst.max(rel);
    }
    let elapsed = start.elapsed().as_secs_f64();
    record(
        "6 radial vs planar",
        start,
        worst <= 1e-2 && elapsed < 30.0,
        format!("worst rel err {worst:.2e}, {elapsed:.1}s (budget 30s)"),
    )
}

/// 7. Mountain-pass solve (power q = 4, α = 0.5, N = 2048): residual at
/// most 1e-8, strictly positive profile, Cerami bounds within 1e-6, in
/// under 5 minutes.
fn criterion_7() -> Criterion {
    let start = Instant::now();
    let nl = Nonlinearity::power(1.0, 4.0).unwrap();
    let grid = Arc::new(RadialGrid::new(2048, 40.0, 1.05, 0.25).unwrap());
    let op = ConvolutionOperator::build(grid.clone(), KernelSpec::riesz(0.5).unwrap()).unwrap();
    let opts = SolveOptions { tol: 1e-9, ..Default::default() };
    let r = match mountain_pass(&nl, &op, &opts) {
        Ok(r) => r,
        Err(e) => {
            return record("7 mountain-pass solve", start, false, format!("solve error: {e}"))
        }
    };
    let cer = cerami_diagnostics(&r.u_star, &nl, &op, r.c_level, 1e-6).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let passed = r.converged && r.residual <= 1e-8 && r.positive && cer.passed && elapsed < 300.0;
    record(
        "7 mountain-pass solve",
        start,
        passed,
        format!(
            "c = {:.6}, residual {:.1e}, positive {}, cerami {}, {elapsed:.0}s (budget 300s)",
            r.c_level, r.residual, r.positive, cer.passed
        ),
    )
}

/// 8. Level certificate: exp_critical with β validated against the (f4)
/// threshold at ρ = 0.2; the measured curve t ↦ I_α(t w_50) stays below
/// 1/2 for α in {0.5, 0.1, 0.02}; t_n lies in [sqrt(1/2), sqrt 2]; the
/// ψ-peak sits below 1/2 from the reported index on.
fn criterion_8() -> Criterion {
    let start = Instant::now();
    let rho = 0.2;
    // amplitude κ = 10 keeps the pointwise majorant regime reachable at
    // n = 50; the declared β = 6 clears the threshold 5.3927
    let nl = Nonlinearity::exp_critical(10.0).unwrap();
    if nl.beta() <= f4_threshold(rho) {
        return record("8 level certificate", start, false, "beta below threshold".into());
    }
    let cfg = MoserConfig::new(50, rho).unwrap();
    let grid = moser_grid(1400, rho).unwrap();
    let mesh: Vec<f64> = (0..=120).map(|i| i as f64 * 0.025).collect();
    let mut ok = true;
    let mut details = Vec::new();
    for alpha in [0.5, 0.1, 0.02] {
        match level_certificate(&cfg, &nl, alpha, &grid, &mesh) {
            Ok(cert) => {
                let t_ok = cert.t_n >= 0.5f64.sqrt() - 1e-12 && cert.t_n <= 2.0f64.sqrt() + 1e-12;
                ok &= cert.verdict_below_half && cert.verdict_psi_below_half && t_ok;
                details.push(format!(
                    "alpha {alpha}: max {:.4} at t = {:.2}, psi(t_n) = {:.4}, n_min = {:?}",
                    cert.max_level, cert.max_level_t, cert.psi_at_t_n, cert.n_min_psi
                ));
            }
            Err(e) => {
                ok = false;
                details.push(format!("alpha {alpha}: {e}"));
            }
        }
    }
    record("8 level certificate", start, ok, details.join("; "))
}

/// 9. HLS bound: 50 seeded random profile pairs at α = 0.5 all give
/// discrete quotients at most 2 sqrt(π) (1.001 slack).
fn criterion_9() -> Criterion {
    let start = Instant::now();
    let grid = Arc::new(RadialGrid::new(320, 12.0, 1.04, 0.25).unwrap());
    let op = ConvolutionOperator::build(grid, KernelSpec::riesz(0.5).unwrap()).unwrap();
    let cert = hls_certificate(0.5, 50, 20252025, &op).unwrap();
    record(
        "9 HLS bound",
        start,
        cert.passed,
        format!(
            "max quotient {:.4} vs bound {:.4}",
            cert.get("max_quotient").unwrap(),
            2.0 * PI.sqrt()
        ),
    )
}

/// 10. Continuation along α = 0.5·2^{-k}, k = 0..8 (exp_critical,
/// N = 2048): increments eventually decreasing, levels inside a fixed
/// window, final log-equation residual at most 1e-3, decay rate at least
/// 0.45 for every α <= 0.1, in under 30 minutes.
fn criterion_10() -> Criterion {
    let start = Instant::now();
    let nl = Nonlinearity::exp_critical(1.0).unwrap();
    let grid = Arc::new(RadialGrid::new(2048, 40.0, 1.05, 0.25).unwrap());
    let schedule = geometric_schedule(0.5, 9);
    let opts = ContinuationOptions { decay_alpha_max: 0.1, ..Default::default() };
    let trace = match run_continuation(&nl, grid, &schedule, &opts) {
        Ok(t) => t,
        Err(e) => return record("10 continuation", start, false, format!("error: {e}")),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let completed = trace.completed;
    let decreasing = trace.dh1_eventually_decreasing(4);
    let window = trace.levels_within(1e-3, 0.5);
    let final_log = trace.final_step().map(|s| s.log_residual).unwrap_or(f64::NAN);
    let decay_ok = trace
        .steps
        .iter()
        .filter(|s| s.alpha <= 0.1)
        .all(|s| s.decay.as_ref().map_or(false, |d| d.get("rate").unwrap_or(0.0) >= 0.45));
    let passed =
        completed && decreasing && window && final_log <= 1e-3 && decay_ok && elapsed < 1800.0;
    let dh: Vec<String> = trace.steps.iter().skip(1).map(|s| format!("{:.2e}", s.dh1)).collect();
    record(
        "10 continuation",
        start,
        passed,
        format!(
            "completed {completed}, dh1 {:?} decreasing {decreasing}, window {window}, \
             final log-residual {final_log:.2e} (<= 1e-3), decay {decay_ok}, {elapsed:.0}s (budget 1800s)",
            dh
        ),
    )
}

/// 11. Assumption auditor: exp_critical passes everything on (0, 7];
/// power q = 3 fails the (f4) growth (and, numerically, the (f3) limit,
/// since its ratio is the constant (q-1)/q); the closed-form example is
/// flagged for its domain singularity at t = e - 1.
fn criterion_11() -> Criterion {
    let start = Instant::now();
    let mut ok = true;
    let mut details = Vec::new();

    let compliant = Nonlinearity::exp_critical(1.0).unwrap();
    let rep = check_assumptions(&compliant, &audit_mesh(1e-3, 7.0, 400)).unwrap();
    if !rep.all_passed() {
        ok = false;
        details.push(format!("exp_critical failed {:?}", rep.failed_names()));
    } else {
        details.push("exp_critical passes (f1)-(f4)".into());
    }

    let power = Nonlinearity::power(1.0, 3.0).unwrap();
    let rep = check_assumptions(&power, &audit_mesh(1e-3, 10.0, 400)).unwrap();
    let f4_fails = !rep.check("f4.growth").unwrap().passed;
    let f12_pass = rep.check("f1.sign").unwrap().passed
        && rep.check("f1.origin").unwrap().passed
        && rep.check("f1.envelope").unwrap().passed
        && rep.check("f2.lower").unwrap().passed
        && rep.check("f2.upper").unwrap().passed;
    if !(f4_fails && f12_pass) {
        ok = false;
        details.push(format!("power q=3: failed set {:?}", rep.failed_names()));
    } else {
        details.push(format!("power q=3 fails {:?}", rep.failed_names()));
    }

    let example = Nonlinearity::paper_example().unwrap();
    let rep = check_assumptions(&example, &audit_mesh(1e-3, 1.71, 300)).unwrap();
    match rep.domain_singularity {
        Some(s) if (s - (std::f64::consts::E - 1.0)).abs() < 1e-12 => {
            details.push(format!("closed-form example flagged at t = {s:.6}"));
        }
        other => {
            ok = false;
            details.push(format!("missing singularity flag: {other:?}"));
        }
    }
    record("11 assumption auditor", start, ok, details.join("; "))
}

#[test]
fn acceptance_suite() {
    let suite_start = Instant::now();
    let results = vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
        criterion_11(),
    ];
    println!("\n=== acceptance criteria ===");
    for r in &results {
        println!(
            "criterion {:<22} {} [{:7.1}s]  {}",
            r.name,
            if r.passed { "pass" } else { "FAIL" },
            r.seconds,
            r.detail
        );
    }
    println!(
        "=== {}/{} criteria passed in {:.0}s ===",
        results.iter().filter(|r| r.passed).count(),
        results.len(),
        suite_start.elapsed().as_secs_f64()
    );
    assert!(results.iter().all(|r| r.passed), "acceptance criteria failed");
}
