//! Command-line runner: solves the regularized problem, drives the
//! α-continuation, and executes the numerical certificates, writing
//! CSV/JSON/SVG artifacts for every run.

mod svg;

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use choquard::certificates::{
    decay_certificate, hls_certificate, level_certificate, moser_grid, moser_norm_certificate,
    radial_bound_check, MoserConfig,
};
use choquard::config::RunConfig;
use choquard::continuation::{
    geometric_schedule, run_continuation, tail_kernel_bound_check, ContinuationTrace,
};
use choquard::energy::EnergyBreakdown;
use choquard::kernel::{angular_avg, g_alpha, lemma_g_bounds, ConvolutionOperator, KernelSpec};
use choquard::nonlinearity::{audit_mesh, check_assumptions};
use choquard::report::CertResult;
use choquard::solver::{cerami_diagnostics, mountain_pass, MountainPassResult};
use choquard::ChoquardError;

#[derive(Parser)]
#[command(
    name = "choquard",
    version,
    about = "Mountain-pass solver and certificate checker for the planar logarithmic Choquard equation"
)]
struct Cli {
    /// Run configuration file (flat `section.key = value` lines)
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the regularized problem at the configured kernel.alpha
    Solve,
    /// Drive the α-schedule toward the logarithmic limit
    #[command(name = "continue")]
    Continue,
    /// Run numerical certificates (moser, kernel, hls, level, decay, assumptions)
    Certify {
        /// Comma-separated certificate sets, overriding certify.sets
        #[arg(long)]
        set: Option<String>,
    },
    /// Audit the configured nonlinearity against the structural assumptions
    CheckNonlinearity,
    /// Tabulate angular kernel averages on an (r, s) mesh
    KernelTable {
        /// Riesz exponent (defaults to kernel.alpha)
        #[arg(long)]
        alpha: Option<f64>,
        /// mesh points per axis
        #[arg(long, default_value_t = 24)]
        points: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(&cli, started) {
        Ok(true) => std::process::exit(0),
        Ok(false) => {
            eprintln!("one or more verdicts failed");
            std::process::exit(1);
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                ChoquardError::Config { .. } | ChoquardError::InvalidGrid(_) => 2,
                _ => 3,
            };
            std::process::exit(code);
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, ChoquardError> {
    match &cli.config {
        Some(path) => RunConfig::parse_file(path),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: &Cli, started: Instant) -> Result<bool, ChoquardError> {
    let cfg = load_config(cli)?;
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    if cfg.runtime_workers > 0 {
        // ignore failure when a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.runtime_workers)
            .build_global();
    }
    std::fs::create_dir_all(&cfg.output_dir)?;

    match &cli.command {
        Command::Solve => cmd_solve(&cfg, started),
        Command::Continue => cmd_continue(&cfg, started),
        Command::Certify { set } => cmd_certify(&cfg, set.as_deref(), started),
        Command::CheckNonlinearity => cmd_check_nonlinearity(&cfg, started),
        Command::KernelTable { alpha, points } => {
            cmd_kernel_table(&cfg, alpha.unwrap_or(cfg.kernel_alpha), *points, started)
        }
    }
}

fn breakdown_json(b: &EnergyBreakdown) -> Value {
    json!({
        "quadratic": b.quadratic,
        "mass": b.mass_term,
        "riesz": b.riesz_term,
        "galpha": b.galpha_term,
        "total": b.total,
    })
}

fn cert_json(c: &CertResult) -> Value {
    let mut details = Map::new();
    for (k, v) in &c.details {
        details.insert(k.clone(), json!(v));
    }
    json!({ "name": c.name, "passed": c.passed, "details": details, "notes": c.notes })
}

fn write_summary(
    cfg: &RunConfig,
    path: &Path,
    command: &str,
    grid_hash: Option<u64>,
    verdicts: &[(&str, bool)],
    data: Value,
    started: Instant,
) -> Result<(), ChoquardError> {
    let mut v = Map::new();
    for (k, ok) in verdicts {
        v.insert((*k).to_string(), json!(ok));
    }
    let summary = json!({
        "command": command,
        "config": cfg,
        "grid_hash": grid_hash.map(|h| format!("{h:#018x}")),
        "warnings": cfg.warnings(),
        "verdicts": Value::Object(v),
        "data": data,
        "timing": { "wall_seconds": started.elapsed().as_secs_f64() },
    });
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, &summary)
        .map_err(|e| ChoquardError::Io(e.to_string()))?;
    writeln!(f)?;
    Ok(())
}

fn solve_artifacts(cfg: &RunConfig, r: &MountainPassResult) -> Result<(), ChoquardError> {
    let out = &cfg.output_dir;
    r.u_star.write_csv(&out.join("u_star.csv"))?;

    let mut f = std::io::BufWriter::new(std::fs::File::create(out.join("iterations.csv"))?);
    writeln!(f, "iter,c_level,residual,step")?;
    for rec in &r.path_log {
        writeln!(
            f,
            "{},{:.16e},{:.16e},{:.16e}",
            rec.iter, rec.c_level, rec.residual, rec.step
        )?;
    }
    drop(f);

    let profile: Vec<(f64, f64)> = r
        .u_star
        .grid()
        .nodes()
        .iter()
        .zip(r.u_star.samples())
        .map(|(&x, &y)| (x, y))
        .collect();
    svg::line_plot(
        &out.join("u_star.svg"),
        &format!("critical point, alpha = {}", r.alpha),
        "r",
        "u(r)",
        &[svg::Series { label: "u_star", points: profile, color: "#1f77b4" }],
    )?;
    let levels: Vec<(f64, f64)> = r
        .path_levels
        .iter()
        .enumerate()
        .map(|(i, &v)| (i as f64, v))
        .collect();
    svg::line_plot(
        &out.join("path_levels.svg"),
        "max level along the deformed path",
        "iteration",
        "level",
        &[svg::Series { label: "path max", points: levels, color: "#d62728" }],
    )?;
    Ok(())
}

fn cmd_solve(cfg: &RunConfig, started: Instant) -> Result<bool, ChoquardError> {
    let grid = cfg.build_grid()?;
    let nl = cfg.build_nonlinearity()?;
    let op = ConvolutionOperator::load_or_build(
        grid.clone(),
        KernelSpec::riesz(cfg.kernel_alpha)?,
        cfg.effective_cache_dir().as_deref(),
        choquard::kernel::DEFAULT_MAX_OPERATOR_N,
    )?;
    let result = mountain_pass(&nl, &op, &cfg.solve_options())?;
    let cerami = cerami_diagnostics(&result.u_star, &nl, &op, result.c_level, 1e-6)?;
    solve_artifacts(cfg, &result)?;

    // estimated mass beyond the truncation radius from the tail fit
    let decay = decay_certificate(&result.u_star, grid.r_max() / 4.0)?;
    let tail_mass = match (decay.get("m_fit"), decay.get("rate")) {
        (Some(m), Some(rate)) if rate > 0.0 => {
            let rmax = grid.r_max();
            // ∫_R^∞ M e^{-rate r} 2π r dr
            2.0 * std::f64::consts::PI * m * (rmax / rate + 1.0 / (rate * rate))
                * (-rate * rmax).exp()
        }
        _ => f64::NAN,
    };

    let verdicts = [
        ("converged", result.converged),
        ("positive", result.positive),
        ("cerami", cerami.passed),
        ("level_window", result.level_window_ok),
    ];
    let all = verdicts.iter().all(|(_, ok)| *ok);
    write_summary(
        cfg,
        &cfg.output_dir.join("solve_summary.json"),
        "solve",
        Some(grid.hash()),
        &verdicts,
        json!({
            "alpha": result.alpha,
            "c_level": result.c_level,
            "residual": result.residual,
            "iterations": result.iterations,
            "newton_iterations": result.newton_iterations,
            "h1_norm": result.u_star.h1_norm(),
            "breakdown": breakdown_json(&result.breakdown),
            "cerami": cert_json(&cerami),
            "decay": cert_json(&decay),
            "truncation_tail_mass": tail_mass,
            "notes": result.notes,
        }),
        started,
    )?;
    for line in verdicts.iter() {
        println!("solve.{}: {}", line.0, if line.1 { "pass" } else { "FAIL" });
    }
    Ok(all)
}

fn continuation_artifacts(cfg: &RunConfig, trace: &ContinuationTrace) -> Result<(), ChoquardError> {
    let out = &cfg.output_dir;
    let steps_dir = out.join("steps");
    std::fs::create_dir_all(&steps_dir)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(out.join("trace.csv"))?);
    writeln!(f, "alpha,c,residual,dh1,log_residual,decay_rate")?;
    for (k, s) in trace.steps.iter().enumerate() {
        let rate = s.decay.as_ref().and_then(|d| d.get("rate")).unwrap_or(f64::NAN);
        writeln!(
            f,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            s.alpha, s.c_level, s.residual, s.dh1, s.log_residual, rate
        )?;
        s.u.write_csv(&steps_dir.join(format!("u_{k:02}.csv")))?;
    }
    drop(f);

    let c_pts: Vec<(f64, f64)> =
        trace.steps.iter().enumerate().map(|(k, s)| (k as f64, s.c_level)).collect();
    let lr_pts: Vec<(f64, f64)> = trace
        .steps
        .iter()
        .enumerate()
        .map(|(k, s)| (k as f64, s.log_residual.log10()))
        .collect();
    let dh_pts: Vec<(f64, f64)> = trace
        .steps
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, s)| (k as f64, s.dh1.log10()))
        .collect();
    svg::line_plot(
        &out.join("trace.svg"),
        "continuation trace",
        "step",
        "level / log10 residuals",
        &[
            svg::Series { label: "c_k", points: c_pts, color: "#1f77b4" },
            svg::Series { label: "log10 log-residual", points: lr_pts, color: "#d62728" },
            svg::Series { label: "log10 dH1", points: dh_pts, color: "#2ca02c" },
        ],
    )?;
    Ok(())
}

fn cmd_continue(cfg: &RunConfig, started: Instant) -> Result<bool, ChoquardError> {
    let grid = cfg.build_grid()?;
    let nl = cfg.build_nonlinearity()?;
    let schedule = geometric_schedule(cfg.continuation_alpha0, cfg.continuation_steps);
    let trace = run_continuation(&nl, grid.clone(), &schedule, &cfg.continuation_options())?;
    continuation_artifacts(cfg, &trace)?;

    let final_log_residual = trace.final_step().map(|s| s.log_residual).unwrap_or(f64::NAN);
    let final_norm = trace.final_step().map(|s| s.u.h1_norm()).unwrap_or(0.0);
    let window = 4.min(trace.steps.len().saturating_sub(1));
    let verdicts = [
        ("completed", trace.completed),
        ("nontrivial_limit", final_norm >= 10.0 * cfg.solver_tol),
        ("increments_decreasing", window >= 2 && trace.dh1_eventually_decreasing(window)),
    ];
    let all = verdicts.iter().all(|(_, ok)| *ok);
    write_summary(
        cfg,
        &cfg.output_dir.join("continue_summary.json"),
        "continue",
        Some(grid.hash()),
        &verdicts,
        json!({
            "schedule": schedule,
            "levels": trace.steps.iter().map(|s| s.c_level).collect::<Vec<_>>(),
            "log_residuals": trace.steps.iter().map(|s| s.log_residual).collect::<Vec<_>>(),
            "dh1": trace.steps.iter().map(|s| s.dh1).collect::<Vec<_>>(),
            "final_log_residual": final_log_residual,
            "final_h1_norm": final_norm,
            "notes": trace.notes,
        }),
        started,
    )?;
    for line in verdicts.iter() {
        println!("continue.{}: {}", line.0, if line.1 { "pass" } else { "FAIL" });
    }
    Ok(all)
}

fn cmd_certify(cfg: &RunConfig, set: Option<&str>, started: Instant) -> Result<bool, ChoquardError> {
    let sets: Vec<String> = match set {
        Some(s) => s.split(',').map(|x| x.trim().to_string()).collect(),
        None => cfg.certify_sets.clone(),
    };
    let wants = |name: &str| sets.iter().any(|s| s == name || s == "all");
    let nl = cfg.build_nonlinearity()?;
    let rho = nl.rho();
    let mut results: Vec<(String, Value, bool)> = Vec::new();

    if wants("moser") {
        let grid = moser_grid(cfg.grid_n.min(20000).max(6000), rho)?;
        let mut items = Vec::new();
        let mut ok = true;
        for n in [10u32, 100, 1000] {
            let cert = moser_norm_certificate(&MoserConfig::new(n, rho)?, &grid)?;
            ok &= cert.passed;
            items.push(cert_json(&cert));
        }
        results.push(("moser".into(), json!(items), ok));
    }
    if wants("kernel") {
        let mesh: Vec<f64> = (1..=20000).map(|i| 1e-6 + 10.0 * i as f64 / 20000.0).collect();
        let mut items = Vec::new();
        let mut ok = true;
        for alpha in [0.5, 0.1, 0.01] {
            let cert = lemma_g_bounds(alpha, 0.75, &mesh)?;
            ok &= cert.passed;
            items.push(cert_json(&cert));
        }
        let admissible = 4.0 * (cfg.continuation_omega - 1.0) / (3.0 * cfg.continuation_omega);
        let tail_alpha = cfg.kernel_alpha.min(0.8 * admissible);
        let tail = tail_kernel_bound_check(tail_alpha, cfg.continuation_omega, &mesh)?;
        ok &= tail.passed;
        items.push(cert_json(&tail));
        results.push(("kernel".into(), json!(items), ok));
    }
    if wants("hls") {
        let grid = std::sync::Arc::new(choquard::grid::RadialGrid::new(
            cfg.grid_n.min(320),
            12.0,
            1.04,
            0.25,
        )?);
        let op = ConvolutionOperator::build(grid, KernelSpec::riesz(cfg.kernel_alpha)?)?;
        let cert = hls_certificate(cfg.kernel_alpha, 50, cfg.certify_seed, &op)?;
        let ok = cert.passed;
        results.push(("hls".into(), cert_json(&cert), ok));
    }
    if wants("level") {
        let mcfg = MoserConfig::new(cfg.certify_moser_n as u32, rho)?;
        let grid = moser_grid(cfg.grid_n.min(1600).max(700), rho)?;
        let mesh: Vec<f64> = (0..=100).map(|i| i as f64 * 0.025).collect();
        let cert = level_certificate(&mcfg, &nl, cfg.kernel_alpha, &grid, &mesh)?;
        let curve: Vec<(f64, f64)> =
            cert.t_mesh.iter().zip(&cert.levels).map(|(&t, &l)| (t, l)).collect();
        svg::line_plot(
            &cfg.output_dir.join("level_curve.svg"),
            &format!("level curve, n = {}, alpha = {}", cert.n, cert.alpha),
            "t",
            "I_alpha(t w_n)",
            &[svg::Series { label: "level", points: curve, color: "#1f77b4" }],
        )?;
        let ok = cert.passed();
        let v = serde_json::to_value(&cert).map_err(|e| ChoquardError::Io(e.to_string()))?;
        results.push(("level".into(), v, ok));
    }
    if wants("decay") {
        let grid = cfg.build_grid()?;
        let op = ConvolutionOperator::load_or_build(
            grid.clone(),
            KernelSpec::riesz(cfg.kernel_alpha)?,
            cfg.effective_cache_dir().as_deref(),
            choquard::kernel::DEFAULT_MAX_OPERATOR_N,
        )?;
        let result = mountain_pass(&nl, &op, &cfg.solve_options())?;
        let decay = decay_certificate(&result.u_star, grid.r_max() / 4.0)?;
        let radial = radial_bound_check(&result.u_star)?;
        let ok = decay.passed && radial.passed && result.converged;
        let fit: Vec<(f64, f64)> = result
            .u_star
            .grid()
            .nodes()
            .iter()
            .zip(result.u_star.samples())
            .filter(|(&r, &u)| r >= 1.0 && u > 0.0)
            .map(|(&r, &u)| (r, u.ln()))
            .collect();
        svg::line_plot(
            &cfg.output_dir.join("decay_fit.svg"),
            "tail of the critical point",
            "r",
            "ln u(r)",
            &[svg::Series { label: "ln u", points: fit, color: "#1f77b4" }],
        )?;
        results.push((
            "decay".into(),
            json!([cert_json(&decay), cert_json(&radial)]),
            ok,
        ));
    }
    if wants("assumptions") {
        let mesh = audit_mesh(1e-3, nl.domain_max(), 400);
        let report = check_assumptions(&nl, &mesh)?;
        let ok = report.all_passed();
        let v = serde_json::to_value(&report).map_err(|e| ChoquardError::Io(e.to_string()))?;
        results.push(("assumptions".into(), v, ok));
    }

    if results.is_empty() {
        return Err(ChoquardError::Config {
            key: "certify.sets".into(),
            message: format!("no known certificate set in {sets:?}"),
        });
    }

    let mut all = true;
    let mut verdicts = Vec::new();
    for (name, value, ok) in &results {
        all &= ok;
        verdicts.push((name.as_str(), *ok));
        let path = cfg.output_dir.join(format!("certify_{name}.json"));
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(&mut f, value).map_err(|e| ChoquardError::Io(e.to_string()))?;
        writeln!(f)?;
        println!("certify.{name}: {}", if *ok { "pass" } else { "FAIL" });
    }
    let data = Value::Object(
        results
            .iter()
            .map(|(n, v, _)| (n.clone(), v.clone()))
            .collect::<Map<String, Value>>(),
    );
    write_summary(
        cfg,
        &cfg.output_dir.join("certify_summary.json"),
        "certify",
        None,
        &verdicts,
        data,
        started,
    )?;
    Ok(all)
}

fn cmd_check_nonlinearity(cfg: &RunConfig, started: Instant) -> Result<bool, ChoquardError> {
    let nl = cfg.build_nonlinearity()?;
    let mesh = audit_mesh(1e-3, nl.domain_max(), 400);
    let report = check_assumptions(&nl, &mesh)?;
    let v = serde_json::to_value(&report).map_err(|e| ChoquardError::Io(e.to_string()))?;
    let path = cfg.output_dir.join("assumptions.json");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
    serde_json::to_writer_pretty(&mut f, &v).map_err(|e| ChoquardError::Io(e.to_string()))?;
    writeln!(f)?;
    drop(f);
    for c in &report.checks {
        println!("{}: {}", c.name, if c.passed { "pass" } else { "FAIL" });
    }
    if let Some(s) = report.domain_singularity {
        println!("domain singularity at t = {s}");
    }
    write_summary(
        cfg,
        &cfg.output_dir.join("check_summary.json"),
        "check-nonlinearity",
        None,
        &[("assumptions", report.all_passed())],
        v,
        started,
    )?;
    Ok(report.all_passed())
}

fn cmd_kernel_table(
    cfg: &RunConfig,
    alpha: f64,
    points: usize,
    started: Instant,
) -> Result<bool, ChoquardError> {
    let spec = KernelSpec::riesz(alpha)?;
    let path = cfg.output_dir.join("kernel_table.csv");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(f, "r,s,riesz_avg,g_alpha_avg,log_avg")?;
    let coord = |i: usize| 4.0 * i as f64 / (points - 1) as f64;
    for i in 0..points {
        for j in 0..points {
            let (r, s) = (coord(i), coord(j));
            if r == 0.0 && s == 0.0 {
                continue;
            }
            let riesz = angular_avg(&spec, r, s)?;
            let galpha = (riesz - 1.0) / alpha;
            let log = angular_avg(&KernelSpec::log(), r, s)?;
            writeln!(f, "{r:.16e},{s:.16e},{riesz:.16e},{galpha:.16e},{log:.16e}")?;
        }
    }
    drop(f);
    // spot self-consistency: the scalar kernel and the angular average
    // agree where the average is available in closed form (s = 0 ray)
    let check = (g_alpha(2.0, alpha)? - (angular_avg(&spec, 0.0, 2.0)? - 1.0) / alpha).abs();
    write_summary(
        cfg,
        &cfg.output_dir.join("kernel_table_summary.json"),
        "kernel-table",
        None,
        &[("consistent", check < 1e-12)],
        json!({ "alpha": alpha, "points": points, "csv": path.display().to_string() }),
        started,
    )?;
    println!("kernel-table.consistent: {}", if check < 1e-12 { "pass" } else { "FAIL" });
    Ok(check < 1e-12)
}
