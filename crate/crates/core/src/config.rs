//! Flat `section.key = value` run configuration.
//!
//! The format is deliberately minimal and diff-friendly: one assignment
//! per line, `#` comments, no nesting. Unknown keys are rejected by name,
//! and every numeric range is validated before any compute starts.

use serde::Serialize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::continuation::ContinuationOptions;
use crate::grid::RadialGrid;
use crate::nonlinearity::Nonlinearity;
use crate::solver::SolveOptions;
use crate::{ChoquardError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub grid_n: usize,
    pub grid_rmax: f64,
    pub grid_grade: f64,
    pub grid_core_cut: f64,

    pub nl_family: String,
    pub nl_kappa: f64,
    pub nl_q: f64,
    pub nl_a: f64,
    pub nl_tau: Option<f64>,
    pub nl_beta: Option<f64>,
    pub nl_rho: Option<f64>,

    pub kernel_alpha: f64,
    pub kernel_cache_dir: Option<PathBuf>,

    pub solver_path_nodes: usize,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    pub solver_newton: bool,

    pub continuation_alpha0: f64,
    pub continuation_steps: usize,
    pub continuation_omega: f64,

    pub certify_sets: Vec<String>,
    pub certify_seed: u64,
    pub certify_moser_n: usize,

    pub output_dir: PathBuf,
    pub runtime_workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid_n: 2048,
            grid_rmax: 40.0,
            grid_grade: 1.05,
            grid_core_cut: 0.25,
            nl_family: "exp_critical".into(),
            nl_kappa: 1.0,
            nl_q: 4.0,
            nl_a: 4.0 * std::f64::consts::PI,
            nl_tau: None,
            nl_beta: None,
            nl_rho: None,
            kernel_alpha: 0.5,
            kernel_cache_dir: None,
            solver_path_nodes: 21,
            solver_tol: 1e-9,
            solver_max_iter: 600,
            solver_newton: true,
            continuation_alpha0: 0.5,
            continuation_steps: 9,
            continuation_omega: 1.05,
            certify_sets: vec!["all".into()],
            certify_seed: 20252025,
            certify_moser_n: 50,
            output_dir: PathBuf::from("out"),
            runtime_workers: 0,
        }
    }
}

const KNOWN_SETS: &[&str] =
    &["moser", "kernel", "hls", "level", "decay", "assumptions", "all"];

impl RunConfig {
    pub fn parse_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ChoquardError::Config {
            key: path.display().to_string(),
            message: format!("cannot read config: {e}"),
        })?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ChoquardError::Config {
                key: format!("line {}", lineno + 1),
                message: format!("expected `section.key = value`, got `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| ChoquardError::Config {
                key: key.to_string(),
                message: format!("cannot parse `{v}`"),
            })
        }
        match key {
            "grid.n" => self.grid_n = num(key, value)?,
            "grid.rmax" => self.grid_rmax = num(key, value)?,
            "grid.grade" => self.grid_grade = num(key, value)?,
            "grid.core_cut" => self.grid_core_cut = num(key, value)?,
            "nonlinearity.family" => self.nl_family = value.to_string(),
            "nonlinearity.kappa" => self.nl_kappa = num(key, value)?,
            "nonlinearity.q" => self.nl_q = num(key, value)?,
            "nonlinearity.a" => self.nl_a = num(key, value)?,
            "nonlinearity.tau" => self.nl_tau = Some(num(key, value)?),
            "nonlinearity.beta" => self.nl_beta = Some(num(key, value)?),
            "nonlinearity.rho" => self.nl_rho = Some(num(key, value)?),
            "kernel.alpha" => self.kernel_alpha = num(key, value)?,
            "kernel.cache_dir" => self.kernel_cache_dir = Some(PathBuf::from(value)),
            "solver.path_nodes" => self.solver_path_nodes = num(key, value)?,
            "solver.tol" => self.solver_tol = num(key, value)?,
            "solver.max_iter" => self.solver_max_iter = num(key, value)?,
            "solver.newton" => {
                self.solver_newton = match value {
                    "true" | "on" | "1" => true,
                    "false" | "off" | "0" => false,
                    _ => {
                        return Err(ChoquardError::Config {
                            key: key.into(),
                            message: format!("expected true/false, got `{value}`"),
                        })
                    }
                }
            }
            "continuation.alpha0" => self.continuation_alpha0 = num(key, value)?,
            "continuation.steps" => self.continuation_steps = num(key, value)?,
            "continuation.omega" => self.continuation_omega = num(key, value)?,
            "certify.sets" => {
                self.certify_sets =
                    value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
            }
            "certify.seed" => self.certify_seed = num(key, value)?,
            "certify.moser_n" => self.certify_moser_n = num(key, value)?,
            "output.dir" => self.output_dir = PathBuf::from(value),
            "runtime.workers" => self.runtime_workers = num(key, value)?,
            _ => {
                return Err(ChoquardError::Config {
                    key: key.to_string(),
                    message: "unknown key".into(),
                })
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let fail = |key: &str, message: String| -> Result<()> {
            Err(ChoquardError::Config { key: key.into(), message })
        };
        if self.grid_n < 3 {
            return fail("grid.n", format!("need at least 3 nodes, got {}", self.grid_n));
        }
        if !(self.grid_rmax > 0.0) {
            return fail("grid.rmax", format!("must be positive, got {}", self.grid_rmax));
        }
        if !(self.grid_grade >= 1.0) {
            return fail("grid.grade", format!("must be >= 1, got {}", self.grid_grade));
        }
        if !(self.grid_core_cut >= 0.0 && self.grid_core_cut < self.grid_rmax) {
            return fail("grid.core_cut", "must lie in [0, rmax)".into());
        }
        if !(self.kernel_alpha > 0.0 && self.kernel_alpha < 1.0) {
            return fail(
                "kernel.alpha",
                format!("alpha = {} outside the admissible range (0, 1)", self.kernel_alpha),
            );
        }
        if !["power", "exp_critical", "paper_example"].contains(&self.nl_family.as_str()) {
            return fail(
                "nonlinearity.family",
                format!("unknown family `{}`", self.nl_family),
            );
        }
        if self.solver_path_nodes < 3 {
            return fail("solver.path_nodes", "need at least 3 path nodes".into());
        }
        if !(self.solver_tol > 0.0) {
            return fail("solver.tol", "tolerance must be positive".into());
        }
        if !(self.continuation_alpha0 > 0.0 && self.continuation_alpha0 < 1.0) {
            return fail("continuation.alpha0", "must lie in (0, 1)".into());
        }
        if self.continuation_steps == 0 {
            return fail("continuation.steps", "need at least one step".into());
        }
        if !(self.continuation_omega > 1.0) {
            return fail("continuation.omega", "must exceed 1".into());
        }
        for s in &self.certify_sets {
            if !KNOWN_SETS.contains(&s.as_str()) {
                return fail("certify.sets", format!("unknown certificate set `{s}`"));
            }
        }
        Ok(())
    }

    /// Non-fatal advisories (currently: dense-operator memory pressure).
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.grid_n > crate::kernel::DEFAULT_MAX_OPERATOR_N {
            out.push(format!(
                "grid.n = {}: the dense N² operator needs {:.1} GiB; solves are capped at N = {}",
                self.grid_n,
                (self.grid_n * self.grid_n * 8) as f64 / (1u64 << 30) as f64,
                crate::kernel::DEFAULT_MAX_OPERATOR_N
            ));
        }
        out
    }

    pub fn build_grid(&self) -> Result<Arc<RadialGrid>> {
        Ok(Arc::new(RadialGrid::new(
            self.grid_n,
            self.grid_rmax,
            self.grid_grade,
            self.grid_core_cut,
        )?))
    }

    pub fn build_nonlinearity(&self) -> Result<Nonlinearity> {
        let base = match self.nl_family.as_str() {
            "power" => Nonlinearity::power(self.nl_kappa, self.nl_q)?,
            "exp_critical" => Nonlinearity::exp_critical_with_growth(self.nl_kappa, self.nl_a)?,
            "paper_example" => Nonlinearity::paper_example()?,
            other => {
                return Err(ChoquardError::Config {
                    key: "nonlinearity.family".into(),
                    message: format!("unknown family `{other}`"),
                })
            }
        };
        match (self.nl_tau, self.nl_beta, self.nl_rho) {
            (None, None, None) => Ok(base),
            (tau, beta, rho) => {
                let (t, b, r) = (
                    tau.unwrap_or(base.tau()),
                    beta.unwrap_or(base.beta()),
                    rho.unwrap_or(base.rho()),
                );
                base.with_declared(t, b, r)
            }
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            path_nodes: self.solver_path_nodes,
            tol: self.solver_tol,
            max_iter: self.solver_max_iter,
            newton: self.solver_newton,
            ..SolveOptions::default()
        }
    }

    pub fn continuation_options(&self) -> ContinuationOptions {
        ContinuationOptions {
            solve: self.solve_options(),
            cache_dir: self.effective_cache_dir(),
            ..ContinuationOptions::default()
        }
    }

    /// `CHOQUARD_CACHE` overrides `kernel.cache_dir`.
    pub fn effective_cache_dir(&self) -> Option<PathBuf> {
        match std::env::var_os("CHOQUARD_CACHE") {
            Some(v) if !v.is_empty() => Some(PathBuf::from(v)),
            _ => self.kernel_cache_dir.clone(),
        }
    }

    pub fn wants_set(&self, name: &str) -> bool {
        self.certify_sets.iter().any(|s| s == name || s == "all")
    }
}
