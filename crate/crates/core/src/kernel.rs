//! Kernels and radial convolution operators.
//!
//! The solver works with the kernel family `G_α(x) = (|x|^{-α} - 1)/α`,
//! `α ∈ (0,1)`, which decreases pointwise to `ln(1/|x|)` as `α → 0⁺`.
//! Planar convolutions of radial profiles reduce to one-dimensional sums
//! against angular averages
//!
//! ```text
//!     A(r, s) = (1/2π) ∫₀^{2π} K(√(r² + s² - 2 r s cos θ)) dθ,
//! ```
//!
//! for which the logarithmic kernel has the closed form
//! `A_log(r, s) = -ln max(r, s)` while the Riesz kernel `|x|^{-α}` is
//! integrated adaptively (the θ → 0 singularity on the diagonal `r = s` is
//! removed by a power substitution). A dense table `T_ij = A(r_i, r_j) w_j`
//! then realizes `(K ∗ g)(r_i) ≈ Σ_j T_ij g_j`, and the `G_α` convolution
//! uses the split `(G_α ∗ g) = [(|·|^{-α} ∗ g) - ∫ g] / α`.

use rayon::prelude::*;
use serde::Serialize;
use std::io::{Read as IoRead, Write as IoWrite};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::grid::RadialGrid;
use crate::quad::adaptive;
use crate::report::CertResult;
use crate::{ChoquardError, Result};

/// Default hard cap on dense operator size (N² table).
pub const DEFAULT_MAX_OPERATOR_N: usize = 8192;

/// Relative separation below which the angular quadrature switches to the
/// singularity-absorbing substitution.
const NEAR_DIAGONAL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum KernelSpec {
    /// `|x|^{-α}` with `α ∈ (0, 1)`.
    Riesz { alpha: f64 },
    /// `ln(1/|x|)`.
    Log,
}

impl KernelSpec {
    pub fn riesz(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
            return Err(ChoquardError::InvalidKernel(format!("alpha = {alpha} not in (0, 1)")));
        }
        Ok(KernelSpec::Riesz { alpha })
    }

    pub fn log() -> Self {
        KernelSpec::Log
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            KernelSpec::Riesz { alpha } => Some(*alpha),
            KernelSpec::Log => None,
        }
    }

    fn tag(&self) -> u8 {
        match self {
            KernelSpec::Riesz { .. } => 1,
            KernelSpec::Log => 2,
        }
    }
}

/// `G_α(s) = (s^{-α} - 1)/α`, computed through `expm1` so small `α` does
/// not lose digits.
pub fn g_alpha(s: f64, alpha: f64) -> Result<f64> {
    if !(s.is_finite() && s > 0.0) {
        return Err(ChoquardError::InvalidKernel(format!("G_alpha needs s > 0, got {s}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ChoquardError::InvalidKernel(format!("alpha = {alpha} not in (0, 1)")));
    }
    Ok(f64::exp_m1(-alpha * s.ln()) / alpha)
}

/// Numerical check of the two kernel bounds used throughout:
/// `G_α(s) <= C_β s^{-β}` for every `β > α` (the sup over the mesh is the
/// empirical `C_β`) and `G_α(s) >= ln(1/s)` on `(0, 1]` (violation must be
/// at rounding level).
pub fn lemma_g_bounds(alpha: f64, beta: f64, mesh: &[f64]) -> Result<CertResult> {
    if !(beta > alpha) {
        return Err(ChoquardError::InvalidKernel(format!(
            "bound exponent beta = {beta} must exceed alpha = {alpha}"
        )));
    }
    let mut c_beta = f64::NEG_INFINITY;
    let mut c_witness = f64::NAN;
    let mut violation = 0.0f64;
    let mut v_witness = f64::NAN;
    for &s in mesh.iter().filter(|&&s| s > 0.0) {
        let g = g_alpha(s, alpha)?;
        let scaled = g * s.powf(beta);
        if scaled > c_beta {
            c_beta = scaled;
            c_witness = s;
        }
        if s <= 1.0 {
            let lower = -s.ln();
            let v = lower - g;
            if v > violation {
                violation = v;
                v_witness = s;
            }
        }
    }
    Ok(CertResult::new("kernel_bounds")
        .detail("alpha", alpha)
        .detail("beta", beta)
        .detail("c_beta", c_beta)
        .detail("c_beta_witness", c_witness)
        .detail("lower_violation", violation)
        .detail("lower_violation_witness", v_witness)
        .require(c_beta.is_finite(), "C_beta must be finite on the mesh")
        .require(violation <= 1e-12, "G_alpha(s) >= ln(1/s) on (0,1]"))
}

/// Angular average of the kernel over a circle: see the module docs.
/// For `Log` this is the closed form `-ln max(r, s)`; for `Riesz` it is an
/// adaptive quadrature. Requires `max(r, s) > 0`.
pub fn angular_avg(spec: &KernelSpec, r: f64, s: f64) -> Result<f64> {
    let (lo, hi) = if r <= s { (r, s) } else { (s, r) };
    if !(hi > 0.0) {
        return Err(ChoquardError::InvalidKernel(
            "angular average is singular at r = s = 0".into(),
        ));
    }
    match spec {
        KernelSpec::Log => Ok(-hi.ln()),
        KernelSpec::Riesz { alpha } => {
            if lo == 0.0 {
                return Ok(hi.powf(-alpha));
            }
            riesz_angular_avg(lo, hi, *alpha)
        }
    }
}

/// Adaptive angular average of `|x|^{-α}`; `0 < lo <= hi`.
fn riesz_angular_avg(lo: f64, hi: f64, alpha: f64) -> Result<f64> {
    // |x - y|² = (r - s)² + 4 r s sin²(θ/2): no cancellation near θ = 0
    let diff2 = (hi - lo) * (hi - lo);
    let cross = 4.0 * lo * hi;
    let scale = hi.powf(-alpha);
    let integrand = move |theta: f64| {
        let sh = (0.5 * theta).sin();
        (diff2 + cross * sh * sh).powf(-alpha / 2.0)
    };

    let total = if (hi - lo) < NEAR_DIAGONAL * hi {
        // Near the diagonal the integrand peaks like θ^{-α} at θ = 0.
        // On [0, π/2] substitute θ = (π/2) v^k with integer k >= 2/(1-α):
        // the jacobian is polynomial, and on the exact diagonal the
        // composite behaves like v^{k(1-α)-1}, at least C¹ at v = 0.
        let theta_c = std::f64::consts::FRAC_PI_2;
        let k = (2.0 / (1.0 - alpha)).ceil() as i32;
        let singular = adaptive(
            |v: f64| {
                let theta = theta_c * v.powi(k);
                integrand(theta) * theta_c * k as f64 * v.powi(k - 1)
            },
            0.0,
            1.0,
            1e-10,
            1e-12 * scale,
            26,
            512,
            "riesz angular average (diagonal panel)",
        )?;
        let smooth = adaptive(
            integrand,
            theta_c,
            std::f64::consts::PI,
            1e-10,
            1e-12 * scale,
            20,
            256,
            "riesz angular average (outer panel)",
        )?;
        singular + smooth
    } else {
        adaptive(
            integrand,
            0.0,
            std::f64::consts::PI,
            1e-9,
            1e-11 * scale,
            24,
            768,
            "riesz angular average",
        )?
    };
    Ok(total / std::f64::consts::PI)
}

/// Dense radial convolution operator `T_ij = A(r_i, r_j) w_j`.
///
/// Diagonal entries are cell averages of `A(r_i, ·)` over the quadrature
/// cell of node `i` (in the `t = s²` variable), which keeps the `r = s`
/// kernel cusp and the `r = s = 0` singularity integrable.
#[derive(Debug, Clone)]
pub struct ConvolutionOperator {
    grid: Arc<RadialGrid>,
    spec: KernelSpec,
    table: Vec<f64>,
}

impl ConvolutionOperator {
    pub fn build(grid: Arc<RadialGrid>, spec: KernelSpec) -> Result<Self> {
        Self::build_with_limit(grid, spec, DEFAULT_MAX_OPERATOR_N)
    }

    pub fn build_with_limit(grid: Arc<RadialGrid>, spec: KernelSpec, max_n: usize) -> Result<Self> {
        let n = grid.len();
        if n > max_n {
            return Err(ChoquardError::OperatorTooLarge { n, max: max_n });
        }

        // kernel values on the upper triangle, row-parallel; entries are
        // pure functions of (i, j), so assembly order cannot change bits
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| -> Result<Vec<f64>> {
                let mut row = Vec::with_capacity(n - i);
                for j in i..n {
                    let v = if i == j {
                        cell_averaged_diagonal(&grid, &spec, i)?
                    } else {
                        angular_avg(&spec, grid.nodes()[i], grid.nodes()[j])?
                    };
                    row.push(v);
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;

        let w = grid.weights();
        let mut table = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k = rows[i][j - i];
                table[i * n + j] = k * w[j];
                table[j * n + i] = k * w[i];
            }
        }
        Ok(Self { grid, spec, table })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// `(K ∗ g)(r_i) = Σ_j T_ij g_j` — raw kernel convolution. Row sums
    /// run sequentially within each row, so results do not depend on the
    /// worker count.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        debug_assert_eq!(g.len(), n);
        let mut out = vec![0.0; n];
        out.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let row = &self.table[i * n..(i + 1) * n];
            *yi = row.iter().zip(g).map(|(t, gj)| t * gj).sum();
        });
        out
    }

    /// `(G_α ∗ g)(r_i) = [(|·|^{-α} ∗ g)(r_i) - ∫ g] / α` via the split.
    /// Only available for Riesz operators.
    pub fn apply_g_alpha(&self, g: &[f64]) -> Result<Vec<f64>> {
        let alpha = self.spec.alpha().ok_or_else(|| {
            ChoquardError::InvalidKernel("G_alpha split requires a Riesz operator".into())
        })?;
        let mass = self.grid.integrate_samples(g);
        let mut out = self.apply(g);
        for v in &mut out {
            *v = (*v - mass) / alpha;
        }
        Ok(out)
    }

    /// `⟨K ∗ g, h⟩ = Σ_i w_i h_i (K ∗ g)_i`.
    pub fn bilinear(&self, g: &[f64], h: &[f64]) -> f64 {
        let conv = self.apply(g);
        self.grid
            .weights()
            .iter()
            .zip(h)
            .zip(&conv)
            .map(|((w, hi), ci)| w * hi * ci)
            .sum()
    }

    /// Cache file name for this operator under `dir`.
    pub fn cache_path(dir: &Path, grid: &RadialGrid, spec: &KernelSpec) -> PathBuf {
        let alpha_bits = spec.alpha().unwrap_or(0.0).to_bits();
        dir.join(format!(
            "op_k{}_a{:016x}_n{}_g{:016x}.bin",
            spec.tag(),
            alpha_bits,
            grid.len(),
            grid.hash()
        ))
    }

    /// Binary dump: magic, version, kind, alpha, n, grid hash, table.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(b"CHQK")?;
        f.write_all(&1u32.to_le_bytes())?;
        f.write_all(&[self.spec.tag()])?;
        f.write_all(&self.spec.alpha().unwrap_or(0.0).to_le_bytes())?;
        f.write_all(&(self.grid.len() as u64).to_le_bytes())?;
        f.write_all(&self.grid.hash().to_le_bytes())?;
        for v in &self.table {
            f.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Loads a cached operator, verifying that it matches `grid` and `spec`.
    pub fn load(path: &Path, grid: Arc<RadialGrid>, spec: KernelSpec) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut buf4 = [0u8; 4];
        f.read_exact(&mut buf4)?;
        if &buf4 != b"CHQK" {
            return Err(ChoquardError::Io(format!("{}: not an operator cache", path.display())));
        }
        f.read_exact(&mut buf4)?;
        let mut b1 = [0u8; 1];
        f.read_exact(&mut b1)?;
        let mut b8 = [0u8; 8];
        f.read_exact(&mut b8)?;
        let alpha = f64::from_le_bytes(b8);
        f.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        f.read_exact(&mut b8)?;
        let hash = u64::from_le_bytes(b8);
        let spec_alpha = spec.alpha().unwrap_or(0.0);
        if b1[0] != spec.tag() || alpha.to_bits() != spec_alpha.to_bits() {
            return Err(ChoquardError::Io("cached operator kernel mismatch".into()));
        }
        if n != grid.len() || hash != grid.hash() {
            return Err(ChoquardError::Io("cached operator grid mismatch".into()));
        }
        let mut table = vec![0.0; n * n];
        for v in &mut table {
            f.read_exact(&mut b8)?;
            *v = f64::from_le_bytes(b8);
        }
        Ok(Self { grid, spec, table })
    }

    /// Loads from `cache_dir` when a valid cache exists, else builds and
    /// stores one. `None` disables caching.
    pub fn load_or_build(
        grid: Arc<RadialGrid>,
        spec: KernelSpec,
        cache_dir: Option<&Path>,
        max_n: usize,
    ) -> Result<Self> {
        if let Some(dir) = cache_dir {
            let path = Self::cache_path(dir, &grid, &spec);
            if path.exists() {
                if let Ok(op) = Self::load(&path, grid.clone(), spec) {
                    return Ok(op);
                }
            }
            let op = Self::build_with_limit(grid, spec, max_n)?;
            std::fs::create_dir_all(dir)?;
            op.save(&path)?;
            Ok(op)
        } else {
            Self::build_with_limit(grid, spec, max_n)
        }
    }
}

/// Cell average of `A(r_i, s)` over quadrature cell `i`, integrating in
/// `t = s²` so the average is consistent with the grid weights.
fn cell_averaged_diagonal(grid: &RadialGrid, spec: &KernelSpec, i: usize) -> Result<f64> {
    let t: Vec<f64> = {
        let r = grid.nodes();
        let n = r.len();
        let ti = r[i] * r[i];
        let lo = if i == 0 { 0.0 } else { 0.5 * (r[i - 1] * r[i - 1] + ti) };
        let hi = if i == n - 1 { ti } else { 0.5 * (ti + r[i + 1] * r[i + 1]) };
        vec![lo, ti, hi]
    };
    let (lo, ti, hi) = (t[0], t[1], t[2]);
    let width = hi - lo;
    let ri = grid.nodes()[i];

    match spec {
        KernelSpec::Log => {
            // ∫ -ln max(r_i, sqrt(t)) dt: constant -ln r_i below t_i, then
            // -(1/2) ln t, with ∫ ln t dt = t ln t - t. At i = 0 only the
            // singular part remains and the value is -(ln hi)/2 + 1/2.
            let int_log = |a: f64, b: f64| -> f64 {
                let fa = if a == 0.0 { 0.0 } else { a * a.ln() - a };
                (b * b.ln() - b - fa) * -0.5
            };
            let v = if i == 0 {
                int_log(0.0, hi)
            } else {
                -ri.ln() * (ti - lo) + int_log(ti, hi)
            };
            Ok(v / width)
        }
        KernelSpec::Riesz { alpha } => {
            if i == 0 {
                // ∫₀^hi t^{-α/2} dt = hi^{1-α/2} / (1 - α/2), closed form
                return Ok(hi.powf(1.0 - alpha / 2.0) / (1.0 - alpha / 2.0) / width);
            }
            // A(r_i, sqrt(t)) has an |t - t_i|^{1-α} cusp at t_i; the
            // substitution t = t_i + Δ ξ^q with q(1-α) >= 2 makes each
            // side smooth enough for a fixed 8-point Gauss rule.
            let q = (2.0 / (1.0 - alpha)).ceil();
            let mut acc = 0.0;
            for end in [lo, hi] {
                let delta = end - ti;
                if delta == 0.0 {
                    continue;
                }
                let mut side = 0.0;
                for (&x, &wq) in crate::quad::GL8_X.iter().zip(crate::quad::GL8_W.iter()) {
                    let t = ti + delta * x.powf(q);
                    let s = t.max(0.0).sqrt();
                    side += wq * angular_avg(spec, ri, s)? * q * x.powf(q - 1.0);
                }
                acc += side * delta.abs();
            }
            Ok(acc / width)
        }
    }
}
