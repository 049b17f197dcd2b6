//! Weak-form discretization of `-Δ_r + 1` on the radial grid.
//!
//! The quadratic part of the energy is assembled in P1 finite-element
//! form: on each interval the gradient is the interval slope and the
//! annulus area `π (r_{i+1}² - r_i²)` is exact, so
//!
//! ```text
//!   uᵀ M u = Σ_i ((u_{i+1} - u_i)/h_i)² π (t_{i+1} - t_i) + Σ_i u_i² w_i,
//! ```
//!
//! with `t = r²` and the grid's own mass weights. The discrete gradient of
//! the energy is exactly `M u`, which is what makes the finite-difference
//! gradient checks pass at rounding level. `M` is symmetric positive
//! definite and tridiagonal with nonpositive off-diagonal entries (an
//! M-matrix), so oscillatory node patterns carry full H¹ cost — a
//! centered-difference form would leave them nearly free on a graded mesh
//! and admit spurious spike solutions at the origin.

use std::sync::Arc;

use crate::grid::RadialGrid;
use crate::{ChoquardError, Result};

const BW: usize = 2;

/// `M = B + W` (P1 stiffness plus lumped mass) with its banded Cholesky
/// factor. Also serves as the H¹ inner product and the Sobolev-gradient
/// preconditioner. Banded storage keeps bandwidth 2 for interface
/// stability; the second band is identically zero.
#[derive(Debug, Clone)]
pub struct H1Form {
    grid: Arc<RadialGrid>,
    /// upper-band storage: bands[k][i] = M[i][i+k], k = 0..=2
    bands: [Vec<f64>; 3],
    /// lower-band Cholesky: chol[k][i] = L[i][i-k]
    chol: [Vec<f64>; 3],
}

impl H1Form {
    pub fn new(grid: Arc<RadialGrid>) -> Result<Self> {
        let n = grid.len();
        let r = grid.nodes();
        let w = grid.weights();
        let mut bands = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];

        for i in 0..n - 1 {
            let h = r[i + 1] - r[i];
            let area = std::f64::consts::PI * (r[i + 1] * r[i + 1] - r[i] * r[i]);
            let k = area / (h * h);
            bands[0][i] += k;
            bands[0][i + 1] += k;
            bands[1][i] -= k;
        }
        for i in 0..n {
            bands[0][i] += w[i];
        }

        let chol = banded_cholesky(&bands, n)?;
        Ok(Self { grid, bands, chol })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Upper-band accessor: `band(k)[i] = M[i][i+k]`, `k <= 2`.
    pub fn band(&self, k: usize) -> &[f64] {
        &self.bands[k]
    }

    /// `M u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.bands[0][i] * u[i];
            for k in 1..=BW {
                if i + k < n {
                    acc += self.bands[k][i] * u[i + k];
                }
                if i >= k {
                    acc += self.bands[k][i - k] * u[i - k];
                }
            }
            out[i] = acc;
        }
        out
    }

    /// `uᵀ M u` — the squared discrete H¹ norm.
    pub fn quadratic(&self, u: &[f64]) -> f64 {
        u.iter().zip(self.apply(u)).map(|(a, b)| a * b).sum()
    }

    /// `uᵀ M v` — the discrete H¹ inner product.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(self.apply(v)).map(|(a, b)| a * b).sum()
    }

    /// Solves `M x = b` (two banded triangular sweeps).
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let l = &self.chol;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = b[i];
            for k in 1..=BW.min(i) {
                acc -= l[k][i] * y[i - k];
            }
            y[i] = acc / l[0][i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = y[i];
            for k in 1..=BW {
                if i + k < n {
                    acc -= l[k][i + k] * x[i + k];
                }
            }
            x[i] = acc / l[0][i];
        }
        x
    }
}

fn banded_cholesky(bands: &[Vec<f64>; 3], n: usize) -> Result<[Vec<f64>; 3]> {
    let mut l = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let j0 = i.saturating_sub(BW);
        for j in j0..i {
            // L[i][j] = (M[i][j] - sum_k L[i][k] L[j][k]) / L[j][j]
            let mut acc = bands[i - j][j];
            let k0 = i.saturating_sub(BW).max(j.saturating_sub(BW));
            for k in k0..j {
                acc -= l[i - k][i] * l[j - k][j];
            }
            l[i - j][i] = acc / l[0][j];
        }
        let mut acc = bands[0][i];
        for k in j0..i {
            acc -= l[i - k][i] * l[i - k][i];
        }
        if acc <= 0.0 {
            return Err(ChoquardError::Solver(format!(
                "H1 form lost positive definiteness at row {i}"
            )));
        }
        l[0][i] = acc.sqrt();
    }
    Ok(l)
}
