//! Numerical solver and certificate checker for the planar logarithmic
//! Choquard equation
//!
//! ```text
//!     -Δu + u = (ln(1/|x|) ∗ F(u)) f(u)   in ℝ²,
//! ```
//!
//! approached through the kernel family G_α(x) = (|x|^{-α} - 1)/α, which
//! converges to ln(1/|x|) as α → 0⁺. For each fixed α the regularized
//! energy is C¹ on H¹_r(ℝ²) and has mountain-pass geometry; critical
//! points are computed by a path-deformation algorithm plus Newton
//! refinement, then continued along a decreasing α-schedule toward the
//! logarithmic limit.
//!
//! Alongside the solver, the crate verifies every closed-form identity
//! and inequality that the underlying analysis uses: Moser-function norm
//! identities, kernel bounds, mountain-pass level estimates below 1/2,
//! Hardy-Littlewood-Sobolev quotients, Cerami-sequence bounds, and
//! uniform exponential decay of solutions.

pub mod certificates;
pub mod config;
pub mod continuation;
pub mod energy;
mod error;
pub mod grid;
pub mod kernel;
pub mod laplacian;
pub mod nonlinearity;
mod quad;
pub mod report;
pub mod solver;

pub use error::ChoquardError;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, ChoquardError>;
