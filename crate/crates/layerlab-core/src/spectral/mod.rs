//! Sparse symmetric generalized eigensolver and linear solvers.
//!
//! The eigensolver follows the blocked preconditioned conjugate-gradient
//! contract: Ritz values decrease monotonically across iterations, the
//! returned block is M-orthonormal, convergence is measured by the
//! `M^{-1}`-weighted residual, and the preconditioner is the diagonal of
//! `K + M`. Starting blocks are seeded from a fixed RNG seed so repeated
//! runs are bit-identical; callers may supply warm-start vectors (for
//! example, interpolants of a coarse-grid solve), which is likewise
//! deterministic.
//!
//! Diagnostics stream as one JSON object per log line under the
//! `layerlab_spectral` target.

pub mod cg;
pub mod dense;
pub mod kernels;
mod lobpcg;

pub use cg::solve_spd;
pub use lobpcg::{count_below, smallest_eigenpairs, spectrum_below, SpectrumBelow, COUNT_CAP};

use thiserror::Error;

/// Fixed seed for eigensolver starting blocks.
pub const DEFAULT_SEED: u64 = 0xFE41;

/// Default residual tolerance for eigenpairs.
pub const DEFAULT_EIG_TOL: f64 = 1e-8;

/// Default iteration cap across all deflation batches.
pub const DEFAULT_MAX_ITER: usize = 5000;

#[derive(Debug, Clone)]
pub struct EigOptions {
    /// Residual tolerance: `||K v - lambda M v||_{M^{-1}} <= tol`.
    pub tol: f64,
    /// Total iteration budget across batches.
    pub max_iter: usize,
    /// Trial block size; chosen from the request when `None`.
    pub block_size: Option<usize>,
    /// RNG seed for starting blocks.
    pub seed: u64,
    /// Warm-start vectors, one per wanted eigenpair (prefix is fine).
    pub initial: Option<Vec<Vec<f64>>>,
    /// Record per-iteration Ritz values in [`EigenResult::ritz_history`].
    pub history: bool,
    /// Force the dense decomposition regardless of problem size (used at
    /// the coarsest level of nested warm-start chains).
    pub force_dense: bool,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_EIG_TOL,
            max_iter: DEFAULT_MAX_ITER,
            block_size: None,
            seed: DEFAULT_SEED,
            initial: None,
            history: false,
            force_dense: false,
        }
    }
}

impl EigOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Converged eigenpairs, ascending; vectors are M-orthonormal.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// `||K v - lambda M v||_{M^{-1}} / ||v||_M` per pair.
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Per-iteration Ritz values of the active block (when requested).
    pub ritz_history: Vec<Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("eigensolver did not converge within {iterations} iterations")]
    EigenNoConvergence {
        iterations: usize,
        /// Best pairs found so far (flagged `converged = false`).
        best: Box<EigenResult>,
    },
    #[error("conjugate gradients stalled after {iterations} iterations (relative residual {residual:.3e})")]
    CgNoConvergence { iterations: usize, residual: f64 },
    #[error("more than {cap} eigenvalues below the requested threshold")]
    CountCapExceeded { cap: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}
