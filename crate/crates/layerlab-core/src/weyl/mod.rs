//! Quadratic-form Weyl criterion machinery.
//!
//! Membership of `lambda` in the essential spectrum is probed with
//! families `psi_n = xi_n (x) sigma_1`: compactly supported cosine packets
//! along the base tensored with the fiber ground state, with pairwise
//! disjoint supports and geometrically growing radii. The criterion is
//! evaluated in the discrete dual norm
//! `||v||_{-1} = sqrt(v^T (K + M)^{-1} v)`: quotients that decay with the
//! packet radius certify `lambda`, quotients pinned above the
//! spectral-gap floor `floor_slack * eps / sqrt(lambda + eps + 1)` reject
//! it, and anything else is reported inconclusive. The decision
//! thresholds encode the gap between the continuum statement and a finite
//! grid; they are configuration values recorded verbatim in every report.

mod dual;
mod matrix_bound;
mod packets;
mod scan;

pub use dual::{dual_norm, weyl_quotient, DualNormSolver, QuotientReport};
pub use matrix_bound::{matrix_weyl_bound, WeylBoundCertificate, MATRIX_BOUND_CAP};
pub use packets::{build_singular_family, bump_c2, PacketParams, SingularFamily};
pub use scan::{certify_scan, certify_scan_with_spectrum, decide, LambdaVerdict, ScanDecision, ScanReport, SpectrumInfo};

use crate::spectral::SpectralError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Decision thresholds for the certification scan. The defaults are the
/// shipped configuration; reports quote them verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylThresholds {
    /// Certification needs a fitted log-log slope at or below this.
    pub slope_max: f64,
    /// Certification ceiling `c_disc * (h + 1/R_last)` on the last quotient.
    pub c_disc: f64,
    /// Slack factor on the spectral-gap floor used for rejection.
    pub floor_slack: f64,
    /// First packet radius in units of the fiber width.
    pub r0_fiber_widths: f64,
    /// Packet count (minimum 3 for the slope fit).
    pub n_members: usize,
    /// Relative residual for the dual-norm CG solves.
    pub cg_tol: f64,
    /// Eigenvalues are computed up to `E_1 + eig_margin` for gap estimates.
    pub eig_margin: f64,
    /// Cap on the number of computed eigenvalues.
    pub eig_cap: usize,
    /// Residual tolerance for those eigenpairs.
    pub eig_tol: f64,
}

impl Default for WeylThresholds {
    fn default() -> Self {
        Self {
            slope_max: -0.3,
            c_disc: 0.8,
            floor_slack: 0.2,
            r0_fiber_widths: 8.0,
            n_members: 3,
            cg_tol: 1e-10,
            eig_margin: 0.02,
            eig_cap: 200,
            eig_tol: 1e-2,
        }
    }
}

#[derive(Debug, Error)]
pub enum WeylError {
    #[error("domain too short for the radius schedule: need {needed:.2}, have {available:.2} (max feasible members: {max_feasible})")]
    DomainTooShort { needed: f64, available: f64, max_feasible: usize },
    #[error("lambda = {lambda} lies in the spectrum (distance {distance:.3e}); the gap bound is vacuous")]
    LambdaInSpectrum { lambda: f64, distance: f64 },
    #[error("dense matrix of size {n} exceeds the harness cap {cap}")]
    MatrixTooLarge { n: usize, cap: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Solver(#[from] SpectralError),
}
