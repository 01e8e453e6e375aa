//! Immersed-base data, normal frames, and the Fermi-coordinate metric.
//!
//! The layer metric in Fermi coordinates `(x, u)` is assembled pointwise
//! from the base metric `g`, the contracted second fundamental form
//! `S_{alpha,ij} = <S_{f_alpha}(d_i), d_j>` and the normal-connection
//! coefficients `Gamma_{i,alpha,beta} = <nabla^perp_i f_alpha, f_beta>`:
//!
//! ```text
//! G_ij        = g_ij - 2 u_a S_{a,ij} + u_a u_b (S_a g^{-1} S_b)_ij
//!               + sum_c W_ic W_jc
//! G_{i,beta}  = W_{i,beta}            with  W_{i,b} = u_a Gamma_{i,a,b}
//! G_{ab}      = delta_ab
//! ```
//!
//! Writing the quadratic connection term through the same `W` as the
//! off-block makes `det G = det(G_ij - W W^T)` hold exactly in floating
//! point, which is what the reduced-metric determinant identity checks.
//!
//! Bases come in two kinds. Curves are specified directly by curvature
//! and torsion profiles (the metric only consumes `<S f, d>` and
//! `nabla^perp`, so reconstructing an embedding would add nothing but
//! noise). Graphs over a plane carry sampled height functions `sigma_a`
//! from which frames and the shape operator are differenced numerically.

mod deformation;
mod export;
mod graph;
mod metric;
pub mod profiles;

pub use deformation::{deformation_tensors, deformation_vs_unperturbed, DeformationTensors};
pub use export::{read_metric_binary, write_metric_binary, MetricBinaryHeader};
pub use graph::{build_normal_frames, second_fundamental_form, NormalFrameField, ShapeOperatorField};
pub use metric::{fermi_metric, reduced_metric_tilde, FermiMetricField, ReducedMetricField};
pub use profiles::Profile1d;

use crate::grid::BaseGrid;
use thiserror::Error;

/// Orthonormality tolerance for frames after Gram-Schmidt.
pub const FRAME_TOL: f64 = 1e-8;
/// Condition-number cap on the induced base metric.
pub const COND_MAX: f64 = 1e8;
/// Reference determinants below this are treated as singular.
pub const DET_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone)]
pub enum BaseKind {
    /// `dim = 1` base given by curvature profiles `kappa_alpha(x)` (one per
    /// normal direction) and, for `codim = 2`, a torsion profile
    /// `tau = <nabla^perp_1 f_1, f_2>`.
    CurveByCurvature {
        curvature: Vec<Profile1d>,
        torsion: Option<Profile1d>,
    },
    /// Graph over a coordinate plane: sampled heights `sigma_alpha` on a
    /// uniform grid.
    GraphOverPlane(GraphData),
}

#[derive(Debug, Clone)]
pub struct ImmersedBase {
    pub dim: usize,
    pub codim: usize,
    pub kind: BaseKind,
}

#[derive(Debug, Clone)]
pub struct GraphData {
    pub grid: BaseGrid,
    /// One sampled height function per extra dimension, vertex-ordered.
    pub sigma: Vec<Vec<f64>>,
}

impl ImmersedBase {
    pub fn curve(
        codim: usize,
        curvature: Vec<Profile1d>,
        torsion: Option<Profile1d>,
    ) -> Result<Self, GeometryError> {
        if codim == 0 {
            return Err(GeometryError::InvalidBase("codim must be at least 1".into()));
        }
        if curvature.len() != codim {
            return Err(GeometryError::InvalidBase(format!(
                "need {} curvature profiles, got {}",
                codim,
                curvature.len()
            )));
        }
        if torsion.is_some() && codim != 2 {
            return Err(GeometryError::InvalidBase(
                "torsion profiles only apply to codim = 2 curves".into(),
            ));
        }
        Ok(Self { dim: 1, codim, kind: BaseKind::CurveByCurvature { curvature, torsion } })
    }

    pub fn graph(codim: usize, data: GraphData) -> Result<Self, GeometryError> {
        let dim = data.grid.dim();
        if dim == 0 || codim == 0 {
            return Err(GeometryError::InvalidBase("dim and codim must be at least 1".into()));
        }
        if data.sigma.len() != codim {
            return Err(GeometryError::InvalidBase(format!(
                "need {} height functions, got {}",
                codim,
                data.sigma.len()
            )));
        }
        let n = data.grid.n_vertices();
        for (a, s) in data.sigma.iter().enumerate() {
            if s.len() != n {
                return Err(GeometryError::InvalidBase(format!(
                    "sigma_{} has {} samples for a grid of {} vertices",
                    a + 1,
                    s.len(),
                    n
                )));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(GeometryError::InvalidBase(format!(
                    "sigma_{} contains non-finite samples",
                    a + 1
                )));
            }
        }
        for ax in &data.grid.axes {
            if !(ax.spacing > 0.0) {
                return Err(GeometryError::InvalidBase("grid spacing must be positive".into()));
            }
        }
        Ok(Self { dim, codim, kind: BaseKind::GraphOverPlane(data) })
    }

    pub fn total_dim(&self) -> usize {
        self.dim + self.codim
    }
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("axis {axis} has only {points} grid points (need at least 3)")]
    GridTooCoarse { axis: usize, points: usize },
    #[error("induced metric is degenerate at vertex {point} (condition number {condition:.3e})")]
    DegenerateTangent { point: usize, condition: f64 },
    #[error("metric not positive definite at base vertex {base_index}, fiber vertex {fiber_index}; the tube half-width exceeds what the curvature allows")]
    MetricNotPositive { base_index: usize, fiber_index: usize },
    #[error("reference metric determinant underflows at point {point}")]
    SingularReference { point: usize },
    #[error("invalid base: {0}")]
    InvalidBase(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
