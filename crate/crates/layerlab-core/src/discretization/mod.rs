//! Truncated-layer grids and the discrete quadratic form.
//!
//! `assemble_forms` realizes `h_G[psi] = int |grad_G psi|_G^2 sqrt(det G)`
//! as a sparse symmetric stiffness `K` and the weighted norm as a diagonal
//! mass `M`, with Dirichlet conditions on the truncation box and the fiber
//! boundary. One-point (cell-center) quadrature with staggered central
//! differences reproduces the classical 5/7-point stencil exactly when
//! `G` is the identity; mixed metric entries couple the averaged edge
//! gradients of the two axes, which keeps `K` exactly symmetric.

mod assemble;
mod transfer;

pub use assemble::{assemble_forms, assemble_unperturbed, comparison_identity_residual, AssembleOptions};
pub use transfer::prolong_layer;

use crate::cross_section::CrossSectionModes;
use crate::geometry::GeometryError;
use crate::grid::{flatten, strides, unflatten, BaseGrid, FiberGrid};
use crate::sparse::CsrMatrix;
use crate::spectral::{self, EigOptions, EigenResult, SpectralError, SpectrumBelow};
use thiserror::Error;

/// Tensor grid over the truncated base box and the fiber, with unknowns
/// at (base interior) x (fiber interior) vertices.
#[derive(Debug, Clone)]
pub struct LayerGrid {
    pub base: BaseGrid,
    pub fiber: FiberGrid,
}

impl LayerGrid {
    pub fn new(base: BaseGrid, fiber: FiberGrid) -> Self {
        Self { base, fiber }
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn codim(&self) -> usize {
        self.fiber.codim
    }

    pub fn total_dim(&self) -> usize {
        self.dim() + self.codim()
    }

    pub fn n_unknowns(&self) -> usize {
        self.base.n_interior() * self.fiber.n_unknowns()
    }

    /// Unknown index from base-vertex and fiber-vertex flat indices;
    /// `None` on the Dirichlet boundary.
    pub fn unknown_of_vertices(&self, base_flat: usize, fiber_flat: usize) -> Option<usize> {
        let bshape = self.base.shape();
        let mut mi = [0usize; 8];
        unflatten(base_flat, &bshape, &mut mi[..bshape.len()]);
        let ishape = self.base.interior_shape();
        let mut imi = [0usize; 8];
        for k in 0..bshape.len() {
            if mi[k] == 0 || mi[k] + 1 == bshape[k] {
                return None;
            }
            imi[k] = mi[k] - 1;
        }
        let b_int = flatten(&imi[..bshape.len()], &ishape);
        let f = self.fiber.unknown_of_vertex(fiber_flat)?;
        Some(b_int * self.fiber.n_unknowns() + f)
    }

    /// Base-vertex and fiber-vertex flat indices of an unknown.
    pub fn vertices_of_unknown(&self, u: usize) -> (usize, usize) {
        let nf = self.fiber.n_unknowns();
        let (b_int, f) = (u / nf, u % nf);
        let ishape = self.base.interior_shape();
        let bshape = self.base.shape();
        let mut imi = [0usize; 8];
        unflatten(b_int, &ishape, &mut imi[..ishape.len()]);
        let mut mi = [0usize; 8];
        for k in 0..ishape.len() {
            mi[k] = imi[k] + 1;
        }
        (flatten(&mi[..bshape.len()], &bshape), self.fiber.interior[f])
    }

    /// Coordinates `(x, u)` of an unknown.
    pub fn unknown_coords(&self, u: usize, x: &mut [f64], uu: &mut [f64]) {
        let (b, f) = self.vertices_of_unknown(u);
        self.base.vertex_coords(b, x);
        self.fiber.vertex_coords(f, uu);
    }

    /// All spacings, base axes first.
    pub fn spacings(&self) -> Vec<f64> {
        self.base
            .axes
            .iter()
            .chain(self.fiber.axes.iter())
            .map(|a| a.spacing)
            .collect()
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacings().into_iter().fold(0.0, f64::max)
    }

    /// Cell volume (product of all spacings).
    pub fn cell_volume(&self) -> f64 {
        self.spacings().into_iter().product()
    }

    /// Strides to build a layer-point index `base_flat * n_fiber + fiber_flat`.
    pub fn layer_point(&self, base_flat: usize, fiber_flat: usize) -> usize {
        base_flat * self.fiber.n_vertices() + fiber_flat
    }
}

/// Sparse stiffness and diagonal mass realizing `h_G` and `|| . ||_G`.
#[derive(Debug, Clone)]
pub struct DiscreteForms {
    pub k: CsrMatrix,
    pub m: Vec<f64>,
    pub grid: LayerGrid,
    pub meta: FormsMeta,
}

#[derive(Debug, Clone)]
pub struct FormsMeta {
    /// Which metric samples were assembled ("layer" or "unperturbed").
    pub metric: String,
    /// Fiber mode energies when the unperturbed product oracle applies.
    pub fiber_energies: Vec<f64>,
}

impl DiscreteForms {
    pub fn n_unknowns(&self) -> usize {
        self.m.len()
    }

    pub fn smallest_eigenpairs(
        &self,
        count: usize,
        opts: &EigOptions,
    ) -> Result<EigenResult, SpectralError> {
        spectral::smallest_eigenpairs(&self.k, &self.m, count, opts)
    }

    pub fn spectrum_below(
        &self,
        threshold: f64,
        cap: usize,
        opts: &EigOptions,
    ) -> Result<SpectrumBelow, SpectralError> {
        spectral::spectrum_below(&self.k, &self.m, threshold, cap, opts)
    }

    pub fn count_below(&self, threshold: f64, opts: &EigOptions) -> Result<usize, SpectralError> {
        spectral::count_below(&self.k, &self.m, threshold, opts)
    }

    /// `psi^T M phi`.
    pub fn m_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        crate::parallel::dot_weighted(a, &self.m, b)
    }

    pub fn m_norm(&self, a: &[f64]) -> f64 {
        self.m_inner(a, a).sqrt()
    }

    /// `(K - lambda M) psi`.
    pub fn apply_shifted(&self, psi: &[f64], lambda: f64) -> Vec<f64> {
        let mut out = vec![0.0; psi.len()];
        self.k.spmv(psi, &mut out);
        for i in 0..psi.len() {
            out[i] -= lambda * self.m[i] * psi[i];
        }
        out
    }

    /// Central-difference gradient of an unknown vector at every unknown,
    /// with zero extension across the Dirichlet boundary. Returns `D`
    /// component vectors.
    pub fn vertex_gradient(&self, psi: &[f64]) -> Vec<Vec<f64>> {
        let grid = &self.grid;
        let d = grid.total_dim();
        let dim = grid.dim();
        let bshape = grid.base.shape();
        let fshape = grid.fiber.shape();
        let bstr = strides(&bshape);
        let fstr = strides(&fshape);
        let h = grid.spacings();
        let n = self.n_unknowns();
        let mut out = vec![vec![0.0; n]; d];
        let value_at = |bf: isize, ff: isize| -> f64 {
            if bf < 0 || ff < 0 {
                return 0.0;
            }
            match grid.unknown_of_vertices(bf as usize, ff as usize) {
                Some(u) => psi[u],
                None => 0.0,
            }
        };
        for u in 0..n {
            let (bflat, fflat) = grid.vertices_of_unknown(u);
            let mut bmi = [0usize; 8];
            unflatten(bflat, &bshape, &mut bmi[..bshape.len()]);
            let mut fmi = [0usize; 8];
            unflatten(fflat, &fshape, &mut fmi[..fshape.len()]);
            for k in 0..d {
                let (plus, minus) = if k < dim {
                    let st = bstr[k] as isize;
                    let i = bmi[k];
                    let p = if i + 1 < bshape[k] { value_at(bflat as isize + st, fflat as isize) } else { 0.0 };
                    let m_ = if i >= 1 { value_at(bflat as isize - st, fflat as isize) } else { 0.0 };
                    (p, m_)
                } else {
                    let kk = k - dim;
                    let st = fstr[kk] as isize;
                    let i = fmi[kk];
                    let p = if i + 1 < fshape[kk] { value_at(bflat as isize, fflat as isize + st) } else { 0.0 };
                    let m_ = if i >= 1 { value_at(bflat as isize, fflat as isize - st) } else { 0.0 };
                    (p, m_)
                };
                out[k][u] = (plus - minus) / (2.0 * h[k]);
            }
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum DiscretizationError {
    #[error("problem has {unknowns} unknowns, exceeding the configured cap {cap}")]
    OutOfMemory { unknowns: usize, cap: usize },
    #[error("fiber grid of the modes does not match the layer grid")]
    FiberMismatch,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solver(#[from] SpectralError),
}

/// Check that modes were computed on this layer's fiber grid.
pub fn modes_match_grid(modes: &CrossSectionModes, grid: &LayerGrid) -> bool {
    let a = &modes.grid;
    let b = &grid.fiber;
    a.codim == b.codim
        && a.interior == b.interior
        && a.axes.len() == b.axes.len()
        && a.axes
            .iter()
            .zip(&b.axes)
            .all(|(x, y)| x.n_points == y.n_points && (x.spacing - y.spacing).abs() < 1e-12)
}
