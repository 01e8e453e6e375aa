//! Dirichlet eigenpairs of the cross-section `omega`.
//!
//! The cross-section is discretized with second-order central differences
//! on a uniform grid (3-point in 1D, 5-point in 2D). Curved or irregular
//! domains are handled as masks: vertices outside the domain are pinned to
//! the Dirichlet value, which costs one order of accuracy at the boundary.
//! Domains are centered at the origin because fiber coordinates measure
//! normal-bundle offsets from the base manifold.

use crate::grid::{strides, unflatten, Axis, FiberGrid};
use crate::sparse::CsrMatrix;
use crate::spectral::{self, EigOptions, SpectralError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CrossSectionShape {
    Interval { length: f64 },
    Rectangle { width: f64, height: f64 },
    Disk { radius: f64 },
    /// Explicit vertex mask over a `shape`-sized tensor grid with uniform
    /// `spacing`, centered at the origin. `true` marks inside vertices.
    Mask { shape: Vec<usize>, spacing: f64, inside: Vec<bool> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossSectionDomain {
    pub shape: CrossSectionShape,
    pub h_fiber: f64,
}

/// Dirichlet eigenpairs `(E_k, sigma_k)` on the fiber grid. Modes are
/// normalized in the discrete `L^2` inner product and the ground state is
/// sign-normalized positive.
#[derive(Debug, Clone)]
pub struct CrossSectionModes {
    pub energies: Vec<f64>,
    pub modes: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub grid: FiberGrid,
}

impl CrossSectionModes {
    pub fn e1(&self) -> f64 {
        self.energies[0]
    }

    pub fn ground_state(&self) -> &[f64] {
        &self.modes[0]
    }
}

#[derive(Debug, Error)]
pub enum CrossSectionError {
    #[error("cross-section has empty interior")]
    EmptyInterior,
    #[error("axis {axis} has only {interior} interior points (need at least 5)")]
    GridTooCoarse { axis: usize, interior: usize },
    #[error("mask is not connected")]
    DisconnectedMask,
    #[error("ground state is degenerate (gap {gap:.3e}); the domain is likely disconnected")]
    DegenerateGroundState { gap: f64 },
    #[error("invalid cross-section: {0}")]
    InvalidShape(String),
    #[error(transparent)]
    Solver(#[from] SpectralError),
}

impl CrossSectionDomain {
    pub fn new(shape: CrossSectionShape, h_fiber: f64) -> Self {
        Self { shape, h_fiber }
    }

    pub fn codim(&self) -> usize {
        match &self.shape {
            CrossSectionShape::Interval { .. } => 1,
            CrossSectionShape::Rectangle { .. } | CrossSectionShape::Disk { .. } => 2,
            CrossSectionShape::Mask { shape, .. } => shape.len(),
        }
    }

    /// Extents of the bounding box per axis.
    fn extents(&self) -> Result<Vec<f64>, CrossSectionError> {
        let ext = match &self.shape {
            CrossSectionShape::Interval { length } => vec![*length],
            CrossSectionShape::Rectangle { width, height } => vec![*width, *height],
            CrossSectionShape::Disk { radius } => vec![2.0 * radius, 2.0 * radius],
            CrossSectionShape::Mask { shape, spacing, .. } => {
                shape.iter().map(|&n| (n - 1) as f64 * spacing).collect()
            }
        };
        if ext.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(CrossSectionError::InvalidShape(
                "extents must be positive and finite".into(),
            ));
        }
        Ok(ext)
    }

    /// Build the fiber grid at this domain's `h_fiber`.
    pub fn build_grid(&self) -> Result<FiberGrid, CrossSectionError> {
        self.build_grid_at(self.h_fiber)
    }

    /// Build the fiber grid at an explicit spacing (used by the nested
    /// coarse-to-fine warm start).
    pub fn build_grid_at(&self, h: f64) -> Result<FiberGrid, CrossSectionError> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(CrossSectionError::InvalidShape("h_fiber must be positive".into()));
        }
        let grid = match &self.shape {
            CrossSectionShape::Interval { length } => {
                let axes = vec![centered_axis(*length, h)];
                FiberGrid::from_mask(axes, |_| true)
            }
            CrossSectionShape::Rectangle { width, height } => {
                let axes = vec![centered_axis(*width, h), centered_axis(*height, h)];
                FiberGrid::from_mask(axes, |_| true)
            }
            CrossSectionShape::Disk { radius } => {
                let r = *radius;
                let axes = vec![centered_axis(2.0 * r, h), centered_axis(2.0 * r, h)];
                FiberGrid::from_mask(axes, move |x| x[0] * x[0] + x[1] * x[1] < r * r)
            }
            CrossSectionShape::Mask { shape, spacing, inside } => {
                if inside.len() != shape.iter().product::<usize>() {
                    return Err(CrossSectionError::InvalidShape(format!(
                        "mask has {} entries for shape {:?}",
                        inside.len(),
                        shape
                    )));
                }
                let axes: Vec<Axis> = shape
                    .iter()
                    .map(|&n| {
                        let extent = (n - 1) as f64 * spacing;
                        Axis::new(n, -extent / 2.0, *spacing)
                    })
                    .collect();
                let shp = shape.clone();
                let ins = inside.clone();
                let str_ = strides(&shp);
                FiberGrid::from_mask(axes, move |x| {
                    // nearest vertex lookup; x lies on the grid by construction
                    let mut flat = 0;
                    for k in 0..shp.len() {
                        let extent = (shp[k] - 1) as f64 * spacing;
                        let i = ((x[k] + extent / 2.0) / spacing).round() as usize;
                        flat += i.min(shp[k] - 1) * str_[k];
                    }
                    ins[flat]
                })
            }
        };
        // preconditions
        for (axis, ax) in grid.axes.iter().enumerate() {
            let interior = ax.n_points.saturating_sub(2);
            if interior < 5 {
                return Err(CrossSectionError::GridTooCoarse { axis, interior });
            }
        }
        if grid.n_unknowns() == 0 {
            return Err(CrossSectionError::EmptyInterior);
        }
        if matches!(self.shape, CrossSectionShape::Mask { .. }) && !grid.is_connected() {
            return Err(CrossSectionError::DisconnectedMask);
        }
        Ok(grid)
    }

    /// Width of the cross-section (largest bounding extent); the packet
    /// radius unit for singular families.
    pub fn width(&self) -> f64 {
        self.extents()
            .map(|e| e.into_iter().fold(0.0, f64::max))
            .unwrap_or(0.0)
    }
}

fn centered_axis(extent: f64, h: f64) -> Axis {
    let cells = (extent / h).round().max(2.0) as usize;
    Axis::new(cells + 1, -extent / 2.0, extent / cells as f64)
}

/// Stiffness and (diagonal) mass of the Dirichlet Laplacian on a fiber
/// grid, scaled by the cell volume so that `M = vol * I`.
pub fn fiber_laplacian(grid: &FiberGrid) -> (CsrMatrix, Vec<f64>) {
    let d = grid.codim;
    let shape = grid.shape();
    let str_ = strides(&shape);
    let vol = grid.cell_volume();
    let n = grid.n_unknowns();
    let inv_h2: Vec<f64> = grid.axes.iter().map(|a| 1.0 / (a.spacing * a.spacing)).collect();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut mi = vec![0usize; d];
    for u in 0..n {
        let flat = grid.interior[u];
        unflatten(flat, &shape, &mut mi);
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(2 * d + 1);
        let mut diag = 0.0;
        for k in 0..d {
            diag += 2.0 * inv_h2[k];
            for dir in [-1isize, 1] {
                let j = mi[k] as isize + dir;
                if j < 0 || j as usize >= shape[k] {
                    continue;
                }
                let nb = (flat as isize + dir * str_[k] as isize) as usize;
                if let Some(v) = grid.unknown_of_vertex(nb) {
                    row.push((v, -inv_h2[k] * vol));
                }
            }
        }
        row.push((u, diag * vol));
        rows.push(row);
    }
    (CsrMatrix::from_rows(n, rows), vec![vol; n])
}

/// Multilinear interpolation of coarse fiber fields onto a finer grid.
/// Non-unknown coarse vertices contribute the Dirichlet value zero.
pub fn prolong_fiber(coarse: &FiberGrid, fields: &[Vec<f64>], fine: &FiberGrid) -> Vec<Vec<f64>> {
    let d = coarse.codim;
    let cshape = coarse.shape();
    let cstr = strides(&cshape);
    // full vertex arrays with zeros outside the unknowns
    let full: Vec<Vec<f64>> = fields
        .iter()
        .map(|f| {
            let mut v = vec![0.0; coarse.n_vertices()];
            for (u, &flat) in coarse.interior.iter().enumerate() {
                v[flat] = f[u];
            }
            v
        })
        .collect();
    let mut out = vec![vec![0.0; fine.n_unknowns()]; fields.len()];
    let mut x = vec![0.0f64; d];
    for uf in 0..fine.n_unknowns() {
        fine.unknown_coords(uf, &mut x);
        // locate the coarse cell
        let mut base = 0usize;
        let mut frac = vec![0.0f64; d];
        for k in 0..d {
            let ax = &coarse.axes[k];
            let t = (x[k] - ax.origin) / ax.spacing;
            let i = (t.floor() as isize).clamp(0, ax.n_points as isize - 2) as usize;
            frac[k] = (t - i as f64).clamp(0.0, 1.0);
            base += i * cstr[k];
        }
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut flat = base;
            for k in 0..d {
                if corner >> k & 1 == 1 {
                    w *= frac[k];
                    flat += cstr[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            if w == 0.0 {
                continue;
            }
            for (fi, f) in full.iter().enumerate() {
                out[fi][uf] += w * f[flat];
            }
        }
    }
    out
}

/// First `count` Dirichlet eigenpairs of the cross-section, ascending.
pub fn dirichlet_modes(
    domain: &CrossSectionDomain,
    count: usize,
) -> Result<CrossSectionModes, CrossSectionError> {
    dirichlet_modes_opts(domain, count, &EigOptions::with_tol(1e-7))
}

/// Problems at or below this size are decomposed densely; larger shaped
/// domains are warm-started from a 2h solve of the same shape.
const DENSE_CUTOFF: usize = 400;

pub fn dirichlet_modes_opts(
    domain: &CrossSectionDomain,
    count: usize,
    opts: &EigOptions,
) -> Result<CrossSectionModes, CrossSectionError> {
    let grid = domain.build_grid()?;
    let (k, m) = fiber_laplacian(&grid);
    let mut o = opts.clone();
    if grid.n_unknowns() <= DENSE_CUTOFF {
        o.force_dense = true;
    } else {
        o.initial = nested_start(domain, count, &grid, opts);
    }
    let eig = spectral::smallest_eigenpairs(&k, &m, count.min(m.len()), &o)?;

    let mut modes = CrossSectionModes {
        energies: eig.values,
        modes: eig.vectors,
        residuals: eig.residual_norms,
        grid,
    };
    if modes.energies.len() >= 2 {
        let gap = modes.energies[1] - modes.energies[0];
        if gap <= 1e-8 {
            return Err(CrossSectionError::DegenerateGroundState { gap });
        }
    }
    // ground-state positivity: flip so the largest-magnitude entry is > 0
    let s1 = &mut modes.modes[0];
    let mut lead = 0;
    for (i, v) in s1.iter().enumerate() {
        if v.abs() > s1[lead].abs() {
            lead = i;
        }
    }
    if s1[lead] < 0.0 {
        for v in s1.iter_mut() {
            *v = -*v;
        }
    }
    Ok(modes)
}

/// Coarse-to-fine warm start: solve the same shape at `2h` recursively and
/// interpolate. Masks are solved cold (no canonical coarsening).
fn nested_start(
    domain: &CrossSectionDomain,
    count: usize,
    fine: &FiberGrid,
    opts: &EigOptions,
) -> Option<Vec<Vec<f64>>> {
    if matches!(domain.shape, CrossSectionShape::Mask { .. }) {
        return None;
    }
    let coarse = CrossSectionDomain { shape: domain.shape.clone(), h_fiber: domain.h_fiber * 2.0 };
    let mut o = opts.clone();
    o.tol = (opts.tol * 100.0).min(1e-6);
    let cm = dirichlet_modes_opts(&coarse, count, &o).ok()?;
    Some(prolong_fiber(&cm.grid, &cm.modes, fine))
}
