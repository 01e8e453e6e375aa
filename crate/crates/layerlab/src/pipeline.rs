//! Scenario -> geometry -> forms assembly, with coarse-to-fine eigensolver
//! warm starts.
//!
//! Warm-start chains halve the base cells and the fiber resolution
//! together, which keeps the coarse levels' spectral radius proportional
//! to their resolution; a chain that coarsened the base alone would leave
//! the fiber stiffness dominating and the clustered low modes would
//! converge at the fine-grid rate even on tiny problems. Thresholded
//! solves shift the cut per level by the level's own fiber ground energy.

use crate::error::{self, CliError};
use crate::scenario::{BaseSpec, Scenario, SurfaceSpec};
use layerlab_core::cross_section::{
    dirichlet_modes_opts, CrossSectionDomain, CrossSectionModes,
};
use layerlab_core::discretization::{
    assemble_forms, prolong_layer, AssembleOptions, DiscreteForms, LayerGrid,
};
use layerlab_core::geometry::{
    build_normal_frames, fermi_metric, FermiMetricField, GraphData, ImmersedBase,
};
use layerlab_core::grid::{Axis, BaseGrid, FiberGrid};
use layerlab_core::spectral::{EigOptions, EigenResult, SpectrumBelow};

/// Problems at or below this unknown count are solved cold.
const CHAIN_FLOOR: usize = 9_000;
/// Base axes are never coarsened below this many cells.
const MIN_CELLS: usize = 48;

pub struct BuiltLayer {
    pub field: FermiMetricField,
    pub grid: LayerGrid,
    pub forms: DiscreteForms,
}

/// Cross-section modes for a scenario (six by default).
pub fn modes_for(scn: &Scenario) -> Result<CrossSectionModes, CliError> {
    modes_at(scn, scn.cross_section.h_fiber, 6)
}

fn modes_at(scn: &Scenario, h_fiber: f64, count: usize) -> Result<CrossSectionModes, CliError> {
    let domain = CrossSectionDomain::new(scn.cross_section.shape.clone(), h_fiber);
    let opts = EigOptions::with_tol(1e-9);
    dirichlet_modes_opts(&domain, count, &opts)
        .map_err(|e| error::from_cross_section(&scn.name, e))
}

fn immersed_base(scn: &Scenario, base_grid: &BaseGrid) -> Result<ImmersedBase, CliError> {
    match &scn.base {
        BaseSpec::Curve { codim, curvature, torsion, .. } => {
            ImmersedBase::curve(*codim, curvature.clone(), torsion.clone())
                .map_err(|e| error::from_geometry(&scn.name, e))
        }
        BaseSpec::Graph { surface, .. } => {
            let mut sigma = vec![0.0; base_grid.n_vertices()];
            let mut x = [0.0f64; 2];
            for (p, v) in sigma.iter_mut().enumerate() {
                base_grid.vertex_coords(p, &mut x);
                *v = match surface {
                    SurfaceSpec::Flat => 0.0,
                    SurfaceSpec::GaussianCap { amplitude, width } => {
                        let r2 = x[0] * x[0] + x[1] * x[1];
                        amplitude * (-r2 / (2.0 * width * width)).exp()
                    }
                };
            }
            ImmersedBase::graph(1, GraphData { grid: base_grid.clone(), sigma: vec![sigma] })
                .map_err(|e| error::from_geometry(&scn.name, e))
        }
    }
}

fn base_grid_for(scn: &Scenario, length: f64, base_cells: &[usize]) -> BaseGrid {
    match &scn.base {
        BaseSpec::Curve { .. } => {
            BaseGrid::new(vec![Axis::from_extent(0.0, length, base_cells[0])])
        }
        BaseSpec::Graph { .. } => {
            let half = length / 2.0;
            BaseGrid::new(
                base_cells
                    .iter()
                    .map(|&c| Axis::from_extent(-half, length, c))
                    .collect(),
            )
        }
    }
}

fn build_at(
    scn: &Scenario,
    length: f64,
    base_cells: &[usize],
    fiber: &FiberGrid,
) -> Result<BuiltLayer, CliError> {
    let base_grid = base_grid_for(scn, length, base_cells);
    let immersed = immersed_base(scn, &base_grid)?;
    let frames = match &scn.base {
        BaseSpec::Curve { .. } => None,
        BaseSpec::Graph { .. } => {
            Some(build_normal_frames(&immersed).map_err(|e| error::from_geometry(&scn.name, e))?)
        }
    };
    let field = fermi_metric(&immersed, frames.as_ref(), &base_grid, fiber)
        .map_err(|e| error::from_geometry(&scn.name, e))?;
    let grid = LayerGrid::new(base_grid, fiber.clone());
    let forms = assemble_forms(&field, &grid, &AssembleOptions::default())
        .map_err(|e| error::from_discretization(&scn.name, e))?;
    Ok(BuiltLayer { field, grid, forms })
}

/// Build field, grid and assembled forms at the modes' fiber resolution.
pub fn build_layer(
    scn: &Scenario,
    modes: &CrossSectionModes,
    length: f64,
    base_cells: &[usize],
) -> Result<BuiltLayer, CliError> {
    build_at(scn, length, base_cells, &modes.grid)
}

/// One coarsening step: halve the base cells and double the fiber
/// spacing when the shape still admits it.
fn coarsen(
    scn: &Scenario,
    base_cells: &[usize],
    h_fiber: f64,
) -> Option<(Vec<usize>, f64)> {
    let base: Vec<usize> = base_cells.iter().map(|&c| (c / 2).max(MIN_CELLS)).collect();
    let domain = CrossSectionDomain::new(scn.cross_section.shape.clone(), 2.0 * h_fiber);
    let h = if domain.build_grid().is_ok() { 2.0 * h_fiber } else { h_fiber };
    if base == base_cells && h == h_fiber {
        None
    } else {
        Some((base, h))
    }
}

fn fiber_grid_at(scn: &Scenario, h_fiber: f64) -> Result<FiberGrid, CliError> {
    CrossSectionDomain::new(scn.cross_section.shape.clone(), h_fiber)
        .build_grid()
        .map_err(|e| error::from_cross_section(&scn.name, e))
}

/// Lowest `count` eigenpairs with a nested warm start.
pub fn solve_lowest(
    scn: &Scenario,
    modes: &CrossSectionModes,
    length: f64,
    base_cells: &[usize],
    count: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(BuiltLayer, EigenResult), CliError> {
    solve_lowest_at(
        scn,
        length,
        base_cells,
        scn.cross_section.h_fiber,
        Some(&modes.grid),
        count,
        tol,
        max_iter,
    )
}

#[allow(clippy::too_many_arguments)]
fn solve_lowest_at(
    scn: &Scenario,
    length: f64,
    base_cells: &[usize],
    h_fiber: f64,
    fiber: Option<&FiberGrid>,
    count: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(BuiltLayer, EigenResult), CliError> {
    let fiber_grid;
    let fiber = match fiber {
        Some(f) => f,
        None => {
            fiber_grid = fiber_grid_at(scn, h_fiber)?;
            &fiber_grid
        }
    };
    let built = build_at(scn, length, base_cells, fiber)?;
    let initial = if built.forms.n_unknowns() > CHAIN_FLOOR {
        match coarsen(scn, base_cells, h_fiber) {
            Some((cb, ch)) => {
                let coarse_tol = (tol * 100.0).min(1e-4).max(tol);
                let (cbuilt, cres) =
                    solve_lowest_at(scn, length, &cb, ch, None, count, coarse_tol, max_iter)?;
                Some(prolong_layer(&cbuilt.grid, &built.grid, &cres.vectors))
            }
            None => None,
        }
    } else {
        None
    };
    let mut opts = EigOptions::with_tol(tol);
    opts.max_iter = max_iter;
    opts.initial = initial;
    let t0 = std::time::Instant::now();
    let res = built
        .forms
        .smallest_eigenpairs(count, &opts)
        .map_err(|e| error::from_spectral(&scn.name, e))?;
    log::info!(
        target: "layerlab_pipeline",
        "solve_lowest level n={} count={} tol={:.1e} iters={} {:.1}s",
        built.forms.n_unknowns(), count, tol, res.iterations, t0.elapsed().as_secs_f64()
    );
    Ok((built, res))
}

/// Spectrum below `threshold` with a nested warm start; coarse levels
/// shift the threshold by their own fiber ground energy.
pub fn spectrum_below(
    scn: &Scenario,
    modes: &CrossSectionModes,
    length: f64,
    base_cells: &[usize],
    threshold: f64,
    cap: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(BuiltLayer, SpectrumBelow), CliError> {
    spectrum_below_at(
        scn,
        length,
        base_cells,
        scn.cross_section.h_fiber,
        Some(&modes.grid),
        threshold - modes.e1(),
        Some(threshold),
        cap,
        tol,
        max_iter,
    )
}

#[allow(clippy::too_many_arguments)]
fn spectrum_below_at(
    scn: &Scenario,
    length: f64,
    base_cells: &[usize],
    h_fiber: f64,
    fiber: Option<&FiberGrid>,
    excess: f64,
    threshold_abs: Option<f64>,
    cap: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(BuiltLayer, SpectrumBelow), CliError> {
    let fiber_grid;
    let fiber = match fiber {
        Some(f) => f,
        None => {
            fiber_grid = fiber_grid_at(scn, h_fiber)?;
            &fiber_grid
        }
    };
    // the exact requested threshold applies at the entry level; coarser
    // levels track their own fiber ground energy
    let threshold = match threshold_abs {
        Some(t) => t,
        None => modes_at(scn, h_fiber, 1)?.e1() + excess,
    };
    let built = build_at(scn, length, base_cells, fiber)?;
    let initial = if built.forms.n_unknowns() > CHAIN_FLOOR {
        match coarsen(scn, base_cells, h_fiber) {
            Some((cb, ch)) => {
                let coarse_tol = (tol * 100.0).min(1e-4).max(tol);
                let (cbuilt, cres) = spectrum_below_at(
                    scn, length, &cb, ch, None, excess, None, cap, coarse_tol, max_iter,
                )?;
                Some(prolong_layer(&cbuilt.grid, &built.grid, &cres.result.vectors))
            }
            None => None,
        }
    } else {
        None
    };
    let mut opts = EigOptions::with_tol(tol);
    opts.max_iter = max_iter;
    opts.initial = initial;
    let t0 = std::time::Instant::now();
    let below = built
        .forms
        .spectrum_below(threshold, cap, &opts)
        .map_err(|e| error::from_spectral(&scn.name, e))?;
    log::info!(
        target: "layerlab_pipeline",
        "spectrum_below level n={} threshold={:.4} tol={:.1e} found={} iters={} {:.1}s",
        built.forms.n_unknowns(), threshold, tol, below.result.values.len(),
        below.result.iterations, t0.elapsed().as_secs_f64()
    );
    Ok((built, below))
}
