//! Shared builders and oracles for the integration suites.
#![allow(dead_code)]

use layerlab_core::cross_section::{
    dirichlet_modes, CrossSectionDomain, CrossSectionModes, CrossSectionShape,
};
use layerlab_core::discretization::{assemble_forms, AssembleOptions, DiscreteForms, LayerGrid};
use layerlab_core::geometry::{fermi_metric, FermiMetricField, ImmersedBase, Profile1d};
use layerlab_core::grid::{Axis, BaseGrid};
use nalgebra::DMatrix;

/// Straight or curved planar strip: 1D base of length `l` with `nx`
/// cells, interval fiber of width `w` with `nf` cells.
pub fn strip_field(
    l: f64,
    nx: usize,
    w: f64,
    nf: usize,
    kappa: Profile1d,
) -> (FermiMetricField, LayerGrid, CrossSectionModes) {
    let domain = CrossSectionDomain::new(CrossSectionShape::Interval { length: w }, w / nf as f64);
    let modes = dirichlet_modes(&domain, 6).expect("fiber modes");
    let base = BaseGrid::new(vec![Axis::from_extent(0.0, l, nx)]);
    let immersed = ImmersedBase::curve(1, vec![kappa], None).expect("curve base");
    let field = fermi_metric(&immersed, None, &base, &modes.grid).expect("metric");
    let grid = LayerGrid::new(base, modes.grid.clone());
    (field, grid, modes)
}

/// Twisted tube: 1D base, square fiber of side `s`, torsion profile.
pub fn twisted_field(
    l: f64,
    nx: usize,
    s: f64,
    nf: usize,
    tau: Profile1d,
) -> (FermiMetricField, LayerGrid, CrossSectionModes) {
    let domain = CrossSectionDomain::new(
        CrossSectionShape::Rectangle { width: s, height: s },
        s / nf as f64,
    );
    let modes = dirichlet_modes(&domain, 6).expect("fiber modes");
    let base = BaseGrid::new(vec![Axis::from_extent(0.0, l, nx)]);
    let immersed =
        ImmersedBase::curve(2, vec![Profile1d::Zero, Profile1d::Zero], Some(tau)).expect("curve");
    let field = fermi_metric(&immersed, None, &base, &modes.grid).expect("metric");
    let grid = LayerGrid::new(base, modes.grid.clone());
    (field, grid, modes)
}

/// Graph layer over a Gaussian cap surface: 2D base, interval fiber.
pub fn graph_layer_field(
    half_extent: f64,
    n_cells: usize,
    amplitude: f64,
    cap_width: f64,
    fiber_width: f64,
    nf: usize,
) -> (FermiMetricField, LayerGrid, CrossSectionModes) {
    let base = BaseGrid::new(vec![
        Axis::from_extent(-half_extent, 2.0 * half_extent, n_cells),
        Axis::from_extent(-half_extent, 2.0 * half_extent, n_cells),
    ]);
    let sigma = sample_gaussian_cap(&base, amplitude, cap_width);
    let immersed = ImmersedBase::graph(
        1,
        layerlab_core::geometry::GraphData { grid: base.clone(), sigma: vec![sigma] },
    )
    .expect("graph base");
    let frames = layerlab_core::geometry::build_normal_frames(&immersed).expect("frames");
    let domain = CrossSectionDomain::new(
        CrossSectionShape::Interval { length: fiber_width },
        fiber_width / nf as f64,
    );
    let modes = dirichlet_modes(&domain, 6).expect("fiber modes");
    let field = fermi_metric(&immersed, Some(&frames), &base, &modes.grid).expect("metric");
    let grid = LayerGrid::new(base, modes.grid.clone());
    (field, grid, modes)
}

pub fn sample_gaussian_cap(grid: &BaseGrid, amplitude: f64, width: f64) -> Vec<f64> {
    let mut out = vec![0.0; grid.n_vertices()];
    let mut x = [0.0f64; 2];
    for (p, v) in out.iter_mut().enumerate() {
        grid.vertex_coords(p, &mut x);
        let r2 = x[0] * x[0] + x[1] * x[1];
        *v = amplitude * (-r2 / (2.0 * width * width)).exp();
    }
    out
}

pub fn assemble(field: &FermiMetricField, grid: &LayerGrid) -> DiscreteForms {
    assemble_forms(field, grid, &AssembleOptions::default()).expect("assembly")
}

/// Dense generalized eigenvalues of `(K, M)` with diagonal `M`, as an
/// oracle independent of the iterative path.
pub fn dense_generalized_eigenvalues(forms: &DiscreteForms, count: usize) -> Vec<f64> {
    let n = forms.n_unknowns();
    let kd = layerlab_core::spectral::dense::csr_to_dense(&forms.k);
    let s: Vec<f64> = forms.m.iter().map(|&m| 1.0 / m.sqrt()).collect();
    let a = DMatrix::from_fn(n, n, |i, j| 0.5 * (kd[(i, j)] + kd[(j, i)]) * s[i] * s[j]);
    let (vals, _) = layerlab_core::spectral::dense::sym_eigen_sorted(a);
    vals.into_iter().take(count).collect()
}

/// Closed-form eigenvalues of the discrete 1D Dirichlet Laplacian on `n`
/// interior points with spacing `h`: `(2 - 2 cos(k pi / (n+1))) / h^2`.
pub fn discrete_interval_eigenvalues(n_interior: usize, h: f64) -> Vec<f64> {
    (1..=n_interior)
        .map(|k| {
            let t = k as f64 * std::f64::consts::PI / (n_interior + 1) as f64;
            (2.0 - 2.0 * t.cos()) / (h * h)
        })
        .collect()
}

/// Sorted sums of two discrete 1D spectra: the exact spectrum of the flat
/// product operator.
pub fn discrete_product_eigenvalues(
    nx: usize,
    hx: f64,
    ny: usize,
    hy: f64,
    count: usize,
) -> Vec<f64> {
    let ex = discrete_interval_eigenvalues(nx, hx);
    let ey = discrete_interval_eigenvalues(ny, hy);
    let mut sums: Vec<f64> = ex
        .iter()
        .flat_map(|&a| ey.iter().map(move |&b| a + b))
        .collect();
    sums.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sums.truncate(count);
    sums
}
