//! Tensor-product grids for the base manifold and the cross-section.
//!
//! Vertices always include the boundary; unknowns are the interior (or
//! mask-interior) vertices. Flat indices are row-major with the last axis
//! fastest.

use serde::{Deserialize, Serialize};

/// One uniform grid axis: `n_points` vertices spaced `spacing` apart
/// starting at `origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub n_points: usize,
    pub origin: f64,
    pub spacing: f64,
}

impl Axis {
    pub fn new(n_points: usize, origin: f64, spacing: f64) -> Self {
        Self { n_points, origin, spacing }
    }

    /// Axis covering `[origin, origin + extent]` with `cells` cells.
    pub fn from_extent(origin: f64, extent: f64, cells: usize) -> Self {
        Self { n_points: cells + 1, origin, spacing: extent / cells as f64 }
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn extent(&self) -> f64 {
        (self.n_points - 1) as f64 * self.spacing
    }
}

/// Row-major strides for a shape (last axis fastest).
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

/// Decompose a flat index into a multi-index.
pub fn unflatten(mut idx: usize, shape: &[usize], out: &mut [usize]) {
    for k in (0..shape.len()).rev() {
        out[k] = idx % shape[k];
        idx /= shape[k];
    }
}

/// Flatten a multi-index.
pub fn flatten(mi: &[usize], shape: &[usize]) -> usize {
    let mut idx = 0;
    for k in 0..shape.len() {
        idx = idx * shape[k] + mi[k];
    }
    idx
}

/// Vertex grid on the base manifold coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaseGrid {
    pub axes: Vec<Axis>,
}

impl BaseGrid {
    pub fn new(axes: Vec<Axis>) -> Self {
        Self { axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n_points).collect()
    }

    pub fn n_vertices(&self) -> usize {
        self.axes.iter().map(|a| a.n_points).product()
    }

    /// Interior vertex counts (Dirichlet boundary removed).
    pub fn interior_shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n_points - 2).collect()
    }

    pub fn n_interior(&self) -> usize {
        self.interior_shape().iter().product()
    }

    pub fn vertex_coords(&self, flat: usize, out: &mut [f64]) {
        let shape = self.shape();
        let mut mi = [0usize; 8];
        unflatten(flat, &shape, &mut mi[..shape.len()]);
        for k in 0..shape.len() {
            out[k] = self.axes[k].coord(mi[k]);
        }
    }
}

/// Cross-section grid: a bounding tensor grid plus the list of interior
/// (unknown) vertices. For rectangles and intervals the interior is the
/// full tensor interior; for disks and masks it is the subset of vertices
/// inside the domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiberGrid {
    pub codim: usize,
    pub axes: Vec<Axis>,
    /// Flat tensor index of each unknown, ascending.
    pub interior: Vec<usize>,
    /// Tensor index -> unknown index, `-1` when not an unknown.
    pub index_map: Vec<i64>,
}

impl FiberGrid {
    pub fn from_mask(axes: Vec<Axis>, inside: impl Fn(&[f64]) -> bool) -> Self {
        let codim = axes.len();
        let shape: Vec<usize> = axes.iter().map(|a| a.n_points).collect();
        let n: usize = shape.iter().product();
        let mut interior = Vec::new();
        let mut index_map = vec![-1i64; n];
        let mut mi = [0usize; 8];
        let mut x = [0.0f64; 8];
        for flat in 0..n {
            unflatten(flat, &shape, &mut mi[..codim]);
            // tensor boundary vertices are never unknowns
            let mut boundary = false;
            for k in 0..codim {
                if mi[k] == 0 || mi[k] + 1 == shape[k] {
                    boundary = true;
                }
            }
            if boundary {
                continue;
            }
            for k in 0..codim {
                x[k] = axes[k].coord(mi[k]);
            }
            if inside(&x[..codim]) {
                index_map[flat] = interior.len() as i64;
                interior.push(flat);
            }
        }
        Self { codim, axes, interior, index_map }
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n_points).collect()
    }

    pub fn n_vertices(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn n_unknowns(&self) -> usize {
        self.interior.len()
    }

    #[inline]
    pub fn unknown_of_vertex(&self, flat: usize) -> Option<usize> {
        let v = self.index_map[flat];
        if v >= 0 {
            Some(v as usize)
        } else {
            None
        }
    }

    pub fn vertex_coords(&self, flat: usize, out: &mut [f64]) {
        let shape = self.shape();
        let mut mi = [0usize; 8];
        unflatten(flat, &shape, &mut mi[..self.codim]);
        for k in 0..self.codim {
            out[k] = self.axes[k].coord(mi[k]);
        }
    }

    /// Coordinates of an unknown.
    pub fn unknown_coords(&self, u: usize, out: &mut [f64]) {
        self.vertex_coords(self.interior[u], out);
    }

    /// Per-vertex cell volume element (product of spacings).
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing).product()
    }

    /// Width of the cross-section: the largest axis extent.
    pub fn width(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| a.extent())
            .fold(0.0, f64::max)
    }

    /// Flood-fill connectivity over unknowns (face adjacency).
    pub fn is_connected(&self) -> bool {
        let n = self.n_unknowns();
        if n == 0 {
            return false;
        }
        let shape = self.shape();
        let str_ = strides(&shape);
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        let mut mi = [0usize; 8];
        while let Some(u) = stack.pop() {
            let flat = self.interior[u];
            unflatten(flat, &shape, &mut mi[..self.codim]);
            for k in 0..self.codim {
                for dir in [-1isize, 1] {
                    let j = mi[k] as isize + dir;
                    if j < 0 || j as usize >= shape[k] {
                        continue;
                    }
                    let nb = (flat as isize + dir * str_[k] as isize) as usize;
                    if let Some(v) = self.unknown_of_vertex(nb) {
                        if !seen[v] {
                            seen[v] = true;
                            count += 1;
                            stack.push(v);
                        }
                    }
                }
            }
        }
        count == n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_roundtrip() {
        let shape = [3usize, 4, 5];
        let mut mi = [0usize; 3];
        for idx in 0..60 {
            unflatten(idx, &shape, &mut mi);
            assert_eq!(flatten(&mi, &shape), idx);
        }
    }

    #[test]
    fn interval_fiber_counts() {
        let axes = vec![Axis::from_extent(0.0, 1.0, 8)];
        let g = FiberGrid::from_mask(axes, |_| true);
        assert_eq!(g.n_unknowns(), 7);
        assert!(g.is_connected());
    }

    #[test]
    fn disconnected_mask_detected() {
        // two intervals separated by an excluded band
        let axes = vec![Axis::from_extent(0.0, 1.0, 10)];
        let g = FiberGrid::from_mask(axes, |x| x[0] < 0.35 || x[0] > 0.65);
        assert!(!g.is_connected());
    }
}
