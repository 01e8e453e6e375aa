//! Multilinear prolongation of unknown vectors between layer grids, used
//! for coarse-to-fine eigensolver warm starts.

use super::LayerGrid;
use crate::grid::{strides, Axis};

/// Interpolate coarse unknown vectors onto the unknowns of a finer grid.
/// Coarse boundary/masked vertices contribute the Dirichlet value zero.
pub fn prolong_layer(coarse: &LayerGrid, fine: &LayerGrid, fields: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = coarse.total_dim();
    let axes: Vec<Axis> = coarse
        .base
        .axes
        .iter()
        .chain(coarse.fiber.axes.iter())
        .cloned()
        .collect();
    let shape: Vec<usize> = axes.iter().map(|a| a.n_points).collect();
    let str_ = strides(&shape);
    let n_fiber_v = coarse.fiber.n_vertices();

    // full vertex tensors with zeros outside the unknowns
    let n_vertices: usize = shape.iter().product();
    let full: Vec<Vec<f64>> = fields
        .iter()
        .map(|f| {
            let mut v = vec![0.0; n_vertices];
            for u in 0..coarse.n_unknowns() {
                let (bf, ff) = coarse.vertices_of_unknown(u);
                v[bf * n_fiber_v + ff] = f[u];
            }
            v
        })
        .collect();

    let dim = coarse.dim();
    let nf = fine.n_unknowns();
    let mut out = vec![vec![0.0; nf]; fields.len()];
    let mut x = vec![0.0f64; dim.max(1)];
    let mut uu = vec![0.0f64; d - dim];
    let mut coords = vec![0.0f64; d];
    for u in 0..nf {
        fine.unknown_coords(u, &mut x, &mut uu);
        coords[..dim].copy_from_slice(&x[..dim]);
        coords[dim..].copy_from_slice(&uu);
        let mut base = 0usize;
        let mut frac = vec![0.0f64; d];
        for k in 0..d {
            let t = (coords[k] - axes[k].origin) / axes[k].spacing;
            let i = (t.floor() as isize).clamp(0, axes[k].n_points as isize - 2) as usize;
            frac[k] = (t - i as f64).clamp(0.0, 1.0);
            base += i * str_[k];
        }
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut flat = base;
            for k in 0..d {
                if corner >> k & 1 == 1 {
                    w *= frac[k];
                    flat += str_[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            if w == 0.0 {
                continue;
            }
            for (fi, f) in full.iter().enumerate() {
                out[fi][u] += w * f[flat];
            }
        }
    }
    out
}
