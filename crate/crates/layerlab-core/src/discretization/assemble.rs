//! Cell-based assembly of the stiffness and mass.
//!
//! Every vertex-cell of the layer grid contributes one-point quadrature of
//! `grad(phi)^T (G^{-1} sqrt(det G)) grad(psi)` with the metric averaged
//! over the cell corners. Gradients at the cell center are staggered:
//! axis-`M` diagonal terms average the squared edge differences over the
//! `2^{D-1}` parallel edges (which reproduces the classical stencil in the
//! flat case), while mixed terms pair the averaged gradients of the two
//! axes, symmetrized in (phi, psi).
//!
//! Assembly runs row-parallel: each unknown accumulates the contributions
//! of its incident cells in ascending cell order, so `K` is bitwise
//! symmetric and independent of the worker count.

use super::{DiscretizationError, DiscreteForms, FormsMeta, LayerGrid};
use crate::cross_section::CrossSectionModes;
use crate::geometry::{FermiMetricField, GeometryError};
use crate::grid::{strides, unflatten};
use crate::smat;
use crate::sparse::CsrMatrix;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct AssembleOptions {
    /// Hard cap on the number of unknowns.
    pub unknown_cap: usize,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        Self { unknown_cap: 5_000_000 }
    }
}

#[derive(Clone, Copy)]
enum MetricSelector {
    Layer,
    Unperturbed,
}

/// Assemble `K`, `M` for the layer metric `G`.
pub fn assemble_forms(
    field: &FermiMetricField,
    grid: &LayerGrid,
    opts: &AssembleOptions,
) -> Result<DiscreteForms, DiscretizationError> {
    assemble_impl(field, grid, opts, MetricSelector::Layer)
}

/// Assemble `K0`, `M0` for the block metric `G0 = diag(g, I)`; its
/// spectrum is the sum of base and fiber spectra, which is the product
/// oracle downstream tests lean on. `modes` must live on this grid's
/// fiber.
pub fn assemble_unperturbed(
    field: &FermiMetricField,
    modes: &CrossSectionModes,
    grid: &LayerGrid,
    opts: &AssembleOptions,
) -> Result<DiscreteForms, DiscretizationError> {
    if !super::modes_match_grid(modes, grid) {
        return Err(DiscretizationError::FiberMismatch);
    }
    let mut forms = assemble_impl(field, grid, opts, MetricSelector::Unperturbed)?;
    forms.meta.fiber_energies = modes.energies.clone();
    Ok(forms)
}

fn assemble_impl(
    field: &FermiMetricField,
    grid: &LayerGrid,
    opts: &AssembleOptions,
    sel: MetricSelector,
) -> Result<DiscreteForms, DiscretizationError> {
    let n = grid.n_unknowns();
    if n > opts.unknown_cap {
        return Err(DiscretizationError::OutOfMemory { unknowns: n, cap: opts.unknown_cap });
    }
    let d = grid.total_dim();
    let dim = grid.dim();
    let pd = smat::packed_len(d);
    let shape: Vec<usize> = grid
        .base
        .shape()
        .into_iter()
        .chain(grid.fiber.shape())
        .collect();
    let h = grid.spacings();
    let vol: f64 = grid.cell_volume();
    let inv_h2: Vec<f64> = h.iter().map(|&x| 1.0 / (x * x)).collect();
    let fshape = grid.fiber.shape();
    let bshape = grid.base.shape();
    let fstr = strides(&fshape);
    let bstr = strides(&bshape);
    let n_fiber_v = grid.fiber.n_vertices();
    let w_edge = vol / (1usize << (d - 1)) as f64;
    let half_pow = 1.0 / (1usize << (d - 1)) as f64;

    let metric_at = |lp: usize| -> &[f64] {
        match sel {
            MetricSelector::Layer => &field.gg[lp * pd..(lp + 1) * pd],
            MetricSelector::Unperturbed => &field.g0[lp * pd..(lp + 1) * pd],
        }
    };

    // vertex flat index (base, fiber) from a combined multi-index
    let split_flat = |vm: &[usize]| -> (usize, usize) {
        let mut b = 0;
        for k in 0..dim {
            b += vm[k] * bstr[k];
        }
        let mut f = 0;
        for k in dim..d {
            f += vm[k] * fstr[k - dim];
        }
        (b, f)
    };

    let row_of = |u: usize| -> Result<Vec<(usize, f64)>, GeometryError> {
        let (bflat, fflat) = grid.vertices_of_unknown(u);
        let mut vm = vec![0usize; d];
        {
            let mut bmi = [0usize; 8];
            unflatten(bflat, &bshape, &mut bmi[..dim]);
            vm[..dim].copy_from_slice(&bmi[..dim]);
            let mut fmi = [0usize; 8];
            unflatten(fflat, &fshape, &mut fmi[..d - dim]);
            vm[dim..].copy_from_slice(&fmi[..d - dim]);
        }

        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(3usize.pow(d as u32));
        let mut avg = vec![0.0f64; pd];
        let mut cmat = vec![0.0f64; d * d];
        let mut corner_vm = vec![0usize; d];
        let n_corners = 1usize << d;

        // incident cells in ascending global order: offset bits, axis 0
        // most significant
        for mask in 0..n_corners {
            let mut ok = true;
            let mut cell = vec![0usize; d];
            for k in 0..d {
                let bit = (mask >> (d - 1 - k)) & 1;
                let off = bit as isize - 1;
                let c = vm[k] as isize + off;
                if c < 0 || c as usize + 1 >= shape[k] {
                    ok = false;
                    break;
                }
                cell[k] = c as usize;
            }
            if !ok {
                continue;
            }
            // my corner id within the cell
            let mut r = 0usize;
            for k in 0..d {
                r = (r << 1) | (vm[k] - cell[k]);
            }

            // corner-averaged metric -> C = G^{-1} sqrt(det G)
            avg.fill(0.0);
            for c in 0..n_corners {
                for k in 0..d {
                    corner_vm[k] = cell[k] + ((c >> (d - 1 - k)) & 1);
                }
                let (bf, ff) = split_flat(&corner_vm);
                let gp = metric_at(bf * n_fiber_v + ff);
                for e in 0..pd {
                    avg[e] += gp[e];
                }
            }
            for e in avg.iter_mut() {
                *e /= n_corners as f64;
            }
            let det = smat::det_packed(d, &avg);
            if !(det > 0.0) || !smat::inverse_packed(d, &avg, &mut cmat) {
                return Err(GeometryError::MetricNotPositive {
                    base_index: cell[..dim].iter().zip(&bstr).map(|(a, s)| a * s).sum(),
                    fiber_index: cell[dim..].iter().zip(&fstr).map(|(a, s)| a * s).sum(),
                });
            }
            let sdet = det.sqrt();
            for e in cmat.iter_mut() {
                *e *= sdet;
            }

            // contributions of this cell to row r
            for s in 0..n_corners {
                let mut v = 0.0;
                for m_ax in 0..d {
                    let bit = 1usize << (d - 1 - m_ax);
                    if s == r {
                        v += cmat[m_ax * d + m_ax] * inv_h2[m_ax] * w_edge;
                    } else if s == (r ^ bit) {
                        v -= cmat[m_ax * d + m_ax] * inv_h2[m_ax] * w_edge;
                    }
                }
                for m_ax in 0..d {
                    for n_ax in m_ax + 1..d {
                        let c_mn = cmat[m_ax * d + n_ax];
                        if c_mn == 0.0 {
                            continue;
                        }
                        let am_r = stag_coef(r, d, m_ax, h[m_ax], half_pow);
                        let an_s = stag_coef(s, d, n_ax, h[n_ax], half_pow);
                        let an_r = stag_coef(r, d, n_ax, h[n_ax], half_pow);
                        let am_s = stag_coef(s, d, m_ax, h[m_ax], half_pow);
                        v += c_mn * vol * (am_r * an_s + an_r * am_s);
                    }
                }
                if v == 0.0 {
                    continue;
                }
                // column unknown
                for k in 0..d {
                    corner_vm[k] = cell[k] + ((s >> (d - 1 - k)) & 1);
                }
                let (bf, ff) = split_flat(&corner_vm);
                if let Some(col) = grid.unknown_of_vertices(bf, ff) {
                    entries.push((col, v));
                }
            }
        }
        Ok(entries)
    };

    let rows: Result<Vec<Vec<(usize, f64)>>, GeometryError> =
        (0..n).into_par_iter().map(row_of).collect();
    let k = CsrMatrix::from_rows(n, rows?);

    // vertex-lumped mass: sqrt(det G at the vertex) * cell volume
    let m: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|u| {
            let (bf, ff) = grid.vertices_of_unknown(u);
            let gp = metric_at(bf * n_fiber_v + ff);
            smat::det_packed(d, gp).sqrt() * vol
        })
        .collect();

    Ok(DiscreteForms {
        k,
        m,
        grid: grid.clone(),
        meta: FormsMeta {
            metric: match sel {
                MetricSelector::Layer => "layer".into(),
                MetricSelector::Unperturbed => "unperturbed".into(),
            },
            fiber_energies: Vec::new(),
        },
    })
}

/// Staggered-average gradient coefficient of a corner along an axis.
#[inline]
fn stag_coef(corner: usize, d: usize, axis: usize, h: f64, half_pow: f64) -> f64 {
    let bit = (corner >> (d - 1 - axis)) & 1;
    let sign = if bit == 1 { 1.0 } else { -1.0 };
    sign * half_pow / h
}

/// Discrete residual of the comparison identity
///
/// ```text
/// (phi,(K - lambda M) psi) - (phi,(K0 - lambda M0) psi)
///   - (grad phi, G^{MK} A_K^N grad psi)_G + lambda (phi, B psi)_G
/// ```
///
/// with vertex-quadrature pairings (weight `M`) and central-difference
/// gradients; `O(h^2)` for smooth data. Part of the invariant suite.
#[allow(clippy::too_many_arguments)]
pub fn comparison_identity_residual(
    field: &FermiMetricField,
    forms: &DiscreteForms,
    forms0: &DiscreteForms,
    defo: &crate::geometry::DeformationTensors,
    phi: &[f64],
    psi: &[f64],
    lambda: f64,
) -> f64 {
    let grid = &forms.grid;
    let d = grid.total_dim();
    let pd = smat::packed_len(d);
    let n = forms.n_unknowns();

    let lhs = {
        let kp = forms.apply_shifted(psi, lambda);
        crate::parallel::dot(phi, &kp)
    };
    let rhs0 = {
        let kp = forms0.apply_shifted(psi, lambda);
        crate::parallel::dot(phi, &kp)
    };

    let gphi = forms.vertex_gradient(phi);
    let gpsi = forms.vertex_gradient(psi);

    let mut a_term = 0.0;
    let mut b_term = 0.0;
    let mut ginv = vec![0.0; d * d];
    let n_fiber_v = grid.fiber.n_vertices();
    for u in 0..n {
        let (bf, ff) = grid.vertices_of_unknown(u);
        let lp = bf * n_fiber_v + ff;
        let gp = &field.gg[lp * pd..(lp + 1) * pd];
        if !smat::inverse_packed(d, gp, &mut ginv) {
            continue;
        }
        let a = defo.a_at(lp);
        // grad(phi)^T G^{-1} A grad(psi), weighted by M_uu
        let mut v = 0.0;
        for m_ax in 0..d {
            for k_ax in 0..d {
                let gmk = ginv[m_ax * d + k_ax];
                if gmk == 0.0 {
                    continue;
                }
                for n_ax in 0..d {
                    v += gphi[m_ax][u] * gmk * a[k_ax * d + n_ax] * gpsi[n_ax][u];
                }
            }
        }
        a_term += v * forms.m[u];
        b_term += phi[u] * defo.b[lp] * psi[u] * forms.m[u];
    }

    (lhs - rhs0 - a_term + lambda * b_term).abs()
}
