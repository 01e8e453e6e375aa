//! Deformation tensors comparing a metric field against a reference:
//!
//! ```text
//! A_K^N = delta_K^N - (det G)^{-1/2} (det G_ref)^{1/2} G_KL G_ref^{LN}
//! B     = 1 - (det G)^{-1/2} (det G_ref)^{1/2}
//! ```
//!
//! `|A|` is measured in the operator norm of the `G_ref` inner product,
//! i.e. `max |1 - c mu|` over the generalized eigenvalues `mu` of
//! `(G, G_ref)`, where `c = sqrt(det G_ref / det G)`.

use super::{FermiMetricField, GeometryError, DET_FLOOR};
use crate::smat;

#[derive(Debug, Clone)]
pub struct DeformationTensors {
    pub d: usize,
    /// Full `d x d` matrix `A` per point, row-major.
    pub a: Vec<f64>,
    /// Scalar `B` per point.
    pub b: Vec<f64>,
    /// `sup |A|` over the exterior region (operator norm w.r.t. `G_ref`).
    pub sup_a: f64,
    /// `sup |B|` over the exterior region.
    pub sup_b: f64,
}

impl DeformationTensors {
    #[inline]
    pub fn a_at(&self, pt: usize) -> &[f64] {
        &self.a[pt * self.d * self.d..][..self.d * self.d]
    }
}

/// Pointwise deformation tensors for packed symmetric fields sampled on
/// the same `n_pts` points. `exterior` marks the points entering the sup
/// norms.
pub fn deformation_tensors(
    d: usize,
    g: &[f64],
    g_ref: &[f64],
    n_pts: usize,
    exterior: &[bool],
) -> Result<DeformationTensors, GeometryError> {
    let pl = smat::packed_len(d);
    assert_eq!(g.len(), n_pts * pl, "metric field size mismatch");
    assert_eq!(g_ref.len(), n_pts * pl, "reference field size mismatch");
    assert_eq!(exterior.len(), n_pts, "exterior mask size mismatch");

    let mut a = vec![0.0; n_pts * d * d];
    let mut b = vec![0.0; n_pts];
    let mut sup_a = 0.0f64;
    let mut sup_b = 0.0f64;

    let mut g_full = vec![0.0; d * d];
    let mut ref_inv = vec![0.0; d * d];
    for pt in 0..n_pts {
        let gp = &g[pt * pl..(pt + 1) * pl];
        let rp = &g_ref[pt * pl..(pt + 1) * pl];
        let det_ref = smat::det_packed(d, rp);
        if !(det_ref > DET_FLOOR) {
            return Err(GeometryError::SingularReference { point: pt });
        }
        let det_g = smat::det_packed(d, gp);
        let c = (det_ref / det_g).sqrt();
        b[pt] = 1.0 - c;

        smat::unpack(d, gp, &mut g_full);
        if !smat::inverse_packed(d, rp, &mut ref_inv) {
            return Err(GeometryError::SingularReference { point: pt });
        }
        let dst = &mut a[pt * d * d..(pt + 1) * d * d];
        for i in 0..d {
            for j in 0..d {
                let mut v = 0.0;
                for k in 0..d {
                    v += g_full[i * d + k] * ref_inv[k * d + j];
                }
                dst[i * d + j] = (if i == j { 1.0 } else { 0.0 }) - c * v;
            }
        }

        if exterior[pt] {
            sup_b = sup_b.max(b[pt].abs());
            if let Some(mu) = smat::gen_sym_eigenvalues(d, gp, rp) {
                for m in mu {
                    sup_a = sup_a.max((1.0 - c * m).abs());
                }
            }
        }
    }

    Ok(DeformationTensors { d, a, b, sup_a, sup_b })
}

/// Deformation of a layer field against its own unperturbed reference
/// `G0`. The mask is over layer points (base-major, fiber fastest).
pub fn deformation_vs_unperturbed(
    field: &FermiMetricField,
    exterior: &[bool],
) -> Result<DeformationTensors, GeometryError> {
    deformation_tensors(
        field.total_dim(),
        &field.gg,
        &field.g0,
        field.n_layer_points(),
        exterior,
    )
}
