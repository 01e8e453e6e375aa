//! Singular-family packets `xi_n (x) sigma_1`.
//!
//! The base envelope is the C^2 cutoff `(1 - t^2)^3` supported in the unit
//! ball, scaled to radius `R_n = R_0 2^{n-1}`, modulated by
//! `cos(k (x_1 - c_n))` with `k = sqrt(max(lambda - E_1, 0))`. Every extra
//! term of `(K - lambda M) psi_n` carries at least one envelope
//! derivative, so the residual decays like `1/R_n`; cosine packets keep
//! the whole pipeline real-valued.

use super::{WeylError, WeylThresholds};
use crate::cross_section::CrossSectionModes;
use crate::discretization::{modes_match_grid, DiscreteForms};

/// C^2 compactly supported envelope.
pub fn bump_c2(t: f64) -> f64 {
    let a = t.abs();
    if a < 1.0 {
        let w = 1.0 - a * a;
        w * w * w
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct PacketParams {
    /// First packet radius.
    pub r0: f64,
    /// Gap between neighbouring support boxes.
    pub box_gap: f64,
    /// Margin from the truncation boundary.
    pub edge_margin: f64,
}

impl PacketParams {
    /// Radii and box layout from the scan thresholds and the fiber width.
    pub fn from_thresholds(t: &WeylThresholds, fiber_width: f64, h_base: f64) -> Self {
        Self {
            r0: t.r0_fiber_widths * fiber_width,
            box_gap: 2.0 * h_base,
            edge_margin: 2.0 * h_base,
        }
    }
}

/// Members `psi_n`, their support boxes along the first base axis, and
/// the packet parameters that produced them.
#[derive(Debug, Clone)]
pub struct SingularFamily {
    pub members: Vec<Vec<f64>>,
    /// `(lo, hi)` extents along the first base axis, pairwise disjoint.
    pub supports: Vec<(f64, f64)>,
    pub centers: Vec<f64>,
    pub radii: Vec<f64>,
    pub wavenumber: f64,
    pub lambda: f64,
}

impl SingularFamily {
    /// Wrap explicit vectors (e.g. an exact discrete eigenvector) as a
    /// family; no support metadata.
    pub fn from_members(members: Vec<Vec<f64>>, lambda: f64) -> Self {
        let n = members.len();
        Self {
            members,
            supports: vec![(f64::NAN, f64::NAN); n],
            centers: vec![f64::NAN; n],
            radii: vec![f64::NAN; n],
            wavenumber: 0.0,
            lambda,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Index sets of nonzero entries are pairwise disjoint.
    pub fn supports_disjoint(&self) -> bool {
        let n = match self.members.first() {
            Some(m) => m.len(),
            None => return true,
        };
        let mut owner = vec![-1i64; n];
        for (mi, m) in self.members.iter().enumerate() {
            for (i, &v) in m.iter().enumerate() {
                if v != 0.0 {
                    if owner[i] >= 0 {
                        return false;
                    }
                    owner[i] = mi as i64;
                }
            }
        }
        true
    }
}

/// Build an M-normalized singular family on the grid of `forms`.
///
/// For `lambda < E_1` the wavenumber is zero and the members are plain
/// envelope packets (falsification probes).
pub fn build_singular_family(
    forms: &DiscreteForms,
    modes: &CrossSectionModes,
    lambda: f64,
    n_members: usize,
    params: &PacketParams,
) -> Result<SingularFamily, WeylError> {
    let grid = &forms.grid;
    if !modes_match_grid(modes, grid) {
        return Err(WeylError::InvalidInput(
            "cross-section modes were computed on a different fiber grid".into(),
        ));
    }
    if n_members == 0 {
        return Err(WeylError::InvalidInput("n_members must be positive".into()));
    }

    let e1 = modes.e1();
    let k = (lambda - e1).max(0.0).sqrt();

    // layout along the first base axis
    let ax = &grid.base.axes[0];
    let x_min = ax.origin;
    let x_max = ax.origin + ax.extent();
    let mut centers = Vec::with_capacity(n_members);
    let mut radii = Vec::with_capacity(n_members);
    let mut cursor = x_min + params.edge_margin;
    let mut max_feasible = 0usize;
    let mut needed = 0.0;
    for n in 0..n_members {
        let r = params.r0 * (1u64 << n) as f64;
        let center = cursor + r;
        let hi = center + r;
        needed = hi + params.edge_margin - x_min;
        if hi <= x_max - params.edge_margin {
            max_feasible = n + 1;
        }
        centers.push(center);
        radii.push(r);
        cursor = hi + params.box_gap;
    }
    if max_feasible < n_members {
        return Err(WeylError::DomainTooShort {
            needed,
            available: x_max - x_min,
            max_feasible,
        });
    }

    let dim = grid.dim();
    let sigma1 = modes.ground_state();
    let n_unknowns = grid.n_unknowns();
    let nf = grid.fiber.n_unknowns();
    let mut members = Vec::with_capacity(n_members);
    let mut x = vec![0.0f64; dim];
    let mut uu = vec![0.0f64; grid.codim()];
    // mid-point of the transverse base axes (packets are radial in x)
    let mid: Vec<f64> = grid
        .base
        .axes
        .iter()
        .map(|a| a.origin + 0.5 * a.extent())
        .collect();
    for n in 0..n_members {
        let mut psi = vec![0.0; n_unknowns];
        for u in 0..n_unknowns {
            let f = u % nf;
            grid.unknown_coords(u, &mut x, &mut uu);
            let mut r2 = (x[0] - centers[n]) * (x[0] - centers[n]);
            for kk in 1..dim {
                r2 += (x[kk] - mid[kk]) * (x[kk] - mid[kk]);
            }
            let t = r2.sqrt() / radii[n];
            let env = bump_c2(t);
            if env == 0.0 {
                continue;
            }
            psi[u] = env * (k * (x[0] - centers[n])).cos() * sigma1[f];
        }
        let norm = forms.m_norm(&psi);
        if norm == 0.0 {
            return Err(WeylError::InvalidInput(format!(
                "member {n} vanishes on the grid; radius too small for the spacing"
            )));
        }
        for v in psi.iter_mut() {
            *v /= norm;
        }
        members.push(psi);
    }

    Ok(SingularFamily {
        members,
        supports: centers
            .iter()
            .zip(&radii)
            .map(|(&c, &r)| (c - r, c + r))
            .collect(),
        centers,
        radii,
        wavenumber: k,
        lambda,
    })
}
