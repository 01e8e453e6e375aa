//! Pointwise assembly of the layer metric `G`, its product reference
//! `G0 = diag(g, I)`, and the reduced metric with the connection terms
//! stripped.

use super::graph::second_fundamental_form;
use super::{BaseKind, GeometryError, ImmersedBase, NormalFrameField};
use crate::grid::{BaseGrid, FiberGrid};
use crate::smat;

/// Sampled metric data on a layer grid (base vertices x fiber tensor
/// vertices, fiber fastest).
#[derive(Debug, Clone)]
pub struct FermiMetricField {
    pub dim: usize,
    pub codim: usize,
    pub base: BaseGrid,
    pub fiber: FiberGrid,
    /// Base metric per base vertex, packed `dim x dim`.
    pub g: Vec<f64>,
    /// Contracted second fundamental form per base vertex:
    /// `codim x packed(dim)`.
    pub s: Vec<f64>,
    /// Connection coefficients per base vertex: `dim x codim x codim`.
    pub connection: Vec<f64>,
    /// Layer metric per layer point, packed `D x D`.
    pub gg: Vec<f64>,
    /// Unperturbed block metric per layer point, packed `D x D`.
    pub g0: Vec<f64>,
}

impl FermiMetricField {
    pub fn total_dim(&self) -> usize {
        self.dim + self.codim
    }

    pub fn n_base_points(&self) -> usize {
        self.base.n_vertices()
    }

    pub fn n_fiber_points(&self) -> usize {
        self.fiber.n_vertices()
    }

    pub fn n_layer_points(&self) -> usize {
        self.n_base_points() * self.n_fiber_points()
    }

    #[inline]
    pub fn layer_index(&self, base_pt: usize, fiber_pt: usize) -> usize {
        base_pt * self.n_fiber_points() + fiber_pt
    }

    #[inline]
    pub fn g_packed(&self, base_pt: usize) -> &[f64] {
        let pl = smat::packed_len(self.dim);
        &self.g[base_pt * pl..][..pl]
    }

    #[inline]
    pub fn s_packed(&self, base_pt: usize, alpha: usize) -> &[f64] {
        let pl = smat::packed_len(self.dim);
        &self.s[(base_pt * self.codim + alpha) * pl..][..pl]
    }

    #[inline]
    pub fn gamma(&self, base_pt: usize, i: usize, alpha: usize, beta: usize) -> f64 {
        let c = self.codim;
        self.connection[((base_pt * self.dim + i) * c + alpha) * c + beta]
    }

    #[inline]
    pub fn metric_packed(&self, layer_pt: usize) -> &[f64] {
        let pl = smat::packed_len(self.total_dim());
        &self.gg[layer_pt * pl..][..pl]
    }

    #[inline]
    pub fn unperturbed_packed(&self, layer_pt: usize) -> &[f64] {
        let pl = smat::packed_len(self.total_dim());
        &self.g0[layer_pt * pl..][..pl]
    }

    /// `max |G - G0|` entrywise over all layer points.
    pub fn max_deviation_from_unperturbed(&self) -> f64 {
        self.gg
            .iter()
            .zip(&self.g0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Reduced metric: base block `g_ij - 2 u_a S_{a,ij} + u_a u_b
/// (S_a g^{-1} S_b)_ij`, zero off-blocks, identity fiber block. Only the
/// base block is stored; the determinant of the full matrix equals the
/// determinant of this block.
#[derive(Debug, Clone)]
pub struct ReducedMetricField {
    pub dim: usize,
    pub codim: usize,
    /// Per layer point, packed `dim x dim` base block.
    pub base_block: Vec<f64>,
}

impl ReducedMetricField {
    #[inline]
    pub fn block_packed(&self, layer_pt: usize) -> &[f64] {
        let pl = smat::packed_len(self.dim);
        &self.base_block[layer_pt * pl..][..pl]
    }

    pub fn det(&self, layer_pt: usize) -> f64 {
        smat::det_packed(self.dim, self.block_packed(layer_pt))
    }
}

struct BasePointData {
    /// packed base metric
    g: Vec<f64>,
    /// packed `S_alpha`
    s: Vec<f64>,
    /// `Gamma_{i,alpha,beta}`
    gamma: Vec<f64>,
    /// full `dim x dim` cross matrices `S_a g^{-1} S_b` for all pairs
    sgs: Vec<f64>,
    /// full `dim x dim` shape operators `g^{-1} S_a`
    ginv_s: Vec<f64>,
}

/// Evaluate per-base-vertex geometry (metric, shape operator, connection)
/// for either base kind.
fn base_point_data(
    base: &ImmersedBase,
    frames: Option<&NormalFrameField>,
    base_grid: &BaseGrid,
) -> Result<BasePointData, GeometryError> {
    let (dim, codim) = (base.dim, base.codim);
    let pl = smat::packed_len(dim);
    let n_pts = base_grid.n_vertices();
    let mut g = vec![0.0; n_pts * pl];
    let mut s = vec![0.0; n_pts * codim * pl];
    let mut gamma = vec![0.0; n_pts * dim * codim * codim];

    match &base.kind {
        BaseKind::CurveByCurvature { curvature, torsion } => {
            debug_assert_eq!(dim, 1);
            let ax = &base_grid.axes[0];
            for pt in 0..n_pts {
                let x = ax.coord(pt);
                g[pt] = 1.0; // arclength parametrization
                for (a, prof) in curvature.iter().enumerate() {
                    s[pt * codim + a] = prof.eval(x);
                }
                if let Some(tau) = torsion {
                    let t = tau.eval(x);
                    // <nabla f_1, f_2> = tau, antisymmetric counterpart
                    gamma[(pt * codim) * codim + 1] = t; // i=0, a=0, b=1
                    gamma[(pt * codim + 1) * codim] = -t; // i=0, a=1, b=0
                }
            }
        }
        BaseKind::GraphOverPlane(data) => {
            let frames = frames.ok_or_else(|| {
                GeometryError::InvalidBase("graph bases need a normal frame field".into())
            })?;
            if !grids_match(&data.grid, base_grid) {
                return Err(GeometryError::InvalidBase(
                    "layer base grid must coincide with the graph sampling grid".into(),
                ));
            }
            let shape = second_fundamental_form(base, frames)?;
            g.copy_from_slice(&shape.g);
            s.copy_from_slice(&shape.s);
            gamma.copy_from_slice(&frames.connection);
        }
    }

    // cross matrices S_a g^{-1} S_b and shape operators g^{-1} S_a
    let mut sgs = vec![0.0; n_pts * codim * codim * dim * dim];
    let mut ginv_s = vec![0.0; n_pts * codim * dim * dim];
    let mut ginv = vec![0.0; dim * dim];
    let mut sa = vec![0.0; dim * dim];
    let mut sb = vec![0.0; dim * dim];
    let mut tmp = vec![0.0; dim * dim];
    for pt in 0..n_pts {
        if !smat::inverse_packed(dim, &g[pt * pl..(pt + 1) * pl], &mut ginv) {
            return Err(GeometryError::DegenerateTangent { point: pt, condition: f64::INFINITY });
        }
        for a in 0..codim {
            smat::unpack(dim, &s[(pt * codim + a) * pl..][..pl], &mut sa);
            {
                let dst = &mut ginv_s[(pt * codim + a) * dim * dim..][..dim * dim];
                for i in 0..dim {
                    for j in 0..dim {
                        let mut v = 0.0;
                        for k in 0..dim {
                            v += ginv[i * dim + k] * sa[k * dim + j];
                        }
                        dst[i * dim + j] = v;
                    }
                }
            }
            for b in 0..codim {
                smat::unpack(dim, &s[(pt * codim + b) * pl..][..pl], &mut sb);
                // tmp = g^{-1} S_b ; out = S_a tmp
                for i in 0..dim {
                    for j in 0..dim {
                        let mut v = 0.0;
                        for k in 0..dim {
                            v += ginv[i * dim + k] * sb[k * dim + j];
                        }
                        tmp[i * dim + j] = v;
                    }
                }
                let dst = &mut sgs
                    [((pt * codim + a) * codim + b) * dim * dim..][..dim * dim];
                for i in 0..dim {
                    for j in 0..dim {
                        let mut v = 0.0;
                        for k in 0..dim {
                            v += sa[i * dim + k] * tmp[k * dim + j];
                        }
                        dst[i * dim + j] = v;
                    }
                }
            }
        }
    }

    Ok(BasePointData { g, s, gamma, sgs, ginv_s })
}

fn grids_match(a: &BaseGrid, b: &BaseGrid) -> bool {
    a.axes.len() == b.axes.len()
        && a.axes.iter().zip(&b.axes).all(|(x, y)| {
            x.n_points == y.n_points
                && (x.origin - y.origin).abs() <= 1e-12 * (1.0 + x.origin.abs())
                && (x.spacing - y.spacing).abs() <= 1e-12 * x.spacing.abs()
        })
}

/// Assemble the layer metric and its product reference on the tensor grid
/// `base_grid x fiber`. For curve bases `frames` may be `None` (the
/// connection comes from the torsion profile); graph bases require it.
pub fn fermi_metric(
    base: &ImmersedBase,
    frames: Option<&NormalFrameField>,
    base_grid: &BaseGrid,
    fiber: &FiberGrid,
) -> Result<FermiMetricField, GeometryError> {
    if fiber.codim != base.codim {
        return Err(GeometryError::InvalidBase(format!(
            "fiber grid has codim {}, base has codim {}",
            fiber.codim, base.codim
        )));
    }
    let (dim, codim) = (base.dim, base.codim);
    let d = dim + codim;
    let pd = smat::packed_len(d);
    let pl = smat::packed_len(dim);
    let data = base_point_data(base, frames, base_grid)?;

    let n_base = base_grid.n_vertices();
    let n_fiber = fiber.n_vertices();
    let mut gg = vec![0.0; n_base * n_fiber * pd];
    let mut g0 = vec![0.0; n_base * n_fiber * pd];

    let mut u = vec![0.0f64; codim];
    let mut w = vec![0.0f64; dim * codim];
    let mut jac = vec![0.0f64; dim * dim];
    for bp in 0..n_base {
        let gp = &data.g[bp * pl..(bp + 1) * pl];
        for fp in 0..n_fiber {
            fiber.vertex_coords(fp, &mut u);
            let lp = bp * n_fiber + fp;
            let out = &mut gg[lp * pd..(lp + 1) * pd];
            let out0 = &mut g0[lp * pd..(lp + 1) * pd];

            // tube-fold check: the Jacobian factor I - u_a g^{-1} S_a must
            // keep positive determinant up to the focal distance
            for i in 0..dim {
                for j in 0..dim {
                    let mut v = if i == j { 1.0 } else { 0.0 };
                    for a in 0..codim {
                        v -= u[a] * data.ginv_s[(bp * codim + a) * dim * dim + i * dim + j];
                    }
                    jac[i * dim + j] = v;
                }
            }
            if smat::det_full(dim, &mut jac) <= 1e-12 {
                return Err(GeometryError::MetricNotPositive {
                    base_index: bp,
                    fiber_index: fp,
                });
            }

            // W_{i,b} = u_a Gamma_{i,a,b}
            for i in 0..dim {
                for b in 0..codim {
                    let mut v = 0.0;
                    for a in 0..codim {
                        v += u[a] * data.gamma[((bp * dim + i) * codim + a) * codim + b];
                    }
                    w[i * codim + b] = v;
                }
            }

            // base block
            for i in 0..dim {
                for j in 0..=i {
                    let mut v = gp[smat::packed_idx(i, j)];
                    for a in 0..codim {
                        v -= 2.0 * u[a] * data.s[(bp * codim + a) * pl + smat::packed_idx(i, j)];
                    }
                    for a in 0..codim {
                        for b in 0..codim {
                            v += u[a]
                                * u[b]
                                * data.sgs[((bp * codim + a) * codim + b) * dim * dim
                                    + i * dim
                                    + j];
                        }
                    }
                    for c in 0..codim {
                        v += w[i * codim + c] * w[j * codim + c];
                    }
                    out[smat::packed_idx(i, j)] = v;
                    out0[smat::packed_idx(i, j)] = gp[smat::packed_idx(i, j)];
                }
            }
            // off block and fiber block
            for b in 0..codim {
                let row = dim + b;
                for i in 0..dim {
                    out[smat::packed_idx(row, i)] = w[i * codim + b];
                    out0[smat::packed_idx(row, i)] = 0.0;
                }
                for a in 0..=b {
                    let v = if a == b { 1.0 } else { 0.0 };
                    out[smat::packed_idx(row, dim + a)] = v;
                    out0[smat::packed_idx(row, dim + a)] = v;
                }
            }

            if !smat::is_positive_definite(d, out) {
                return Err(GeometryError::MetricNotPositive {
                    base_index: bp,
                    fiber_index: fp,
                });
            }
        }
    }

    Ok(FermiMetricField {
        dim,
        codim,
        base: base_grid.clone(),
        fiber: fiber.clone(),
        g: data.g,
        s: data.s,
        connection: data.gamma,
        gg,
        g0,
    })
}

/// Strip the connection terms: same base block as `G` minus the
/// `W W^T` contribution, zero off-blocks, identity fiber block.
pub fn reduced_metric_tilde(field: &FermiMetricField) -> ReducedMetricField {
    let (dim, codim) = (field.dim, field.codim);
    let pl = smat::packed_len(dim);
    let n_base = field.n_base_points();
    let n_fiber = field.n_fiber_points();
    let mut base_block = vec![0.0; n_base * n_fiber * pl];
    let mut u = vec![0.0f64; codim];

    // recompute from the stored per-vertex data so the cross term is the
    // (S g^{-1} S) contraction, not a subtraction of rounded quantities
    let mut ginv = vec![0.0; dim * dim];
    let mut sa = vec![0.0; dim * dim];
    let mut sb = vec![0.0; dim * dim];
    let mut tmp = vec![0.0; dim * dim];
    let mut sgs = vec![0.0; codim * codim * dim * dim];
    for bp in 0..n_base {
        let gp = field.g_packed(bp);
        smat::inverse_packed(dim, gp, &mut ginv);
        for a in 0..codim {
            smat::unpack(dim, field.s_packed(bp, a), &mut sa);
            for b in 0..codim {
                smat::unpack(dim, field.s_packed(bp, b), &mut sb);
                for i in 0..dim {
                    for j in 0..dim {
                        let mut v = 0.0;
                        for k in 0..dim {
                            v += ginv[i * dim + k] * sb[k * dim + j];
                        }
                        tmp[i * dim + j] = v;
                    }
                }
                for i in 0..dim {
                    for j in 0..dim {
                        let mut v = 0.0;
                        for k in 0..dim {
                            v += sa[i * dim + k] * tmp[k * dim + j];
                        }
                        sgs[(a * codim + b) * dim * dim + i * dim + j] = v;
                    }
                }
            }
        }
        for fp in 0..n_fiber {
            field.fiber.vertex_coords(fp, &mut u);
            let lp = bp * n_fiber + fp;
            let out = &mut base_block[lp * pl..(lp + 1) * pl];
            for i in 0..dim {
                for j in 0..=i {
                    let mut v = gp[smat::packed_idx(i, j)];
                    for a in 0..codim {
                        v -= 2.0 * u[a] * field.s_packed(bp, a)[smat::packed_idx(i, j)];
                    }
                    for a in 0..codim {
                        for b in 0..codim {
                            v += u[a] * u[b] * sgs[(a * codim + b) * dim * dim + i * dim + j];
                        }
                    }
                    out[smat::packed_idx(i, j)] = v;
                }
            }
        }
    }
    ReducedMetricField { dim, codim, base_block }
}
