//! Normal frames and the shape operator for graph bases.

use super::{BaseKind, GeometryError, GraphData, ImmersedBase, COND_MAX, FRAME_TOL};
use crate::grid::{strides, unflatten, BaseGrid};
use crate::smat;

/// Orthonormal normal frames `f_alpha` and connection coefficients
/// `Gamma_{i,alpha,beta} = <d_i f_alpha, f_beta>` on the graph grid.
#[derive(Debug, Clone)]
pub struct NormalFrameField {
    pub dim: usize,
    pub codim: usize,
    pub grid: BaseGrid,
    /// `n_pts x codim x (dim+codim)`, vertex-major.
    pub frames: Vec<f64>,
    /// `n_pts x dim x codim x codim`, vertex-major.
    pub connection: Vec<f64>,
}

impl NormalFrameField {
    #[inline]
    pub fn frame(&self, pt: usize, alpha: usize) -> &[f64] {
        let d = self.dim + self.codim;
        &self.frames[(pt * self.codim + alpha) * d..][..d]
    }

    #[inline]
    pub fn gamma(&self, pt: usize, i: usize, alpha: usize, beta: usize) -> f64 {
        let c = self.codim;
        self.connection[((pt * self.dim + i) * c + alpha) * c + beta]
    }

    /// Worst orthonormality defect `max |<f_a, f_b> - delta_ab|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let d = self.dim + self.codim;
        let mut worst = 0.0f64;
        let n_pts = self.frames.len() / (self.codim * d);
        for pt in 0..n_pts {
            for a in 0..self.codim {
                for b in a..self.codim {
                    let fa = self.frame(pt, a);
                    let fb = self.frame(pt, b);
                    let mut dot = 0.0;
                    for c in 0..d {
                        dot += fa[c] * fb[c];
                    }
                    let want = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((dot - want).abs());
                }
            }
        }
        worst
    }
}

/// Base metric `g_ij` and contracted second fundamental form
/// `S_{alpha,ij}` on the graph grid (both symmetric in `ij`, packed).
#[derive(Debug, Clone)]
pub struct ShapeOperatorField {
    pub dim: usize,
    pub codim: usize,
    pub grid: BaseGrid,
    /// `n_pts x packed(dim)`.
    pub g: Vec<f64>,
    /// `n_pts x codim x packed(dim)`.
    pub s: Vec<f64>,
}

impl ShapeOperatorField {
    #[inline]
    pub fn g_at(&self, pt: usize) -> &[f64] {
        let pl = smat::packed_len(self.dim);
        &self.g[pt * pl..][..pl]
    }

    #[inline]
    pub fn s_at(&self, pt: usize, alpha: usize) -> &[f64] {
        let pl = smat::packed_len(self.dim);
        &self.s[(pt * self.codim + alpha) * pl..][..pl]
    }
}

/// Second-order finite differences on a vertex field: central in the
/// interior, one-sided 3-point at the boundary.
struct Differencer<'a> {
    grid: &'a BaseGrid,
    shape: Vec<usize>,
    strides: Vec<usize>,
}

impl<'a> Differencer<'a> {
    fn new(grid: &'a BaseGrid) -> Self {
        let shape = grid.shape();
        let strides = strides(&shape);
        Self { grid, shape, strides }
    }

    fn gradient(&self, field: &[f64], axis: usize) -> Vec<f64> {
        let n = field.len();
        let h = self.grid.axes[axis].spacing;
        let st = self.strides[axis] as isize;
        let np = self.shape[axis];
        let mut out = vec![0.0; n];
        let mut mi = vec![0usize; self.shape.len()];
        for p in 0..n {
            unflatten(p, &self.shape, &mut mi);
            let i = mi[axis];
            let pi = p as isize;
            out[p] = if i == 0 {
                (-3.0 * field[p] + 4.0 * field[(pi + st) as usize]
                    - field[(pi + 2 * st) as usize])
                    / (2.0 * h)
            } else if i + 1 == np {
                (3.0 * field[p] - 4.0 * field[(pi - st) as usize]
                    + field[(pi - 2 * st) as usize])
                    / (2.0 * h)
            } else {
                (field[(pi + st) as usize] - field[(pi - st) as usize]) / (2.0 * h)
            };
        }
        out
    }

    fn second(&self, field: &[f64], axis: usize) -> Vec<f64> {
        let n = field.len();
        let h2 = self.grid.axes[axis].spacing.powi(2);
        let st = self.strides[axis] as isize;
        let np = self.shape[axis];
        let mut out = vec![0.0; n];
        let mut mi = vec![0usize; self.shape.len()];
        for p in 0..n {
            unflatten(p, &self.shape, &mut mi);
            let i = mi[axis];
            let pi = p as isize;
            let (a, b, c) = if i == 0 {
                (p, (pi + st) as usize, (pi + 2 * st) as usize)
            } else if i + 1 == np {
                (p, (pi - st) as usize, (pi - 2 * st) as usize)
            } else {
                ((pi - st) as usize, p, (pi + st) as usize)
            };
            out[p] = (field[a] - 2.0 * field[b] + field[c]) / h2;
        }
        out
    }
}

fn graph_data(base: &ImmersedBase) -> Result<&GraphData, GeometryError> {
    match &base.kind {
        BaseKind::GraphOverPlane(data) => Ok(data),
        BaseKind::CurveByCurvature { .. } => Err(GeometryError::InvalidBase(
            "normal frames are only built for graph bases; curves carry their connection in the torsion profile".into(),
        )),
    }
}

fn check_resolution(grid: &BaseGrid) -> Result<(), GeometryError> {
    for (axis, ax) in grid.axes.iter().enumerate() {
        if ax.n_points < 3 {
            return Err(GeometryError::GridTooCoarse { axis, points: ax.n_points });
        }
    }
    Ok(())
}

/// Gradients of every height function along every axis.
fn height_gradients(data: &GraphData, dim: usize, codim: usize) -> Vec<Vec<Vec<f64>>> {
    let diff = Differencer::new(&data.grid);
    (0..codim)
        .map(|a| (0..dim).map(|i| diff.gradient(&data.sigma[a], i)).collect())
        .collect()
}

/// Induced base metric `g = I + grad(sigma)^T grad(sigma)` at a vertex.
fn base_metric_at(grads: &[Vec<Vec<f64>>], dim: usize, codim: usize, pt: usize, out: &mut [f64]) {
    for i in 0..dim {
        for j in 0..=i {
            let mut v = if i == j { 1.0 } else { 0.0 };
            for a in 0..codim {
                v += grads[a][i][pt] * grads[a][j][pt];
            }
            out[smat::packed_idx(i, j)] = v;
        }
    }
}

/// Build orthonormal normal frames by Gram-Schmidt on the seed vectors
/// `n_alpha = (-grad sigma_alpha, e_alpha)` and difference them for the
/// normal-connection coefficients.
pub fn build_normal_frames(base: &ImmersedBase) -> Result<NormalFrameField, GeometryError> {
    let data = graph_data(base)?;
    check_resolution(&data.grid)?;
    let (dim, codim) = (base.dim, base.codim);
    let d = dim + codim;
    let n_pts = data.grid.n_vertices();
    let grads = height_gradients(data, dim, codim);

    // tangent degeneracy check through the induced metric
    let pl = smat::packed_len(dim);
    let mut gp = vec![0.0; pl];
    for pt in 0..n_pts {
        base_metric_at(&grads, dim, codim, pt, &mut gp);
        let cond = smat::sym_condition(dim, &gp);
        if !(cond <= COND_MAX) {
            return Err(GeometryError::DegenerateTangent { point: pt, condition: cond });
        }
    }

    let mut frames = vec![0.0; n_pts * codim * d];
    let mut seed = vec![0.0; d];
    for pt in 0..n_pts {
        for a in 0..codim {
            seed.fill(0.0);
            for i in 0..dim {
                seed[i] = -grads[a][i][pt];
            }
            seed[dim + a] = 1.0;
            // remove previously fixed frames
            for b in 0..a {
                let fb = &frames[(pt * codim + b) * d..][..d];
                let mut dot = 0.0;
                for c in 0..d {
                    dot += seed[c] * fb[c];
                }
                for c in 0..d {
                    seed[c] -= dot * fb[c];
                }
            }
            let norm = seed.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dst = &mut frames[(pt * codim + a) * d..][..d];
            for c in 0..d {
                dst[c] = seed[c] / norm;
            }
        }
    }

    // connection: difference each frame component, project on the frames
    let diff = Differencer::new(&data.grid);
    let mut connection = vec![0.0; n_pts * dim * codim * codim];
    let mut comp = vec![0.0; n_pts];
    for a in 0..codim {
        for c in 0..d {
            for pt in 0..n_pts {
                comp[pt] = frames[(pt * codim + a) * d + c];
            }
            for i in 0..dim {
                let dcomp = diff.gradient(&comp, i);
                for pt in 0..n_pts {
                    for b in 0..codim {
                        connection[((pt * dim + i) * codim + a) * codim + b] +=
                            dcomp[pt] * frames[(pt * codim + b) * d + c];
                    }
                }
            }
        }
    }

    let field = NormalFrameField { dim, codim, grid: data.grid.clone(), frames, connection };
    debug_assert!(field.orthonormality_defect() <= FRAME_TOL);
    Ok(field)
}

/// Contract the numerically differenced Hessians of the height functions
/// with the normal frames, and record the induced base metric.
pub fn second_fundamental_form(
    base: &ImmersedBase,
    frames: &NormalFrameField,
) -> Result<ShapeOperatorField, GeometryError> {
    let data = graph_data(base)?;
    check_resolution(&data.grid)?;
    let (dim, codim) = (base.dim, base.codim);
    let n_pts = data.grid.n_vertices();
    let diff = Differencer::new(&data.grid);
    let grads = height_gradients(data, dim, codim);

    // Hessians of each height function: pure second differences on the
    // diagonal, composed first differences for the mixed entries.
    let pl = smat::packed_len(dim);
    let mut hess: Vec<Vec<f64>> = vec![vec![0.0; n_pts * pl]; codim];
    for a in 0..codim {
        for i in 0..dim {
            let hii = diff.second(&data.sigma[a], i);
            for pt in 0..n_pts {
                hess[a][pt * pl + smat::packed_idx(i, i)] = hii[pt];
            }
            for j in 0..i {
                let mixed = diff.gradient(&grads[a][j], i);
                for pt in 0..n_pts {
                    hess[a][pt * pl + smat::packed_idx(i, j)] = mixed[pt];
                }
            }
        }
    }

    let mut g = vec![0.0; n_pts * pl];
    let mut s = vec![0.0; n_pts * codim * pl];
    for pt in 0..n_pts {
        base_metric_at(&grads, dim, codim, pt, &mut g[pt * pl..(pt + 1) * pl]);
        for b in 0..codim {
            let fb = frames.frame(pt, b);
            for e in 0..pl {
                let mut v = 0.0;
                for a in 0..codim {
                    v += hess[a][pt * pl + e] * fb[dim + a];
                }
                s[(pt * codim + b) * pl + e] = v;
            }
        }
    }

    Ok(ShapeOperatorField { dim, codim, grid: data.grid.clone(), g, s })
}
