//! Blocked multivector kernels for the eigensolver.
//!
//! Multivectors are stored row-major (`n` rows of `c` contiguous column
//! entries) so Gram products and block updates run over contiguous
//! stretches. All reductions are ordered-chunk deterministic.

use crate::parallel::{chunked_reduce, CHUNK};
use nalgebra::DMatrix;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct MultiVec {
    pub n: usize,
    pub c: usize,
    pub data: Vec<f64>,
}

impl MultiVec {
    pub fn zeros(n: usize, c: usize) -> Self {
        Self { n, c, data: vec![0.0; n * c] }
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Self {
        let c = cols.len();
        let n = if c == 0 { 0 } else { cols[0].len() };
        let mut mv = Self::zeros(n, c);
        for (k, col) in cols.iter().enumerate() {
            for i in 0..n {
                mv.data[i * c + k] = col[i];
            }
        }
        mv
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.data[i * self.c + k]).collect()
    }

    pub fn to_columns(&self) -> Vec<Vec<f64>> {
        (0..self.c).map(|k| self.column(k)).collect()
    }

    /// Keep only the listed columns, in order.
    pub fn select_columns(&self, keep: &[usize]) -> MultiVec {
        let mut out = MultiVec::zeros(self.n, keep.len());
        for i in 0..self.n {
            let src = &self.data[i * self.c..][..self.c];
            let dst = &mut out.data[i * keep.len()..][..keep.len()];
            for (kk, &k) in keep.iter().enumerate() {
                dst[kk] = src[k];
            }
        }
        out
    }

    /// Append the columns of `other` on the right.
    pub fn hcat(&self, other: &MultiVec) -> MultiVec {
        debug_assert_eq!(self.n, other.n);
        let c = self.c + other.c;
        let mut out = MultiVec::zeros(self.n, c);
        for i in 0..self.n {
            out.data[i * c..i * c + self.c]
                .copy_from_slice(&self.data[i * self.c..(i + 1) * self.c]);
            out.data[i * c + self.c..(i + 1) * c]
                .copy_from_slice(&other.data[i * other.c..(i + 1) * other.c]);
        }
        out
    }
}

/// `A^T B` for row-major multivectors (deterministic).
pub fn gram(a: &MultiVec, b: &MultiVec) -> DMatrix<f64> {
    gram_impl(a, None, b)
}

/// `A^T diag(m) B`.
pub fn gram_m(a: &MultiVec, m: &[f64], b: &MultiVec) -> DMatrix<f64> {
    gram_impl(a, Some(m), b)
}

fn gram_impl(a: &MultiVec, m: Option<&[f64]>, b: &MultiVec) -> DMatrix<f64> {
    debug_assert_eq!(a.n, b.n);
    let (ca, cb) = (a.c, b.c);
    let total = chunked_reduce(
        a.n,
        |r| {
            let mut local = vec![0.0f64; ca * cb];
            for i in r {
                let arow = &a.data[i * ca..][..ca];
                let brow = &b.data[i * cb..][..cb];
                let w = m.map_or(1.0, |m| m[i]);
                for p in 0..ca {
                    let av = arow[p] * w;
                    if av != 0.0 {
                        let dst = &mut local[p * cb..][..cb];
                        for (d, bv) in dst.iter_mut().zip(brow) {
                            *d += av * bv;
                        }
                    }
                }
            }
            local
        },
        |mut acc, part| {
            for (x, y) in acc.iter_mut().zip(&part) {
                *x += y;
            }
            acc
        },
        vec![0.0f64; ca * cb],
    );
    DMatrix::from_fn(ca, cb, |i, j| total[i * cb + j])
}

/// `S * C` for a row-major multivector and small dense coefficient matrix.
pub fn apply_coef(s: &MultiVec, coef: &DMatrix<f64>) -> MultiVec {
    debug_assert_eq!(s.c, coef.nrows());
    let cout = coef.ncols();
    // row-major copy of the coefficients for contiguous inner loops
    let mut cr = vec![0.0f64; s.c * cout];
    for k in 0..s.c {
        for j in 0..cout {
            cr[k * cout + j] = coef[(k, j)];
        }
    }
    let mut out = MultiVec::zeros(s.n, cout);
    out.data
        .par_chunks_mut(CHUNK * cout)
        .enumerate()
        .for_each(|(cidx, chunk)| {
            let base = cidx * CHUNK;
            for (off, orow) in chunk.chunks_mut(cout).enumerate() {
                let srow = &s.data[(base + off) * s.c..][..s.c];
                for (k, &sv) in srow.iter().enumerate() {
                    if sv != 0.0 {
                        let crow = &cr[k * cout..][..cout];
                        for (o, cv) in orow.iter_mut().zip(crow) {
                            *o += sv * cv;
                        }
                    }
                }
            }
        });
    out
}

/// `dst += scale * (S * C)`; shapes as in [`apply_coef`].
pub fn apply_coef_add(dst: &mut MultiVec, s: &MultiVec, coef: &DMatrix<f64>, scale: f64) {
    debug_assert_eq!(s.c, coef.nrows());
    debug_assert_eq!(dst.c, coef.ncols());
    debug_assert_eq!(dst.n, s.n);
    let cout = dst.c;
    let mut cr = vec![0.0f64; s.c * cout];
    for k in 0..s.c {
        for j in 0..cout {
            cr[k * cout + j] = scale * coef[(k, j)];
        }
    }
    let sc = s.c;
    let sdata = &s.data;
    dst.data
        .par_chunks_mut(CHUNK * cout)
        .enumerate()
        .for_each(|(cidx, chunk)| {
            let base = cidx * CHUNK;
            for (off, orow) in chunk.chunks_mut(cout).enumerate() {
                let srow = &sdata[(base + off) * sc..][..sc];
                for (k, &sv) in srow.iter().enumerate() {
                    if sv != 0.0 {
                        let crow = &cr[k * cout..][..cout];
                        for (o, cv) in orow.iter_mut().zip(crow) {
                            *o += sv * cv;
                        }
                    }
                }
            }
        });
}

/// `dst += scale * src` elementwise over equal-shape multivectors.
pub fn axpy_mv(dst: &mut MultiVec, src: &MultiVec, scale: f64) {
    debug_assert_eq!(dst.n, src.n);
    debug_assert_eq!(dst.c, src.c);
    dst.data
        .par_chunks_mut(CHUNK)
        .zip(src.data.par_chunks(CHUNK))
        .for_each(|(d, s)| {
            for (x, y) in d.iter_mut().zip(s) {
                *x += scale * y;
            }
        });
}

/// Residual `R = KX - diag(m) X diag(lambda)` (fused, parallel).
pub fn residual(kx: &MultiVec, x: &MultiVec, m: &[f64], lambda: &[f64]) -> MultiVec {
    let c = x.c;
    let mut r = MultiVec::zeros(x.n, c);
    r.data
        .par_chunks_mut(CHUNK * c)
        .enumerate()
        .for_each(|(cidx, chunk)| {
            let base = cidx * CHUNK;
            for (off, rrow) in chunk.chunks_mut(c).enumerate() {
                let i = base + off;
                let kxr = &kx.data[i * c..][..c];
                let xr = &x.data[i * c..][..c];
                let mi = m[i];
                for k in 0..c {
                    rrow[k] = kxr[k] - mi * xr[k] * lambda[k];
                }
            }
        });
    r
}

/// Column norms `||r_k||_{M^{-1}}` (deterministic).
pub fn residual_norms_minv(r: &MultiVec, m: &[f64]) -> Vec<f64> {
    let c = r.c;
    let sums = chunked_reduce(
        r.n,
        |range| {
            let mut local = vec![0.0f64; c];
            for i in range {
                let row = &r.data[i * c..][..c];
                let im = 1.0 / m[i];
                for k in 0..c {
                    local[k] += row[k] * row[k] * im;
                }
            }
            local
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                *x += y;
            }
            a
        },
        vec![0.0f64; c],
    );
    sums.into_iter().map(f64::sqrt).collect()
}

/// Elementwise `W = diag(p) R`.
pub fn diag_apply(p: &[f64], r: &MultiVec) -> MultiVec {
    let c = r.c;
    let mut w = MultiVec::zeros(r.n, c);
    w.data
        .par_chunks_mut(CHUNK * c)
        .enumerate()
        .for_each(|(cidx, chunk)| {
            let base = cidx * CHUNK;
            for (off, wrow) in chunk.chunks_mut(c).enumerate() {
                let i = base + off;
                let rrow = &r.data[i * c..][..c];
                let pi = p[i];
                for k in 0..c {
                    wrow[k] = pi * rrow[k];
                }
            }
        });
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_and_apply_roundtrip() {
        let a = MultiVec::from_columns(&[vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 1.0]]);
        let g = gram(&a, &a);
        assert_eq!(g[(0, 0)], 5.0);
        assert_eq!(g[(0, 1)], 2.0);
        assert_eq!(g[(1, 1)], 10.0);

        let coef = DMatrix::from_row_slice(2, 1, &[2.0, -1.0]);
        let b = apply_coef(&a, &coef);
        assert_eq!(b.column(0), vec![2.0, -3.0, 3.0]);
    }

    #[test]
    fn weighted_gram() {
        let a = MultiVec::from_columns(&[vec![1.0, 2.0]]);
        let g = gram_m(&a, &[3.0, 0.5], &a);
        assert_eq!(g[(0, 0)], 3.0 + 2.0);
    }
}
