//! Compressed sparse row matrices.
//!
//! Enough sparse machinery for symmetric second-order stencils: CSR
//! storage, deterministic construction from rows or triplets, parallel
//! matrix-vector and matrix-multivector products, and a plain-text
//! coordinate export.

use rayon::prelude::*;
use std::io::Write;

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from per-row entry lists. Entries in one row are summed if
    /// duplicated and stored sorted by column.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n_rows = rows.len();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        row_ptr.push(0usize);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut i = 0;
            while i < row.len() {
                let c = row[i].0;
                let mut v = row[i].1;
                let mut j = i + 1;
                while j < row.len() && row[j].0 == c {
                    v += row[j].1;
                    j += 1;
                }
                col_idx.push(c as u32);
                values.push(v);
                i = j;
            }
            row_ptr.push(col_idx.len());
        }
        Self { n_rows, n_cols, row_ptr, col_idx, values }
    }

    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); n_rows];
        for &(r, c, v) in triplets {
            rows[r].push((c, v));
        }
        Self::from_rows(n_cols, rows)
    }

    /// Dense square matrix to CSR (test plumbing; zeros are kept out).
    pub fn from_dense(a: &nalgebra::DMatrix<f64>) -> Self {
        let n = a.nrows();
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                (0..a.ncols())
                    .filter_map(|j| {
                        let v = a[(i, j)];
                        if v != 0.0 {
                            Some((j, v))
                        } else {
                            None
                        }
                    })
                    .collect()
            })
            .collect();
        Self::from_rows(a.ncols(), rows)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    fn row_apply(&self, i: usize, x: &[f64]) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        let mut s = 0.0;
        for k in lo..hi {
            s += self.values[k] * x[self.col_idx[k] as usize];
        }
        s
    }

    /// `y = A x`, parallel over rows, deterministic.
    pub fn spmv(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        y.par_chunks_mut(crate::parallel::CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| {
                let base = c * crate::parallel::CHUNK;
                for (off, out) in chunk.iter_mut().enumerate() {
                    *out = self.row_apply(base + off, x);
                }
            });
    }

    /// Multivector product `Y = A X` with `X`, `Y` row-major `n x cols`.
    pub fn spmv_block(&self, x: &[f64], y: &mut [f64], cols: usize) {
        debug_assert_eq!(x.len(), self.n_cols * cols);
        debug_assert_eq!(y.len(), self.n_rows * cols);
        y.par_chunks_mut(crate::parallel::CHUNK * cols)
            .enumerate()
            .for_each(|(c, chunk)| {
                let base = c * crate::parallel::CHUNK;
                for (off, out) in chunk.chunks_mut(cols).enumerate() {
                    let i = base + off;
                    out.fill(0.0);
                    let lo = self.row_ptr[i];
                    let hi = self.row_ptr[i + 1];
                    for k in lo..hi {
                        let a = self.values[k];
                        let xr = &x[self.col_idx[k] as usize * cols..][..cols];
                        for (o, xv) in out.iter_mut().zip(xr) {
                            *o += a * xv;
                        }
                    }
                }
            });
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_rows];
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] as usize == i {
                    d[i] = self.values[k];
                }
            }
        }
        d
    }

    /// Largest `|A - A^T|` entry (symmetry diagnostics).
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k] as usize;
                let mut ji = 0.0;
                for kk in self.row_ptr[j]..self.row_ptr[j + 1] {
                    if self.col_idx[kk] as usize == i {
                        ji = self.values[kk];
                    }
                }
                worst = worst.max((self.values[k] - ji).abs());
            }
        }
        worst
    }

    /// Coordinate text export: one `row col value` per line, 0-based,
    /// sorted by (row, col).
    pub fn write_coo_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                writeln!(w, "{} {} {:.17e}", i, self.col_idx[k], self.values[k])?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spmv_small() {
        // [[2,1,0],[1,2,1],[0,1,2]]
        let t = vec![
            (0, 0, 2.0),
            (0, 1, 1.0),
            (1, 0, 1.0),
            (1, 1, 2.0),
            (1, 2, 1.0),
            (2, 1, 1.0),
            (2, 2, 2.0),
        ];
        let a = CsrMatrix::from_triplets(3, 3, &t);
        let mut y = vec![0.0; 3];
        a.spmv(&[1.0, 2.0, 3.0], &mut y);
        assert_eq!(y, vec![4.0, 8.0, 8.0]);
        assert_eq!(a.max_asymmetry(), 0.0);
        assert_eq!(a.diagonal(), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.5), (1, 1, 1.0)]);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.diagonal(), vec![3.5, 1.0]);
    }

    #[test]
    fn coo_text_is_sorted() {
        let a = CsrMatrix::from_triplets(2, 2, &[(1, 0, 2.0), (0, 1, 1.0)]);
        let mut buf = Vec::new();
        a.write_coo_text(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("0 1"));
        assert!(lines[1].starts_with("1 0"));
    }

    #[test]
    fn block_product_matches_single() {
        let t = vec![(0, 0, 2.0), (0, 2, -1.0), (1, 1, 3.0), (2, 0, -1.0), (2, 2, 2.0)];
        let a = CsrMatrix::from_triplets(3, 3, &t);
        let x = [1.0, 2.0, 1.0, -1.0, 0.5, 0.0]; // two columns, row-major
        let mut y = [0.0; 6];
        a.spmv_block(&x, &mut y, 2);
        for col in 0..2 {
            let xi: Vec<f64> = (0..3).map(|i| x[i * 2 + col]).collect();
            let mut yi = vec![0.0; 3];
            a.spmv(&xi, &mut yi);
            for i in 0..3 {
                assert_eq!(y[i * 2 + col], yi[i]);
            }
        }
    }
}
