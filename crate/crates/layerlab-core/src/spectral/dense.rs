//! Dense helpers on top of nalgebra: sorted symmetric eigendecomposition,
//! Cholesky-reduced generalized Rayleigh-Ritz, and CSR densification for
//! small problems and test oracles.

use crate::sparse::CsrMatrix;
use nalgebra::{DMatrix, DVector};

/// Symmetric eigendecomposition with ascending eigenvalues.
pub fn sym_eigen_sorted(a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let se = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        se.eigenvalues[i]
            .partial_cmp(&se.eigenvalues[j])
            .unwrap()
            .then(i.cmp(&j))
    });
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Generalized symmetric eigenproblem `A y = theta B y` with `B` SPD,
/// via `B = L L^T` reduction. Returns ascending pairs, or `None` when the
/// factorization fails or is too ill-conditioned to back-substitute (the
/// eigensolver then shrinks its trial basis and retries).
pub fn gen_sym_eigen(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<(Vec<f64>, DMatrix<f64>)> {
    let chol = b.clone().cholesky()?;
    let l = chol.l();
    let mut dmin = f64::INFINITY;
    let mut dmax = 0.0f64;
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        if !d.is_finite() {
            return None;
        }
        dmin = dmin.min(d);
        dmax = dmax.max(d);
    }
    if !(dmin > 1e-9 * dmax) {
        return None;
    }
    // C = L^{-1} A L^{-T}
    let mut c = a.clone();
    // solve L * Z = A  (column-wise forward substitution)
    let linv_a = l.clone().solve_lower_triangular(&c)?;
    c = linv_a.transpose();
    let linv_at = l.clone().solve_lower_triangular(&c)?;
    let sym = (linv_at.transpose() + linv_at) * 0.5;
    let sym = sym.transpose(); // already symmetric; keep layout
    let (vals, z) = sym_eigen_sorted(sym);
    // y = L^{-T} z
    let y = l.transpose().solve_upper_triangular(&z)?;
    Some((vals, y))
}

pub fn csr_to_dense(a: &CsrMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.n_rows, a.n_cols);
    for i in 0..a.n_rows {
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            d[(i, a.col_idx[k] as usize)] = a.values[k];
        }
    }
    d
}

/// Dense SPD solve (test oracle for the CG path).
pub fn solve_spd_dense(a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let chol = a.clone().cholesky()?;
    let x = chol.solve(&DVector::from_column_slice(b));
    Some(x.as_slice().to_vec())
}
