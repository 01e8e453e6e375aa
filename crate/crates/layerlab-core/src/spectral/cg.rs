//! Preconditioned conjugate gradients for sparse SPD systems.

use super::SpectralError;
use crate::parallel::{dot, norm};
use crate::sparse::CsrMatrix;

/// Solve `(K + diag(extra)) x = rhs` by CG with a Jacobi preconditioner.
///
/// Converges when the relative residual drops below `cg_tol`; gives up
/// after `10 n` iterations.
pub fn solve_spd(
    k: &CsrMatrix,
    extra_diag: Option<&[f64]>,
    rhs: &[f64],
    cg_tol: f64,
) -> Result<Vec<f64>, SpectralError> {
    let n = k.n_rows;
    debug_assert_eq!(rhs.len(), n);
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut pd: Vec<f64> = k.diagonal();
    if let Some(e) = extra_diag {
        for (d, x) in pd.iter_mut().zip(e) {
            *d += x;
        }
    }
    for d in pd.iter_mut() {
        *d = if *d > 0.0 { 1.0 / *d } else { 1.0 };
    }

    let apply = |x: &[f64], y: &mut [f64]| {
        k.spmv(x, y);
        if let Some(e) = extra_diag {
            for i in 0..n {
                y[i] += e[i] * x[i];
            }
        }
    };

    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&pd).map(|(a, p)| a * p).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let max_iter = 10 * n.max(10);
    for it in 0..max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(SpectralError::CgNoConvergence { iterations: it, residual: norm(&r) / b_norm });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= cg_tol * b_norm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * pd[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SpectralError::CgNoConvergence { iterations: max_iter, residual: norm(&r) / b_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CsrMatrix;

    #[test]
    fn identity_returns_rhs() {
        let k = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let x = solve_spd(&k, None, &[1.0, -2.0, 0.5], 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-10);
        assert!((x[1] + 2.0).abs() < 1e-10);
        assert!((x[2] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn diagonal_inverse() {
        let k = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 4.0)]);
        let x = solve_spd(&k, None, &[1.0, 1.0, 1.0], 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 0.5).abs() < 1e-12);
        assert!((x[2] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn zero_rhs_short_circuits() {
        let k = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 2.0)]);
        let x = solve_spd(&k, None, &[0.0, 0.0], 1e-12).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
    }
}
