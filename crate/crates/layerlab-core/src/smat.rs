//! Small dense symmetric-matrix helpers.
//!
//! Metric tensors live at every grid point, so per-point operations must
//! not allocate. Matrices of dimension `d <= 8` are stored either packed
//! (lower triangle, row by row) or as full row-major slices; everything
//! here works on caller-provided buffers.

/// Packed length of a `d x d` symmetric matrix.
#[inline]
pub fn packed_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Index of entry `(i, j)`, `i >= j`, in packed storage.
#[inline]
pub fn packed_idx(i: usize, j: usize) -> usize {
    debug_assert!(i >= j);
    i * (i + 1) / 2 + j
}

/// Packed entry at `(i, j)` for any index order.
#[inline]
pub fn packed_get(p: &[f64], i: usize, j: usize) -> f64 {
    if i >= j {
        p[packed_idx(i, j)]
    } else {
        p[packed_idx(j, i)]
    }
}

/// Expand packed storage into a full row-major `d x d` buffer.
pub fn unpack(d: usize, p: &[f64], full: &mut [f64]) {
    debug_assert_eq!(p.len(), packed_len(d));
    debug_assert_eq!(full.len(), d * d);
    for i in 0..d {
        for j in 0..=i {
            let v = p[packed_idx(i, j)];
            full[i * d + j] = v;
            full[j * d + i] = v;
        }
    }
}

/// Pack the lower triangle of a full row-major matrix.
pub fn pack(d: usize, full: &[f64], p: &mut [f64]) {
    for i in 0..d {
        for j in 0..=i {
            p[packed_idx(i, j)] = full[i * d + j];
        }
    }
}

/// In-place Cholesky of a full row-major symmetric matrix (lower factor).
/// Returns `false` if the matrix is not numerically positive definite.
pub fn cholesky_in_place(d: usize, a: &mut [f64]) -> bool {
    for j in 0..d {
        let mut s = a[j * d + j];
        for k in 0..j {
            s -= a[j * d + k] * a[j * d + k];
        }
        if s <= 0.0 || !s.is_finite() {
            return false;
        }
        let l = s.sqrt();
        a[j * d + j] = l;
        for i in j + 1..d {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= a[i * d + k] * a[j * d + k];
            }
            a[i * d + j] = s / l;
        }
    }
    // zero the strict upper triangle so the factor is clean
    for i in 0..d {
        for j in i + 1..d {
            a[i * d + j] = 0.0;
        }
    }
    true
}

/// `true` if the packed symmetric matrix is positive definite.
pub fn is_positive_definite(d: usize, p: &[f64]) -> bool {
    let mut full = [0.0; 64];
    unpack(d, p, &mut full[..d * d]);
    cholesky_in_place(d, &mut full[..d * d])
}

/// Determinant of a packed symmetric matrix (Gaussian elimination with
/// partial pivoting on a stack buffer).
pub fn det_packed(d: usize, p: &[f64]) -> f64 {
    let mut a = [0.0; 64];
    unpack(d, p, &mut a[..d * d]);
    det_full(d, &mut a[..d * d])
}

/// Determinant of a full row-major matrix; clobbers the buffer.
pub fn det_full(d: usize, a: &mut [f64]) -> f64 {
    let mut det = 1.0;
    for col in 0..d {
        let mut piv = col;
        for r in col + 1..d {
            if a[r * d + col].abs() > a[piv * d + col].abs() {
                piv = r;
            }
        }
        if a[piv * d + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for c in 0..d {
                a.swap(piv * d + c, col * d + c);
            }
            det = -det;
        }
        let pv = a[col * d + col];
        det *= pv;
        for r in col + 1..d {
            let f = a[r * d + col] / pv;
            if f != 0.0 {
                for c in col..d {
                    a[r * d + c] -= f * a[col * d + c];
                }
            }
        }
    }
    det
}

/// Inverse of a packed symmetric matrix into a full row-major buffer.
/// Returns `false` on numerical singularity.
pub fn inverse_packed(d: usize, p: &[f64], inv: &mut [f64]) -> bool {
    let mut a = [0.0; 64];
    unpack(d, p, &mut a[..d * d]);
    inverse_full(d, &mut a[..d * d], inv)
}

/// Gauss-Jordan inverse of a full row-major matrix; clobbers `a`.
pub fn inverse_full(d: usize, a: &mut [f64], inv: &mut [f64]) -> bool {
    debug_assert_eq!(inv.len(), d * d);
    inv.fill(0.0);
    for i in 0..d {
        inv[i * d + i] = 1.0;
    }
    for col in 0..d {
        let mut piv = col;
        for r in col + 1..d {
            if a[r * d + col].abs() > a[piv * d + col].abs() {
                piv = r;
            }
        }
        let pv = a[piv * d + col];
        if pv == 0.0 || !pv.is_finite() {
            return false;
        }
        if piv != col {
            for c in 0..d {
                a.swap(piv * d + c, col * d + c);
                inv.swap(piv * d + c, col * d + c);
            }
        }
        let pv = a[col * d + col];
        for c in 0..d {
            a[col * d + c] /= pv;
            inv[col * d + c] /= pv;
        }
        for r in 0..d {
            if r != col {
                let f = a[r * d + col];
                if f != 0.0 {
                    for c in 0..d {
                        a[r * d + c] -= f * a[col * d + c];
                        inv[r * d + c] -= f * inv[col * d + c];
                    }
                }
            }
        }
    }
    true
}

/// Eigenvalues of a packed symmetric matrix by cyclic Jacobi sweeps,
/// ascending. Intended for `d <= 8` (metric tensors, shape operators).
pub fn sym_eigenvalues(d: usize, p: &[f64]) -> Vec<f64> {
    let mut a = [0.0; 64];
    unpack(d, p, &mut a[..d * d]);
    jacobi_eigenvalues(d, &mut a[..d * d])
}

/// Jacobi eigenvalue iteration on a full row-major symmetric buffer.
pub fn jacobi_eigenvalues(d: usize, a: &mut [f64]) -> Vec<f64> {
    const MAX_SWEEPS: usize = 64;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..d {
            for j in i + 1..d {
                off += a[i * d + j] * a[i * d + j];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + frobenius(d, a)) {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..d).map(|i| a[i * d + i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

fn frobenius(d: usize, a: &[f64]) -> f64 {
    a[..d * d].iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Generalized eigenvalues of the packed symmetric pencil `(A, B)` with
/// `B` positive definite, via `B = L L^T` reduction to `L^{-1} A L^{-T}`.
/// Returns `None` when `B` fails to factor.
pub fn gen_sym_eigenvalues(d: usize, a_packed: &[f64], b_packed: &[f64]) -> Option<Vec<f64>> {
    let mut l = [0.0; 64];
    unpack(d, b_packed, &mut l[..d * d]);
    if !cholesky_in_place(d, &mut l[..d * d]) {
        return None;
    }
    let mut a = [0.0; 64];
    unpack(d, a_packed, &mut a[..d * d]);
    // Y = L^{-1} A  (forward substitution on columns of A)
    let mut y = [0.0; 64];
    for col in 0..d {
        for i in 0..d {
            let mut s = a[i * d + col];
            for k in 0..i {
                s -= l[i * d + k] * y[k * d + col];
            }
            y[i * d + col] = s / l[i * d + i];
        }
    }
    // C = Y L^{-T}  via  C^T = L^{-1} Y^T
    let mut c = [0.0; 64];
    for col in 0..d {
        for i in 0..d {
            let mut s = y[col * d + i]; // (Y^T)[i][col]
            for k in 0..i {
                s -= l[i * d + k] * c[col * d + k];
            }
            c[col * d + i] = s / l[i * d + i];
        }
    }
    // symmetrize rounding noise before the Jacobi sweep
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (c[i * d + j] + c[j * d + i]);
            c[i * d + j] = v;
            c[j * d + i] = v;
        }
    }
    Some(jacobi_eigenvalues(d, &mut c[..d * d]))
}

/// Condition number (ratio of extreme eigenvalue magnitudes) of a packed
/// symmetric positive matrix. Returns `f64::INFINITY` when singular.
pub fn sym_condition(d: usize, p: &[f64]) -> f64 {
    let ev = sym_eigenvalues(d, p);
    let max = ev.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let min = ev.iter().fold(f64::INFINITY, |m, &v| m.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_inverse_3x3() {
        // symmetric PD matrix with known determinant
        let p = [4.0, 1.0, 3.0, 0.5, 0.25, 2.0]; // rows: [4], [1,3], [0.5,0.25,2]
        let d = 3;
        let det = det_packed(d, &p);
        // det by cofactor expansion of [[4,1,.5],[1,3,.25],[.5,.25,2]]
        let full = [4.0, 1.0, 0.5, 1.0, 3.0, 0.25, 0.5, 0.25, 2.0];
        let cof = full[0] * (full[4] * full[8] - full[5] * full[7])
            - full[1] * (full[3] * full[8] - full[5] * full[6])
            + full[2] * (full[3] * full[7] - full[4] * full[6]);
        assert!((det - cof).abs() < 1e-12);

        let mut inv = [0.0; 9];
        assert!(inverse_packed(d, &p, &mut inv));
        // A * A^{-1} = I
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += full[i * 3 + k] * inv[k * 3 + j];
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        // diag(1,2,5) rotated is still {1,2,5}
        let p = [2.0, 1.0, 2.0, 0.0, 1.0, 4.0];
        let ev = sym_eigenvalues(3, &p);
        // characteristic polynomial check: product and sum of roots
        let det = det_packed(3, &p);
        let tr = 2.0 + 2.0 + 4.0;
        assert!((ev.iter().product::<f64>() - det).abs() < 1e-10);
        assert!((ev.iter().sum::<f64>() - tr).abs() < 1e-10);
    }

    #[test]
    fn cholesky_detects_indefinite() {
        let mut a = [1.0, 2.0, 2.0, 1.0]; // eigenvalues 3, -1
        assert!(!cholesky_in_place(2, &mut a));
        let mut b = [2.0, 1.0, 1.0, 2.0];
        assert!(cholesky_in_place(2, &mut b));
    }
}
