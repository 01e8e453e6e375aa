//! Dense harness for the spectral-gap lower bound
//! `||(H - lambda) psi||_{-1}^2 >= eps^2 / (lambda + eps + 1) ||psi||^2`
//! valid for symmetric PSD `H` with `dist(lambda, sigma(H)) >= eps`.

use super::WeylError;
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Size cap for the dense harness.
pub const MATRIX_BOUND_CAP: usize = 500;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeylBoundCertificate {
    pub lambda: f64,
    /// Shift applied to make `H` PSD (zero when already PSD).
    pub shift: f64,
    /// Exact distance from (shifted) `lambda` to the spectrum.
    pub eps: f64,
    /// Lower bound `eps^2 / (lambda + eps + 1)`.
    pub bound: f64,
    /// Smallest observed `||(H-lambda)psi||_{-1}^2 / ||psi||^2`.
    pub min_ratio: f64,
    /// The minimizing sample.
    pub argmin: Vec<f64>,
    pub samples: usize,
    /// `min_ratio >= bound - 1e-10`.
    pub holds: bool,
}

/// Verify the bound on `samples` seeded random unit vectors, using the
/// exact eigendecomposition of `H` for both the distance `eps` and the
/// dual norms.
pub fn matrix_weyl_bound(
    h: &DMatrix<f64>,
    lambda: f64,
    samples: usize,
    seed: u64,
) -> Result<WeylBoundCertificate, WeylError> {
    let n = h.nrows();
    if n != h.ncols() {
        return Err(WeylError::InvalidInput("matrix must be square".into()));
    }
    if n > MATRIX_BOUND_CAP {
        return Err(WeylError::MatrixTooLarge { n, cap: MATRIX_BOUND_CAP });
    }
    let sym = (h + h.transpose()) * 0.5;
    let (mut evals, evecs) = crate::spectral::dense::sym_eigen_sorted(sym);

    // enforce H >= 0 by shifting spectrum and lambda together
    let shift = (-evals[0]).max(0.0);
    let lambda_s = lambda + shift;
    for v in evals.iter_mut() {
        *v += shift;
    }

    let eps = evals
        .iter()
        .map(|t| (t - lambda_s).abs())
        .fold(f64::INFINITY, f64::min);
    if eps < 1e-12 {
        return Err(WeylError::LambdaInSpectrum { lambda, distance: eps });
    }
    let bound = eps * eps / (lambda_s + eps + 1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio = f64::INFINITY;
    let mut argmin = vec![0.0; n];
    for _ in 0..samples {
        let psi: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let norm2: f64 = psi.iter().map(|v| v * v).sum();
        if norm2 == 0.0 {
            continue;
        }
        // spectral coefficients c = V^T psi
        let mut ratio_num = 0.0;
        for (j, t) in evals.iter().enumerate() {
            let mut c = 0.0;
            for i in 0..n {
                c += evecs[(i, j)] * psi[i];
            }
            ratio_num += (t - lambda_s) * (t - lambda_s) / (t + 1.0) * c * c;
        }
        let ratio = ratio_num / norm2;
        if ratio < min_ratio {
            min_ratio = ratio;
            let scale = 1.0 / norm2.sqrt();
            for (a, p) in argmin.iter_mut().zip(&psi) {
                *a = p * scale;
            }
        }
    }

    Ok(WeylBoundCertificate {
        lambda,
        shift,
        eps,
        bound,
        min_ratio,
        argmin,
        samples,
        holds: min_ratio >= bound - 1e-10,
    })
}
