//! Eigensolver and linear-solver checks against dense oracles.

mod common;

use common::{dense_generalized_eigenvalues, strip_field};
use layerlab_core::geometry::Profile1d;
use layerlab_core::sparse::CsrMatrix;
use layerlab_core::spectral::{
    count_below, smallest_eigenpairs, solve_spd, EigOptions, SpectralError,
};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random sparse-ish symmetric diagonally dominant matrix and a random
/// positive mass diagonal.
fn random_spd(n: usize, seed: u64) -> (CsrMatrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dense = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for _ in 0..6 {
            let j = rng.gen_range(0..n);
            let v = rng.gen::<f64>() - 0.5;
            dense[(i, j)] += v;
            dense[(j, i)] += v;
        }
    }
    for i in 0..n {
        let row_sum: f64 = (0..n).filter(|&j| j != i).map(|j| dense[(i, j)].abs()).sum();
        dense[(i, i)] = row_sum + 0.1 + rng.gen::<f64>();
    }
    let m: Vec<f64> = (0..n).map(|_| 0.2 + rng.gen::<f64>()).collect();
    (CsrMatrix::from_dense(&dense), m)
}

#[test]
fn diagonal_matrix_smallest_pairs() {
    let k = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0)]);
    let m = vec![1.0; 3];
    let r = smallest_eigenpairs(&k, &m, 2, &EigOptions::default()).unwrap();
    assert!((r.values[0] - 1.0).abs() < 1e-12);
    assert!((r.values[1] - 2.0).abs() < 1e-12);
    assert!(r.residual_norms.iter().all(|&x| x < 1e-12));
    assert!(r.converged);
}

#[test]
fn agreement_with_dense_oracle_across_seeds() {
    // iterative path vs dense generalized eigendecomposition
    for seed in 0..20u64 {
        let n = 60 + (seed as usize * 13) % 241; // 60..300
        let (k, m) = random_spd(n, seed);
        let count = 5.min(n);
        let mut opts = EigOptions::with_tol(1e-9);
        opts.max_iter = 20_000;
        let got = smallest_eigenpairs(&k, &m, count, &opts).unwrap();
        assert!(got.converged, "seed {seed} did not converge");

        let kd = layerlab_core::spectral::dense::csr_to_dense(&k);
        let s: Vec<f64> = m.iter().map(|&x| 1.0 / x.sqrt()).collect();
        let a = DMatrix::from_fn(n, n, |i, j| 0.5 * (kd[(i, j)] + kd[(j, i)]) * s[i] * s[j]);
        let (want, _) = layerlab_core::spectral::dense::sym_eigen_sorted(a);
        for i in 0..count {
            assert!(
                (got.values[i] - want[i]).abs() <= 1e-8 * (1.0 + want[i].abs()),
                "seed {seed} value {i}: got {} want {}",
                got.values[i],
                want[i]
            );
        }
        // M-orthonormality within 1e-8
        for i in 0..count {
            for j in 0..=i {
                let mut dot = 0.0;
                for l in 0..n {
                    dot += got.vectors[i][l] * m[l] * got.vectors[j][l];
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() <= 1e-8, "seed {seed} gram ({i},{j}) = {dot}");
            }
        }
    }
}

#[test]
fn ritz_values_are_monotone_nonincreasing() {
    let (k, m) = random_spd(220, 424242);
    let mut opts = EigOptions::with_tol(1e-9);
    opts.history = true;
    opts.block_size = Some(8);
    let r = smallest_eigenpairs(&k, &m, 4, &opts).unwrap();
    assert!(r.ritz_history.len() > 1);
    for w in r.ritz_history.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        for i in 0..prev.len().min(next.len()) {
            assert!(
                next[i] <= prev[i] + 1e-12 * (1.0 + prev[i].abs()),
                "Ritz value {i} increased: {} -> {}",
                prev[i],
                next[i]
            );
        }
    }
}

#[test]
fn strip_ground_state_matches_product_formula() {
    // width pi, L = 8 pi, grid 256 x 32: lambda_1 in [1, 1 + (pi/L)^2 + 5e-3]
    let l = 8.0 * std::f64::consts::PI;
    let (field, grid, _) = strip_field(l, 256, std::f64::consts::PI, 32, Profile1d::Zero);
    let forms = common::assemble(&field, &grid);
    let r = forms
        .smallest_eigenpairs(1, &EigOptions::with_tol(1e-7))
        .unwrap();
    let lo = 1.0;
    let hi = 1.0 + (std::f64::consts::PI / l).powi(2) + 5e-3;
    assert!(
        r.values[0] >= lo && r.values[0] <= hi,
        "lambda_1 = {} not in [{lo}, {hi}]",
        r.values[0]
    );
}

#[test]
fn bent_strip_has_bound_state_below_threshold() {
    // compact curvature bump (max 0.8, width 1 strip): lambda_1 < pi^2,
    // cross-checked against a dense solve on the same coarse grid
    let (field, grid, _) = strip_field(
        16.0,
        40,
        1.0,
        10,
        Profile1d::CompactBump { amplitude: 0.8, center: 8.0, half_width: 2.5 },
    );
    let forms = common::assemble(&field, &grid);
    let r = forms
        .smallest_eigenpairs(1, &EigOptions::with_tol(1e-9))
        .unwrap();
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    assert!(r.values[0] < pi2, "lambda_1 = {} not below pi^2", r.values[0]);
    let dense = dense_generalized_eigenvalues(&forms, 1);
    assert!(
        (r.values[0] - dense[0]).abs() <= 1e-8 * (1.0 + dense[0]),
        "iterative {} vs dense {}",
        r.values[0],
        dense[0]
    );
}

#[test]
fn cg_identity_and_diagonal() {
    let k = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
    let x = solve_spd(&k, None, &[3.0, -1.0, 0.25], 1e-12).unwrap();
    assert!((x[0] - 3.0).abs() < 1e-9 && (x[1] + 1.0).abs() < 1e-9);

    let k = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 4.0)]);
    let x = solve_spd(&k, None, &[1.0, 1.0, 1.0], 1e-14).unwrap();
    assert!((x[0] - 1.0).abs() < 1e-10);
    assert!((x[1] - 0.5).abs() < 1e-10);
    assert!((x[2] - 0.25).abs() < 1e-10);
}

#[test]
fn cg_matches_dense_factorization() {
    let (k, _) = random_spd(200, 99);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rhs: Vec<f64> = (0..200).map(|_| rng.gen::<f64>() - 0.5).collect();
    let x = solve_spd(&k, None, &rhs, 1e-12).unwrap();
    let kd = layerlab_core::spectral::dense::csr_to_dense(&k);
    let want = layerlab_core::spectral::dense::solve_spd_dense(&kd, &rhs).unwrap();
    for i in 0..200 {
        assert!((x[i] - want[i]).abs() <= 1e-8 * (1.0 + want[i].abs()));
    }
}

#[test]
fn count_below_against_discrete_enumeration() {
    // strip width pi, L = 40 pi at a coarse grid: count_below must equal
    // the closed-form count of discrete product eigenvalues
    let l = 40.0 * std::f64::consts::PI;
    let nx = 640;
    let nf = 12;
    let (field, grid, _) = strip_field(l, nx, std::f64::consts::PI, nf, Profile1d::Zero);
    let forms = common::assemble(&field, &grid);
    let hx = l / nx as f64;
    let hy = std::f64::consts::PI / nf as f64;
    let exact = common::discrete_product_eigenvalues(nx - 1, hx, nf - 1, hy, 400);

    let mut opts = EigOptions::with_tol(1e-7);
    opts.max_iter = 40_000;
    let got2 = forms.count_below(2.0, &opts).unwrap();
    let want2 = exact.iter().filter(|&&v| v < 2.0).count();
    assert_eq!(got2, want2, "count below 2");
    // the spec's product-formula count at threshold 2 is 40 +- 2
    assert!((got2 as i64 - 40).unsigned_abs() <= 2, "count {got2} vs 40 +- 2");

    let got0 = forms.count_below(0.9, &opts).unwrap();
    assert_eq!(got0, 0);
}

#[test]
fn count_below_threshold_five() {
    // floor(L/pi sqrt(4)) + floor(L/pi sqrt(1)) = 80 + 40 = 120 +- 2
    let l = 40.0 * std::f64::consts::PI;
    let nx = 512;
    let nf = 12;
    let (field, grid, _) = strip_field(l, nx, std::f64::consts::PI, nf, Profile1d::Zero);
    let forms = common::assemble(&field, &grid);
    let hx = l / nx as f64;
    let hy = std::f64::consts::PI / nf as f64;
    let exact = common::discrete_product_eigenvalues(nx - 1, hx, nf - 1, hy, 400);
    let want = exact.iter().filter(|&&v| v < 5.0).count();

    let mut opts = EigOptions::with_tol(1e-6);
    opts.max_iter = 60_000;
    let got = forms.count_below(5.0, &opts).unwrap();
    assert_eq!(got, want);
    assert!((got as i64 - 120).unsigned_abs() <= 2, "count {got} vs 120 +- 2");
}

#[test]
fn no_convergence_returns_best_so_far() {
    let (k, m) = random_spd(500, 5);
    let mut opts = EigOptions::with_tol(1e-14);
    opts.max_iter = 3;
    match smallest_eigenpairs(&k, &m, 4, &opts) {
        Err(SpectralError::EigenNoConvergence { best, iterations }) => {
            assert!(iterations <= 3 + 1);
            assert!(!best.converged);
        }
        other => panic!("expected EigenNoConvergence, got {other:?}"),
    }
}
