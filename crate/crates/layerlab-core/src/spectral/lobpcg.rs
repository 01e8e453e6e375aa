//! Blocked preconditioned CG eigensolver (LOBPCG) for `K x = lambda M x`
//! with sparse symmetric PSD `K` and positive diagonal `M`.
//!
//! Eigenpairs are computed in batches that are locked (hard-deflated) once
//! their `M^{-1}`-weighted residuals pass the tolerance, so the same driver
//! serves "smallest `count`" queries and "everything below a threshold"
//! counting. Trial blocks are seeded deterministically; tiny problems fall
//! back to a dense decomposition because a three-block trial subspace no
//! longer fits.

use super::dense::{csr_to_dense, gen_sym_eigen, sym_eigen_sorted};
use super::kernels::*;
use super::{EigOptions, EigenResult, SpectralError};
use crate::sparse::CsrMatrix;
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

enum Goal {
    Count(usize),
    Below { threshold: f64, cap: usize },
}

/// Result of [`spectrum_below`]: all computed pairs lie below the first
/// locked value `>= threshold`; `complete` says whether that witness was
/// found before the cap.
#[derive(Debug, Clone)]
pub struct SpectrumBelow {
    pub result: EigenResult,
    pub complete: bool,
}

/// The `count` smallest generalized eigenpairs.
pub fn smallest_eigenpairs(
    k: &CsrMatrix,
    m_diag: &[f64],
    count: usize,
    opts: &EigOptions,
) -> Result<EigenResult, SpectralError> {
    let (res, _) = drive(k, m_diag, Goal::Count(count), opts)?;
    Ok(res)
}

/// All eigenpairs strictly below `threshold` (plus one witness at or above
/// it when `complete`). At most `cap` pairs are computed.
pub fn spectrum_below(
    k: &CsrMatrix,
    m_diag: &[f64],
    threshold: f64,
    cap: usize,
    opts: &EigOptions,
) -> Result<SpectrumBelow, SpectralError> {
    let (result, complete) = drive(k, m_diag, Goal::Below { threshold, cap }, opts)?;
    Ok(SpectrumBelow { result, complete })
}

/// Number of generalized eigenvalues `< threshold`; exact for counts up to
/// [`COUNT_CAP`].
pub const COUNT_CAP: usize = 200;

pub fn count_below(
    k: &CsrMatrix,
    m_diag: &[f64],
    threshold: f64,
    opts: &EigOptions,
) -> Result<usize, SpectralError> {
    let below = spectrum_below(k, m_diag, threshold, COUNT_CAP + 1, opts)?;
    let n = below.result.values.iter().filter(|&&v| v < threshold).count();
    if !below.complete || n > COUNT_CAP {
        return Err(SpectralError::CountCapExceeded { cap: COUNT_CAP });
    }
    Ok(n)
}

fn validate(k: &CsrMatrix, m_diag: &[f64]) -> Result<(), SpectralError> {
    if k.n_rows != k.n_cols || k.n_rows != m_diag.len() {
        return Err(SpectralError::DimensionMismatch(format!(
            "K is {}x{}, M has {} entries",
            k.n_rows,
            k.n_cols,
            m_diag.len()
        )));
    }
    if m_diag.iter().any(|&m| m <= 0.0 || !m.is_finite()) {
        return Err(SpectralError::DimensionMismatch(
            "mass diagonal must be strictly positive".into(),
        ));
    }
    Ok(())
}

fn drive(
    k: &CsrMatrix,
    m_diag: &[f64],
    goal: Goal,
    opts: &EigOptions,
) -> Result<(EigenResult, bool), SpectralError> {
    validate(k, m_diag)?;
    let n = k.n_rows;

    let use_dense = opts.force_dense
        || match &goal {
            Goal::Count(c) => n < 40 || 4 * c + 16 >= n,
            Goal::Below { .. } => n <= 400,
        };
    if use_dense {
        return Ok(dense_path(k, m_diag, &goal, opts));
    }

    // Jacobi preconditioner on K + M
    let mut pd = k.diagonal();
    for (d, m) in pd.iter_mut().zip(m_diag) {
        let v = *d + *m;
        *d = if v > 0.0 { 1.0 / v } else { 1.0 };
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked = MultiVec::zeros(n, 0);
    let mut locked_vals: Vec<f64> = Vec::new();
    let mut locked_res: Vec<f64> = Vec::new();
    let mut history: Vec<Vec<f64>> = Vec::new();
    let mut iterations = 0usize;
    let mut complete = matches!(goal, Goal::Count(_));

    loop {
        let remaining = match &goal {
            Goal::Count(c) => {
                if locked_vals.len() >= *c {
                    break;
                }
                c - locked_vals.len()
            }
            Goal::Below { threshold, cap } => {
                if locked_vals.last().is_some_and(|&v| v >= *threshold) {
                    complete = true;
                    break;
                }
                if locked_vals.len() >= *cap {
                    complete = false;
                    break;
                }
                cap - locked_vals.len()
            }
        };

        let mut bs = opts
            .block_size
            .unwrap_or_else(|| match &goal {
                Goal::Count(c) => (*c + 4).clamp(8, 32),
                Goal::Below { .. } => 18,
            })
            .max(4);
        let fit = (n.saturating_sub(locked.c + 2)) / 3;
        bs = bs.min(fit);
        if bs < 2 {
            return Err(SpectralError::EigenNoConvergence {
                iterations,
                best: Box::new(finish(locked_vals, &locked, locked_res, iterations, false, history)),
            });
        }
        // guard columns at the top of the block are never locked
        let need_lock = remaining.min((bs - 2).max(1));

        let x0 = seed_block(n, bs, locked_vals.len(), opts, &mut rng);
        let budget = opts.max_iter.saturating_sub(iterations);
        if budget == 0 {
            return Err(SpectralError::EigenNoConvergence {
                iterations,
                best: Box::new(finish(locked_vals, &locked, locked_res, iterations, false, history)),
            });
        }
        // a threshold query is done as soon as a converged witness at or
        // above the cap is available; no need to polish the whole block
        let early_stop = match &goal {
            Goal::Count(_) => None,
            Goal::Below { threshold, .. } => Some(*threshold),
        };
        let out = run_batch(
            k,
            m_diag,
            &pd,
            &locked,
            x0,
            need_lock,
            early_stop,
            opts.tol,
            budget,
            opts.history.then_some(&mut history),
            &mut rng,
        );
        iterations += out.iters;
        log::debug!(
            target: "layerlab_spectral",
            "{{\"event\":\"batch\",\"locked\":{},\"new\":{},\"iters\":{},\"res_max\":{:.3e}}}",
            locked_vals.len(),
            out.locked_count,
            out.iters,
            out.res.iter().take(out.locked_count).fold(0.0f64, |a, &b| a.max(b))
        );
        if out.locked_count == 0 {
            return Err(SpectralError::EigenNoConvergence {
                iterations,
                best: Box::new(finish(locked_vals, &locked, locked_res, iterations, false, history)),
            });
        }
        let keep: Vec<usize> = (0..out.locked_count).collect();
        let newly = out.vecs.select_columns(&keep);
        locked = locked.hcat(&newly);
        locked_vals.extend_from_slice(&out.vals[..out.locked_count]);
        locked_res.extend_from_slice(&out.res[..out.locked_count]);
        let witness_found = early_stop
            .is_some_and(|t| locked_vals.last().is_some_and(|&v| v >= t));
        if out.locked_count < need_lock && !witness_found {
            // budget ran out mid-batch
            return Err(SpectralError::EigenNoConvergence {
                iterations,
                best: Box::new(finish(locked_vals, &locked, locked_res, iterations, false, history)),
            });
        }
    }

    Ok((finish(locked_vals, &locked, locked_res, iterations, true, history), complete))
}

/// Dense decomposition for problems too small for a three-block trial
/// space. `M` is folded in by the diagonal similarity `M^{-1/2} K M^{-1/2}`;
/// residuals are still measured against the sparse operator.
fn dense_path(k: &CsrMatrix, m_diag: &[f64], goal: &Goal, opts: &EigOptions) -> (EigenResult, bool) {
    let n = k.n_rows;
    let kd = csr_to_dense(k);
    let s: Vec<f64> = m_diag.iter().map(|&m| 1.0 / m.sqrt()).collect();
    let a = DMatrix::from_fn(n, n, |i, j| 0.5 * (kd[(i, j)] + kd[(j, i)]) * s[i] * s[j]);
    let (vals, vecs) = sym_eigen_sorted(a);
    let want = match goal {
        Goal::Count(c) => (*c).min(n),
        Goal::Below { threshold, cap } => {
            let below = vals.iter().filter(|&&v| v < *threshold).count();
            // keep one witness above the threshold when it exists
            (below + 1).min(n).min(*cap)
        }
    };
    let mut values = Vec::with_capacity(want);
    let mut vectors = Vec::with_capacity(want);
    let mut residual_norms = Vec::with_capacity(want);
    let mut kx = vec![0.0; n];
    for j in 0..want {
        let x: Vec<f64> = (0..n).map(|i| vecs[(i, j)] * s[i]).collect();
        k.spmv(&x, &mut kx);
        let mut r2 = 0.0;
        for i in 0..n {
            let r = kx[i] - vals[j] * m_diag[i] * x[i];
            r2 += r * r / m_diag[i];
        }
        values.push(vals[j]);
        vectors.push(x);
        residual_norms.push(r2.sqrt());
    }
    let complete = match goal {
        Goal::Count(_) => true,
        Goal::Below { threshold, .. } => values.iter().any(|&v| v >= *threshold) || want == n,
    };
    let converged = residual_norms.iter().all(|&r| r <= opts.tol.max(1e-9));
    (
        EigenResult {
            values,
            vectors,
            residual_norms,
            iterations: 0,
            converged,
            ritz_history: Vec::new(),
        },
        complete,
    )
}

fn finish(
    vals: Vec<f64>,
    vecs: &MultiVec,
    res: Vec<f64>,
    iterations: usize,
    converged: bool,
    history: Vec<Vec<f64>>,
) -> EigenResult {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap().then(a.cmp(&b)));
    EigenResult {
        values: order.iter().map(|&i| vals[i]).collect(),
        vectors: order.iter().map(|&i| vecs.column(i)).collect(),
        residual_norms: order.iter().map(|&i| res[i]).collect(),
        iterations,
        converged,
        ritz_history: history,
    }
}

fn seed_block(
    n: usize,
    bs: usize,
    offset: usize,
    opts: &EigOptions,
    rng: &mut ChaCha8Rng,
) -> MultiVec {
    let mut x = MultiVec::zeros(n, bs);
    for col in 0..bs {
        let provided = opts
            .initial
            .as_ref()
            .and_then(|init| init.get(offset + col))
            .filter(|v| v.len() == n);
        match provided {
            Some(v) => {
                for i in 0..n {
                    x.data[i * bs + col] = v[i];
                }
            }
            None => {
                for i in 0..n {
                    x.data[i * bs + col] = rng.gen::<f64>() - 0.5;
                }
            }
        }
    }
    x
}

/// Remove the `basis` components (M-inner product) from `x`.
fn project_out(x: &mut MultiVec, basis: &MultiVec, m: &[f64]) {
    if basis.c == 0 {
        return;
    }
    let g = gram_m(basis, m, x);
    apply_coef_add(x, basis, &g, -1.0);
}

/// SVQB M-orthonormalization; compacts rank-deficient blocks and applies
/// the same transform to an optional cache. Returns the retained rank.
fn ortho_m(x: &mut MultiVec, mut cache: Option<&mut MultiVec>, m: &[f64]) -> usize {
    for _pass in 0..2 {
        if x.c == 0 {
            return 0;
        }
        let b = gram_m(x, m, x);
        // diagonal scaling
        let mut d = vec![0.0f64; x.c];
        for i in 0..x.c {
            let bii = b[(i, i)];
            d[i] = if bii > 0.0 { 1.0 / bii.sqrt() } else { 0.0 };
        }
        let bs = DMatrix::from_fn(x.c, x.c, |i, j| b[(i, j)] * d[i] * d[j]);
        let (vals, v) = sym_eigen_sorted(bs);
        let vmax = vals.last().copied().unwrap_or(0.0).max(0.0);
        let keep: Vec<usize> = (0..x.c)
            .filter(|&i| vals[i] > 1e-10 * vmax && vals[i] > 0.0 && vals[i].is_finite())
            .collect();
        if keep.is_empty() {
            x.c = 0;
            x.data.clear();
            return 0;
        }
        let mut t = DMatrix::zeros(x.c, keep.len());
        for (jj, &j) in keep.iter().enumerate() {
            let s = 1.0 / vals[j].sqrt();
            for i in 0..x.c {
                t[(i, jj)] = d[i] * v[(i, j)] * s;
            }
        }
        *x = apply_coef(x, &t);
        if let Some(kx) = cache.as_deref_mut() {
            *kx = apply_coef(kx, &t);
        }
        let well_conditioned = vals[keep[0]] > 1e-6 * vmax;
        if keep.len() == t.nrows() && well_conditioned {
            break;
        }
    }
    x.c
}

struct BatchOut {
    vals: Vec<f64>,
    vecs: MultiVec,
    res: Vec<f64>,
    iters: usize,
    locked_count: usize,
}

#[allow(clippy::too_many_arguments)]
fn run_batch(
    k: &CsrMatrix,
    m: &[f64],
    pd: &[f64],
    locked: &MultiVec,
    mut x: MultiVec,
    need_lock: usize,
    early_stop: Option<f64>,
    tol: f64,
    iter_budget: usize,
    mut history: Option<&mut Vec<Vec<f64>>>,
    rng: &mut ChaCha8Rng,
) -> BatchOut {
    let n = x.n;
    let bs = x.c;

    project_out(&mut x, locked, m);
    while ortho_m(&mut x, None, m) < bs {
        // rank-deficient start; top up with fresh random directions
        let mut extra = MultiVec::zeros(n, bs - x.c);
        for v in extra.data.iter_mut() {
            *v = rng.gen::<f64>() - 0.5;
        }
        project_out(&mut extra, locked, m);
        project_out(&mut extra, &x, m);
        x = x.hcat(&extra);
    }

    let mut kx = MultiVec::zeros(n, bs);
    k.spmv_block(&x.data, &mut kx.data, bs);

    // initial Rayleigh-Ritz on the block alone
    let mut lambda = block_rayleigh_ritz(&mut x, &mut kx, m);

    let mut p: Option<(MultiVec, MultiVec)> = None;
    let mut iters = 0usize;

    loop {
        let r = residual(&kx, &x, m, &lambda);
        let res = residual_norms_minv(&r, m);
        if let Some(h) = history.as_deref_mut() {
            h.push(lambda.clone());
        }
        let mut conv = 0;
        while conv < bs && res[conv] <= tol {
            conv += 1;
        }
        let take = conv.min(need_lock);
        let witness = early_stop.is_some_and(|t| take > 0 && lambda[take - 1] >= t);
        if conv >= need_lock || witness || iters >= iter_budget {
            return BatchOut { vals: lambda, vecs: x, res, iters, locked_count: take };
        }
        iters += 1;

        let mut w = diag_apply(pd, &r);
        project_out(&mut w, locked, m);
        project_out(&mut w, &x, m);
        if let Some((pp, _)) = &p {
            project_out(&mut w, pp, m);
        }
        let mut wrank = ortho_m(&mut w, None, m);
        if wrank == 0 {
            let mut fresh = MultiVec::zeros(n, bs);
            for v in fresh.data.iter_mut() {
                *v = rng.gen::<f64>() - 0.5;
            }
            project_out(&mut fresh, locked, m);
            project_out(&mut fresh, &x, m);
            w = fresh;
            wrank = ortho_m(&mut w, None, m);
            if wrank == 0 {
                // nothing left to search; return what converged
                return BatchOut {
                    vals: lambda,
                    vecs: x,
                    res,
                    iters,
                    locked_count: conv.min(need_lock),
                };
            }
        }
        let mut kw = MultiVec::zeros(n, w.c);
        k.spmv_block(&w.data, &mut kw.data, w.c);

        // Rayleigh-Ritz over [X, W, P]; drop P when the gram degenerates.
        let mut use_p = p.is_some();
        let rr = loop {
            let (s_list, ks_list): (Vec<&MultiVec>, Vec<&MultiVec>) = if use_p {
                let (pp, kp) = p.as_ref().unwrap();
                (vec![&x, &w, pp], vec![&kx, &kw, kp])
            } else {
                (vec![&x, &w], vec![&kx, &kw])
            };
            let c_total: usize = s_list.iter().map(|s| s.c).sum();
            let mut a = DMatrix::zeros(c_total, c_total);
            let mut b = DMatrix::zeros(c_total, c_total);
            let mut off_i = 0;
            for (bi, sbi) in s_list.iter().enumerate() {
                let mut off_j = 0;
                for (bj, sbj) in s_list.iter().enumerate() {
                    if bj < bi {
                        off_j += sbj.c;
                        continue;
                    }
                    let ab = gram(sbi, ks_list[bj]);
                    let bb = gram_m(sbi, m, sbj);
                    for ii in 0..sbi.c {
                        for jj in 0..sbj.c {
                            a[(off_i + ii, off_j + jj)] = ab[(ii, jj)];
                            a[(off_j + jj, off_i + ii)] = ab[(ii, jj)];
                            b[(off_i + ii, off_j + jj)] = bb[(ii, jj)];
                            b[(off_j + jj, off_i + ii)] = bb[(ii, jj)];
                        }
                    }
                    off_j += sbj.c;
                }
                off_i += sbi.c;
            }
            // symmetrize the K-gram exactly (block products are assembled
            // from independent reductions)
            let a = (a.clone() + a.transpose()) * 0.5;
            match gen_sym_eigen(&a, &b) {
                Some(sol) => break Some((sol, use_p)),
                None if use_p => {
                    use_p = false;
                    continue;
                }
                None => break None,
            }
        };
        let rr = rr.filter(|((theta, y), _)| {
            theta.iter().all(|v| v.is_finite()) && y.iter().all(|v| v.is_finite())
        });
        let Some(((theta, y), with_p)) = rr else {
            // trial space collapsed; restore an orthonormal block and retry
            ortho_m(&mut x, Some(&mut kx), m);
            lambda = block_rayleigh_ritz(&mut x, &mut kx, m);
            p = None;
            continue;
        };

        let yx = y.rows(0, bs).columns(0, bs).into_owned();
        let yw = y.rows(bs, w.c).columns(0, bs).into_owned();
        let mut x_new = apply_coef(&x, &yx);
        let mut kx_new = apply_coef(&kx, &yx);
        let mut p_new = apply_coef(&w, &yw);
        let mut kp_new = apply_coef(&kw, &yw);
        if with_p {
            let (pp, kp) = p.as_ref().unwrap();
            let yp = y.rows(bs + w.c, pp.c).columns(0, bs).into_owned();
            apply_coef_add(&mut p_new, pp, &yp, 1.0);
            apply_coef_add(&mut kp_new, kp, &yp, 1.0);
        }
        axpy_mv(&mut x_new, &p_new, 1.0);
        axpy_mv(&mut kx_new, &kp_new, 1.0);
        x = x_new;
        kx = kx_new;
        lambda = theta[..bs].to_vec();

        // keep the search direction well separated from X (same linear
        // combination applied to the K-image keeps the cache exact)
        let gxp = gram_m(&x, m, &p_new);
        apply_coef_add(&mut p_new, &x, &gxp, -1.0);
        apply_coef_add(&mut kp_new, &kx, &gxp, -1.0);
        let prank = ortho_m(&mut p_new, Some(&mut kp_new), m);
        p = if prank > 0 { Some((p_new, kp_new)) } else { None };
    }
}

/// Rayleigh-Ritz on a single M-orthonormal block, rotating `x` (and its
/// `K`-image) into Ritz vectors. Returns the Ritz values.
fn block_rayleigh_ritz(x: &mut MultiVec, kx: &mut MultiVec, m: &[f64]) -> Vec<f64> {
    let bs = x.c;
    let a0 = gram(x, kx);
    let a0 = (a0.clone() + a0.transpose()) * 0.5;
    let b0 = gram_m(x, m, x);
    let (theta, y) = match gen_sym_eigen(&a0, &b0) {
        Some(sol) => sol,
        None => sym_eigen_sorted(a0),
    };
    let yb = y.columns(0, bs).into_owned();
    *x = apply_coef(x, &yb);
    *kx = apply_coef(kx, &yb);
    theta[..bs].to_vec()
}
