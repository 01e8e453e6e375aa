//! Deterministic parallel reduction helpers.
//!
//! Floating-point sums depend on association order, so every parallel
//! reduction in this crate is computed as ordered per-chunk partials that
//! are folded sequentially. Results are bit-identical for any worker
//! count, including 1.

use rayon::prelude::*;

/// Rows per parallel chunk. Large enough to amortize scheduling, small
/// enough to load-balance on a couple of cores.
pub const CHUNK: usize = 4096;

/// Ordered chunked map-reduce over `0..n`.
///
/// `map` produces a partial result for each index range; partials are
/// combined left-to-right with `fold`.
pub fn chunked_reduce<T, F, G>(n: usize, map: F, mut fold: G, init: T) -> T
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync,
    G: FnMut(T, T) -> T,
{
    if n == 0 {
        return init;
    }
    let n_chunks = n.div_ceil(CHUNK);
    let partials: Vec<T> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            map(lo..hi)
        })
        .collect();
    let mut acc = init;
    for p in partials {
        acc = fold(acc, p);
    }
    acc
}

/// Deterministic dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    chunked_reduce(
        a.len(),
        |r| {
            let mut s = 0.0;
            for i in r {
                s += a[i] * b[i];
            }
            s
        },
        |x, y| x + y,
        0.0,
    )
}

/// Deterministic weighted dot product `sum_i a_i w_i b_i`.
pub fn dot_weighted(a: &[f64], w: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    debug_assert_eq!(a.len(), w.len());
    chunked_reduce(
        a.len(),
        |r| {
            let mut s = 0.0;
            for i in r {
                s += a[i] * w[i] * b[i];
            }
            s
        },
        |x, y| x + y,
        0.0,
    )
}

/// Euclidean norm, deterministic.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
