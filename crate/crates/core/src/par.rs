//! Deterministic chunked map-reduce over index ranges.
//!
//! Work is split into chunks of a fixed size that does not depend on the
//! number of workers. Chunk results are combined by a pairwise tree in chunk
//! order, so floating-point sums are reproducible bit-for-bit.

use alloc::vec::Vec;

pub(crate) const CHUNK: u64 = 1 << 14;

/// Maps every chunk `[start, end)` of `0..total` and folds the results with a
/// fixed pairwise tree.
pub(crate) fn map_reduce<T, M, R>(total: u64, identity: T, map: M, reduce: R) -> T
where
    T: Send + Clone,
    M: Fn(u64, u64) -> T + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
{
    let chunks = total.div_ceil(CHUNK);
    let run = |c: u64| map(c * CHUNK, ((c + 1) * CHUNK).min(total));
    #[cfg(feature = "std")]
    let parts: Vec<T> = {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "std"))]
    let parts: Vec<T> = (0..chunks).map(run).collect();
    tree_reduce(parts, identity, &reduce)
}

pub(crate) fn tree_reduce<T: Clone, R: Fn(T, T) -> T>(mut parts: Vec<T>, identity: T, reduce: &R) -> T {
    if parts.is_empty() {
        return identity;
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(reduce(a, b)),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop().expect("nonempty")
}

/// Pairwise sum of a slice of floats.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
