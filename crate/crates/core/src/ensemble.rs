//! Deterministic parallel fan-out over trajectory indices.
//!
//! Work is cut into fixed-size index chunks. Chunks run in parallel, each
//! folded sequentially, and chunk results are merged in index order, so the
//! output does not depend on thread count or scheduling.

use rayon::prelude::*;

pub const CHUNK: usize = 64;

/// Folds `per_index` over `0..count` into accumulators created by `init`,
/// merging chunk accumulators in index order.
pub fn fold_indexed<A, I, F, M>(count: usize, init: I, per_index: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, usize) + Sync,
    M: Fn(&mut A, A),
{
    let chunks: Vec<A> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            for index in (c * CHUNK)..((c + 1) * CHUNK).min(count) {
                per_index(&mut acc, index);
            }
            acc
        })
        .collect();
    let mut total = init();
    for chunk in chunks {
        merge(&mut total, chunk);
    }
    total
}

/// Maps `0..count` in parallel, preserving index order.
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}
