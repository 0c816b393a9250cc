//! Deterministic parallel helpers.
//!
//! Work is split into fixed-size chunks whose results are combined in chunk
//! order, so floating-point reductions do not depend on the number of rayon
//! workers.

use rayon::prelude::*;

/// Fixed chunk length for history loops.
pub const CHUNK: usize = 1024;

/// Map `0..n` in parallel, results in index order.
pub fn par_indexed<T, OP>(n: usize, op: OP) -> Vec<T>
where
    T: Send,
    OP: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(op).collect()
}

/// Fold `0..n` into per-chunk accumulators (chunk boundaries are fixed,
/// independent of worker count); the caller combines them sequentially.
pub fn par_chunk_fold<A, MK, FO>(n: usize, make: MK, fold: FO) -> Vec<A>
where
    A: Send,
    MK: Fn() -> A + Sync + Send,
    FO: Fn(&mut A, usize) + Sync + Send,
{
    let n_chunks = n.div_ceil(CHUNK);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = make();
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n);
            for i in lo..hi {
                fold(&mut acc, i);
            }
            acc
        })
        .collect()
}
