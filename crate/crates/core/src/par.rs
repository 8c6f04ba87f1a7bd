//! Data-parallel execution helpers with a sequential fallback.
//!
//! The `rayon` feature (on by default) runs these over the global rayon
//! pool; without it they degrade to plain loops. All reductions use a
//! fixed chunk structure and accumulate partials in slice order, so
//! results are bit-identical whatever the thread count. That property is
//! load-bearing: solver determinism is part of the library contract.

/// Map `f` over `items`, preserving order.
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "rayon")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "rayon"))]
    {
        items.iter().map(f).collect()
    }
}

/// Run `f` on disjoint chunks of `data`, passing each chunk's start offset.
pub fn chunks_mut<T, F>(data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    debug_assert!(chunk_len > 0);
    #[cfg(feature = "rayon")]
    {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, chunk)| f(i * chunk_len, chunk));
    }
    #[cfg(not(feature = "rayon"))]
    {
        for (i, chunk) in data.chunks_mut(chunk_len).enumerate() {
            f(i * chunk_len, chunk);
        }
    }
}

/// Deterministic chunked reduction: split `0..n` into fixed-size ranges,
/// map each range to a partial with `f`, then fold the partials in range
/// order with `merge`. The fold order is independent of scheduling.
pub fn reduce_ranges<P, F, M>(n: usize, chunk_len: usize, f: F, merge: M, identity: P) -> P
where
    P: Send,
    F: Fn(std::ops::Range<usize>) -> P + Sync + Send,
    M: Fn(P, P) -> P,
{
    debug_assert!(chunk_len > 0);
    let ranges: Vec<std::ops::Range<usize>> = (0..n)
        .step_by(chunk_len)
        .map(|start| start..(start + chunk_len).min(n))
        .collect();
    let partials = map_collect(&ranges, |r| f(r.clone()));
    partials.into_iter().fold(identity, merge)
}
