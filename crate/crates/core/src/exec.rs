//! Chunked execution with a deterministic, order-preserving reduction.
//!
//! With the `parallel` feature chunks run on the rayon pool; without it they
//! run in order on the calling thread. Both paths return identical results.

use crate::rng::CHUNK_ROWS;
use std::ops::Range;

/// Splits `0..n` into chunks of [`CHUNK_ROWS`] and maps each chunk.
/// Results come back in chunk order.
pub fn map_chunks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, Range<usize>) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_chunks_parallel(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_chunks_sequential(n, f)
    }
}

pub fn map_chunks_sequential<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(u64, Range<usize>) -> T,
{
    chunk_ranges(n).map(|(k, r)| f(k, r)).collect()
}

#[cfg(feature = "parallel")]
pub fn map_chunks_parallel<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, Range<usize>) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let ranges: Vec<_> = chunk_ranges(n).collect();
    ranges.into_par_iter().map(|(k, r)| f(k, r)).collect()
}

/// Maps independent tasks (quadrature nodes, ascent starts) in index order.
pub fn map_tasks<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Flattens chunked per-row outputs back into one vector.
pub fn map_rows<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, Range<usize>) -> Vec<T> + Sync + Send,
{
    let parts = map_chunks(n, f);
    let mut out = Vec::with_capacity(n);
    for p in parts {
        out.extend(p);
    }
    out
}

fn chunk_ranges(n: usize) -> impl Iterator<Item = (u64, Range<usize>)> {
    (0..n.div_ceil(CHUNK_ROWS)).map(move |k| {
        let start = k * CHUNK_ROWS;
        (k as u64, start..(start + CHUNK_ROWS).min(n))
    })
}
