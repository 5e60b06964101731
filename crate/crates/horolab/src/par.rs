//! Deterministic parallel reductions.
//!
//! Work is cut into fixed-size chunks independent of the thread count; chunk
//! results are combined by a fixed pairwise tree. The result is therefore
//! bit-identical for any worker count.

use rayon::prelude::*;
use std::ops::Range;

/// Environment variable holding the worker count for the global pool.
pub const WORKERS_ENV: &str = "HOROLAB_WORKERS";

/// Default number of indices per chunk.
pub const CHUNK: u64 = 2048;

/// Maps each chunk of `0..n` and reduces the results pairwise in index order.
pub fn map_reduce<T, F, C>(n: u64, chunk: u64, map: F, combine: C) -> Option<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
    C: Fn(T, T) -> T,
{
    let chunk = chunk.max(1);
    let chunks = n.div_ceil(chunk);
    let parts: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| map(c * chunk..((c + 1) * chunk).min(n)))
        .collect();
    pairwise(parts, &combine)
}

fn pairwise<T, C: Fn(T, T) -> T>(mut parts: Vec<T>, combine: &C) -> Option<T> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop()
}

/// Sums a vector-valued function over `0..n` deterministically.
pub fn sum_vec<F>(n: u64, width: usize, f: F) -> Vec<f64>
where
    F: Fn(u64, &mut [f64]) + Sync + Send,
{
    map_reduce(
        n,
        CHUNK,
        |r| {
            let mut acc = vec![0.0; width];
            for i in r {
                f(i, &mut acc);
            }
            acc
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    )
    .unwrap_or_else(|| vec![0.0; width])
}

/// Evaluates `f` on every index in parallel, preserving order.
pub fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

/// Worker count requested through the environment, if any.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
}

/// Runs `op` inside a dedicated pool with `workers` threads.
pub fn with_workers<R: Send>(workers: usize, op: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
        .install(op)
}
