//! Replicate scheduling.
//!
//! Work items are keyed by their replicate index and results come back in
//! index order, so the output never depends on the worker count.

use rayon::prelude::*;

use crate::{Error, Result};

/// Env var consulted when no explicit worker count is given.
pub const WORKERS_ENV: &str = "FRACMART_WORKERS";

pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&k| k >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Evaluate `f(0), …, f(count − 1)` on `workers` threads.
pub fn replicate<T, F>(workers: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    if workers <= 1 {
        return Ok((0..count as u64).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    Ok(pool.install(|| (0..count as u64).into_par_iter().map(f).collect()))
}
