//! Index-ordered parallel map with a bounded worker count.

use rayon::prelude::*;

use crate::error::{invalid, Result};

/// Evaluates `f(0..n)` and returns results in index order.
///
/// `workers == 1` runs inline on the calling thread; `workers == 0` uses
/// every available core; any other value bounds the pool size.
pub fn map_indexed<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if workers == 1 || n <= 1 {
        return Ok((0..n).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(&f).collect()))
}
