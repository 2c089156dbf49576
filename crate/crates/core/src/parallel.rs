//! Thread-count control.
//!
//! Kernels parallelise with rayon over independent output elements and keep a
//! fixed accumulation order per element, so results are bitwise identical for
//! every thread count. `with_threads` pins the count for a region of work.

use crate::error::{Error, Result};

/// Runs `f` inside a dedicated pool of `threads` workers (`0` means the
/// rayon default).
pub fn with_threads<R, F>(threads: usize, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Number of threads the current rayon context will use.
pub fn current_threads() -> usize {
    rayon::current_num_threads()
}
