//! Data-parallel helpers with a sequential fallback.
//!
//! Every parallel loop in the crate goes through this module. With the
//! `parallel` feature enabled, [`Parallelism::Parallel`] runs on the rayon
//! global pool; without it (or with [`Parallelism::Sequential`]) the same
//! closures run in a plain loop. Results are always collected in index
//! order, so output never depends on the schedule.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

impl Parallelism {
    /// Whether work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }
}

/// Evaluates `f(0), f(1), ..., f(len - 1)` and collects the results in order.
pub fn map_indexed<T, F>(len: usize, mode: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..len).map(f).collect()
}

/// Applies `f` to every item of `items`, preserving order.
pub fn map_slice<S, T, F>(items: &[S], mode: Parallelism, f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}

/// Caps the global worker pool. A no-op without the `parallel` feature.
///
/// Returns `false` if the pool was already initialised.
pub fn init_threads(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        true
    }
}
