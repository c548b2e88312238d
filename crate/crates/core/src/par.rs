//! Feature-gated data parallelism.
//!
//! `map_collect` fans a pure function over owned items, preserving input
//! order in the output so that parallel and serial execution produce
//! identical results. With the `parallel` feature disabled it degrades to a
//! plain sequential map.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Always-sequential twin of [`map_collect`], used by the `_serial` API
/// variants and as the baseline in benchmarks.
pub(crate) fn map_collect_serial<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}
