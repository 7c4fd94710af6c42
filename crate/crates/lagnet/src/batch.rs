//! Data-parallel map over independent work items.
//!
//! Trajectory integration is inherently sequential, but sweeps over mass
//! pairs, batches of random networks, and per-seed verification checks are
//! embarrassingly parallel. With the `parallel` feature (on by default)
//! these fan out over rayon's thread pool; without it the same call sites
//! run sequentially, which keeps single-threaded builds and benchmark
//! baselines honest.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}
