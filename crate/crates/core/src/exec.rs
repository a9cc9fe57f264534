//! Sequential/parallel execution switch for embarrassingly parallel loops.
//!
//! Every data-parallel loop in the crate (Monte Carlo batches, grid sweeps)
//! goes through [`map_ordered`], which preserves input order in its output.
//! Work items carry no shared mutable state, so the parallel and sequential
//! paths produce bitwise-identical results and differ only in wall time.

/// How to schedule independent work items.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    /// Process items one by one on the calling thread.
    Sequential,
    /// Fan items out over the rayon thread pool. Without the `parallel`
    /// feature this falls back to the sequential path.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Maps `f` over `items`, returning outputs in input order.
#[cfg(feature = "parallel")]
pub(crate) fn map_ordered<I, O, F>(items: Vec<I>, f: F, exec: Execution) -> Vec<O>
where
    I: Send,
    O: Send,
    F: Fn(I) -> O + Sync + Send,
{
    use rayon::prelude::*;
    match exec {
        Execution::Sequential => items.into_iter().map(f).collect(),
        Execution::Parallel => items.into_par_iter().map(f).collect(),
    }
}

/// Maps `f` over `items`, returning outputs in input order.
#[cfg(not(feature = "parallel"))]
pub(crate) fn map_ordered<I, O, F>(items: Vec<I>, f: F, _exec: Execution) -> Vec<O>
where
    I: Send,
    O: Send,
    F: Fn(I) -> O + Sync + Send,
{
    items.into_iter().map(f).collect()
}
