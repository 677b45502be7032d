//! Execution policy for the data-parallel sweeps.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] fans work out
//! over the rayon pool. Without it, both policies run the same sequential
//! loop. Reductions must be associative and commutative so that both paths
//! give bit-identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
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

/// Maps `0..n` through `map` and folds with `reduce`, starting from `identity`.
pub(crate) fn map_reduce<T, M, R>(exec: Execution, n: usize, identity: T, map: M, reduce: R) -> T
where
    T: Clone + Send + Sync,
    M: Fn(usize) -> T + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n)
            .into_par_iter()
            .map(map)
            .reduce(|| identity.clone(), &reduce),
        _ => (0..n).map(map).fold(identity, reduce),
    }
}
