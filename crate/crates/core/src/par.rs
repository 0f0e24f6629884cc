//! Execution policy for data-parallel loops.
//!
//! Every parallel loop in the crate goes through [`Exec::map`], which returns
//! results in index order regardless of scheduling. With the `parallel`
//! feature disabled the parallel policy degrades to a plain loop.

/// How independent work items are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Rayon global pool.
    #[default]
    Parallel,
    /// Dedicated pool with an explicit worker count.
    Workers(usize),
}

impl Exec {
    /// Policy for a user-facing worker count (`0` means "all cores").
    pub fn from_workers(workers: usize) -> Self {
        match workers {
            0 => Exec::Parallel,
            1 => Exec::Sequential,
            n => Exec::Workers(n),
        }
    }

    /// `f(0), f(1), …, f(n-1)` in index order.
    pub fn map<U, F>(self, n: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            #[cfg(feature = "parallel")]
            Exec::Workers(w) => {
                use rayon::prelude::*;
                match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
                    Ok(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
                    Err(_) => (0..n).map(f).collect(),
                }
            }
            #[cfg(not(feature = "parallel"))]
            Exec::Parallel | Exec::Workers(_) => (0..n).map(f).collect(),
        }
    }
}
