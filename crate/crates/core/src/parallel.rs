//! Trial fan-out. With the `parallel` feature trials run on the rayon pool;
//! without it (or with [`Execution::Sequential`]) they run in order on the
//! calling thread. Results always come back in index order.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

/// Evaluate `f(0), …, f(n-1)` and collect in index order.
pub fn map_indexed<R, F>(n: u64, exec: Execution, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64) -> R + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
    }
}

/// Run `op` inside a dedicated pool of `workers` threads. A worker count of
/// zero, or a build without the `parallel` feature, runs `op` directly.
pub fn with_workers<R: Send>(workers: usize, op: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if workers > 0 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                return pool.install(op);
            }
        }
        op()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        op()
    }
}
