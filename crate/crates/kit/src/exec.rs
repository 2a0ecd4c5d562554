use balayage_core::GridExecutor;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuildError, ThreadPoolBuilder};

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "BALAYAGE_THREADS";

/// Parallel grid evaluation on a dedicated rayon pool. Results keep grid order.
pub struct RayonExecutor {
    pool: ThreadPool,
}

impl RayonExecutor {
    /// `threads = 0` lets rayon pick.
    pub fn new(threads: usize) -> Result<Self, ThreadPoolBuildError> {
        Ok(Self { pool: ThreadPoolBuilder::new().num_threads(threads).build()? })
    }

    /// Pool sized by `BALAYAGE_THREADS`, unset or unparsable meaning the rayon default.
    pub fn from_env() -> Result<Self, ThreadPoolBuildError> {
        let n = std::env::var(THREADS_VAR).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0);
        Self::new(n)
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl GridExecutor for RayonExecutor {
    fn map<T: Send, F: Fn(usize) -> T + Sync>(&self, n: usize, f: F) -> Vec<T> {
        self.pool.install(|| (0..n).into_par_iter().map(&f).collect())
    }
}
