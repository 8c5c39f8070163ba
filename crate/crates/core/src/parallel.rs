//! Replicate fan-out.
//!
//! Results always come back in replicate order, so any reduction done by the
//! caller is sequential and reproducible whatever the thread count.

/// How independent replicates are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Rayon's global pool. Falls back to sequential without the `parallel` feature.
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// Evaluates `job(0..count)` and returns the results indexed by replicate.
    pub fn map<T, F>(self, count: u64, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..count).into_par_iter().map(job).collect()
            }
            _ => (0..count).map(job).collect(),
        }
    }
}

/// Sizes rayon's global pool. Only the first call has an effect.
///
/// Returns `false` if the pool was already initialized or the crate was built
/// without the `parallel` feature.
pub fn configure_threads(threads: usize) -> bool {
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
        false
    }
}
