//! Data-parallel execution switch.
//!
//! With the `parallel` feature (default) loops run on the rayon pool; without
//! it, or with [`Execution::Sequential`], they run on the calling thread.
//! Both paths produce identical results in identical order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// The default is [`Execution::Parallel`] when the feature is enabled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

impl Execution {
    /// Map `f` over `items`, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().map(f).collect(),
        }
    }

    /// Run `f` with parallel maps inside it limited to `jobs` worker threads.
    pub fn with_jobs<R, F>(self, jobs: usize, f: F) -> R
    where
        R: Send,
        F: FnOnce() -> R + Send,
    {
        #[cfg(not(feature = "parallel"))]
        let _ = jobs;
        match self {
            Execution::Sequential => f(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
                Ok(pool) => pool.install(f),
                Err(e) => {
                    log::warn!("could not start a {jobs}-thread pool ({e}); using the global pool");
                    f()
                }
            },
        }
    }

    /// Map `f` over `0..n`, preserving order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let seq = Execution::Sequential.map(&xs, |x| x * x);
        assert_eq!(seq, Execution::default().map(&xs, |x| x * x));
        assert_eq!(
            Execution::Sequential.map_range(50, |i| i + 1),
            Execution::default().map_range(50, |i| i + 1)
        );
    }
}
