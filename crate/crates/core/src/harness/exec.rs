//! Indexed parallel map with a sequential fallback.

/// How independent work units are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// `jobs = 0` uses every available core. Without the `parallel` feature
    /// this runs sequentially.
    Parallel {
        jobs: usize,
    },
}

impl Default for Exec {
    fn default() -> Self {
        Exec::Parallel { jobs: 0 }
    }
}

impl Exec {
    /// `--jobs`-style constructor: 1 is sequential.
    pub fn with_jobs(jobs: usize) -> Self {
        if jobs == 1 {
            Exec::Sequential
        } else {
            Exec::Parallel { jobs }
        }
    }
}

/// `(0..n).map(f)` with results in index order whatever the executor.
pub fn map_indexed<U, F>(exec: Exec, n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    match exec {
        Exec::Sequential => (0..n).map(f).collect(),
        Exec::Parallel { jobs } => parallel_map(jobs, n, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<U, F>(jobs: usize, n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    let go = || (0..n).into_par_iter().map(&f).collect();
    if jobs == 0 {
        return go();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(go),
        Err(_) => go(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<U, F>(_jobs: usize, n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).map(f).collect()
}
