//! Data-parallel map with a sequential fallback.
//!
//! Grid sweeps (numerical radius, Poisson and `C_A` kernels, sampling
//! trials) go through [`map`]. Results are always collected in input order so
//! reductions downstream are deterministic regardless of backend.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Sequential,
    /// Uses rayon when the `parallel` feature is on; otherwise sequential.
    Parallel,
}

impl Default for Backend {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Backend::Parallel
        } else {
            Backend::Sequential
        }
    }
}

pub fn map<T, R, F>(backend: Backend, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match backend {
        Backend::Sequential => items.iter().map(f).collect(),
        Backend::Parallel => par_map(items, f),
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}
