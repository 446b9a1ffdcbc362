//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the `Auto` mode maps over rayon's pool;
//! without it (or with `Sequential`) everything runs on the calling thread.

/// Execution mode for the data-parallel kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Parallelism {
    /// Use the rayon pool when the crate is built with `parallel`.
    #[default]
    Auto,
    /// Always run on the calling thread.
    Sequential,
}

impl Parallelism {
    /// True when this mode will actually fan out work.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Auto
    }
}

/// `(0..n).map(f).collect()`, in parallel when enabled.
pub fn map_indices<T, F>(mode: Parallelism, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Maps a slice, in parallel when enabled.
pub fn map_slice<I, T, F>(mode: Parallelism, items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    map_indices(mode, items.len(), |k| f(&items[k]))
}
