//! Data-parallel execution helpers with a sequential fallback.
//!
//! All hot loops in this crate are embarrassingly parallel over grid nodes
//! or sources. With the `parallel` feature (default) they run on rayon;
//! without it the same code paths run sequentially. [`Exec`] additionally
//! selects the mode at runtime so benchmarks can compare both in one build.
//!
//! Reductions that feed reported numbers are done by collecting into an
//! indexed `Vec` and folding sequentially, so results are bit-identical
//! regardless of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution mode for a data-parallel kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    /// Use the rayon thread pool when the `parallel` feature is enabled;
    /// otherwise behaves like [`Exec::Sequential`].
    Parallel,
    Sequential,
}

impl Exec {
    /// The default mode of the build: parallel when available.
    pub fn auto() -> Self {
        Exec::Parallel
    }
}

/// Maps `0..len` through `f`, preserving index order in the output.
pub fn map_collect<T, F>(mode: Exec, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..len).into_par_iter().map(f).collect(),
        #[cfg(not(feature = "parallel"))]
        Exec::Parallel => (0..len).map(f).collect(),
        Exec::Sequential => (0..len).map(f).collect(),
    }
}

/// Applies `f(i, &mut chunk[i])` over equally sized chunks of `data`.
pub fn for_each_chunk_mut<T, F>(mode: Exec, data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    assert!(chunk > 0 && data.len() % chunk == 0);
    match mode {
        #[cfg(feature = "parallel")]
        Exec::Parallel => data
            .par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c)),
        #[cfg(not(feature = "parallel"))]
        Exec::Parallel => data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c)),
        Exec::Sequential => data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c)),
    }
}

/// Deterministic sum: parallel map into a vector, sequential fold.
pub fn sum_indexed<F>(mode: Exec, len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_collect(mode, len, f).iter().sum()
}
