//! Data-parallel helpers. With the `parallel` feature the `Parallel` policy
//! runs on the rayon pool; without it every policy runs sequentially.

/// Execution policy for the embarrassingly parallel loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// Below this many items the parallel policy is not worth the fork overhead.
pub const PAR_THRESHOLD: usize = 2048;

/// Maps `f` over `0..len` preserving order.
pub fn map_range<R, F>(exec: Exec, len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec == Exec::Parallel && len >= PAR_THRESHOLD {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// First index in `0..len` (by index order) for which `f` returns `Some`.
pub fn find_first_map<R, F>(exec: Exec, len: usize, f: F) -> Option<R>
where
    R: Send,
    F: Fn(usize) -> Option<R> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec == Exec::Parallel && len >= 64 {
        use rayon::prelude::*;
        return (0..len).into_par_iter().find_map_first(f);
    }
    let _ = exec;
    (0..len).find_map(f)
}
