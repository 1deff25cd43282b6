//! Replica-parallel map helpers.
//!
//! Ensembles are embarrassingly parallel: every replica owns its noise stream
//! and no state is shared. With the `parallel` feature (default) the map runs
//! on a rayon pool whose width can be capped with the `KPZLAB_THREADS`
//! environment variable; without the feature it degrades to the sequential
//! loop. Results are returned in replica order either way, so outputs do not
//! depend on scheduling.

#[cfg(feature = "parallel")]
use std::sync::OnceLock;

/// Thread cap from `KPZLAB_THREADS`, if set and parsable.
pub fn thread_cap() -> Option<usize> {
    std::env::var("KPZLAB_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
}

#[cfg(feature = "parallel")]
fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(cap) = thread_cap() {
            builder = builder.num_threads(cap);
        }
        builder.build().expect("rayon pool")
    })
}

/// Map `f` over `0..n` in parallel (replica order preserved).
#[cfg(feature = "parallel")]
pub fn run_ensemble<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    pool().install(|| (0..n).into_par_iter().map(f).collect())
}

/// Sequential fallback when the `parallel` feature is disabled.
#[cfg(not(feature = "parallel"))]
pub fn run_ensemble<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    run_ensemble_seq(n, f)
}

/// Always-sequential map, kept available for benchmarking against the
/// parallel path.
pub fn run_ensemble_seq<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let work = |i: usize| {
            let mut acc = 0u64;
            for j in 0..1000 {
                acc = acc.wrapping_add((i as u64).wrapping_mul(j));
            }
            acc
        };
        assert_eq!(run_ensemble(64, work), run_ensemble_seq(64, work));
    }
}
