//! Block-parallel map with a sequential fallback.
//!
//! Every data-parallel loop in the crate splits its index range into fixed
//! blocks, maps each block independently and returns the per-block results in
//! block order. Reductions are then done sequentially by the caller, so the
//! floating-point summation order never depends on the thread schedule.

use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled; otherwise identical
    /// to [`Exec::Sequential`].
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// A one-thread pool only adds hand-off cost, so it runs the plain loop.
#[cfg(feature = "parallel")]
fn use_rayon(exec: Exec) -> bool {
    exec.is_parallel() && rayon::current_num_threads() > 1
}

/// Split `0..len` into consecutive blocks of at most `block` items.
pub fn blocks(len: usize, block: usize) -> Vec<Range<usize>> {
    let block = block.max(1);
    (0..len)
        .step_by(block)
        .map(|start| start..(start + block).min(len))
        .collect()
}

/// Map `f` over the blocks of `0..len`, returning results in block order.
pub fn map_blocks<T, F>(exec: Exec, len: usize, block: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let ranges = blocks(len, block);
    #[cfg(feature = "parallel")]
    {
        if use_rayon(exec) {
            use rayon::prelude::*;
            return ranges.into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    ranges.into_iter().map(f).collect()
}

/// Map `f` over a slice of independent jobs, preserving order.
pub fn map_items<I, T, F>(exec: Exec, items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if use_rayon(exec) {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
    }
    let _ = exec;
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_cover_range_in_order() {
        let b = blocks(10, 4);
        assert_eq!(b, vec![0..4, 4..8, 8..10]);
        assert!(blocks(0, 4).is_empty());
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let f = |r: Range<usize>| r.map(|i| (i as f64).sin()).sum::<f64>();
        let a = map_blocks(Exec::Sequential, 1000, 37, f);
        let b = map_blocks(Exec::Parallel, 1000, 37, f);
        assert_eq!(a, b);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn multi_threaded_pool_matches_sequential() {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let f = |r: Range<usize>| r.map(|i| (i as f64).sqrt()).sum::<f64>();
        let a = map_blocks(Exec::Sequential, 5000, 64, f);
        let b = pool.install(|| {
            assert!(use_rayon(Exec::Parallel));
            map_blocks(Exec::Parallel, 5000, 64, f)
        });
        assert_eq!(a, b);
        let items: Vec<u64> = (0..50).collect();
        let c = pool.install(|| map_items(Exec::Parallel, &items, |&i| i * i));
        assert_eq!(c, items.iter().map(|i| i * i).collect::<Vec<_>>());
    }
}
