//! Sequential / data-parallel execution switch.
//!
//! Every parallel entry point in the crate funnels through the helpers here,
//! which always return results in index order. Callers merge sequentially, so
//! output never depends on scheduling. Without the `parallel` feature,
//! [`Execution::Parallel`] silently runs sequentially.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether work will actually be spread over a thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel, always in index order.
pub(crate) fn map_range<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Splits `0..n` into contiguous chunks and maps each chunk range.
pub(crate) fn map_chunks<R, F>(exec: Execution, n: usize, chunk: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(std::ops::Range<usize>) -> R + Sync + Send,
{
    let chunk = chunk.max(1);
    let count = n.div_ceil(chunk);
    map_range(exec, count, |c| {
        let start = c * chunk;
        f(start..(start + chunk).min(n))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_keep_index_order() {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let v = map_range(exec, 1000, |i| i * 2);
            assert!(v.iter().enumerate().all(|(i, x)| *x == 2 * i));
            let c = map_chunks(exec, 10, 3, |r| r.collect::<Vec<_>>());
            assert_eq!(
                c,
                vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8], vec![9]]
            );
        }
    }
}
