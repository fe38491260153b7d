//! Coarse-grained data parallelism over independent work items.
//!
//! Seeds, ablation rows, k-means restarts and Monte Carlo trials are
//! independent, so they are mapped over with rayon when the `parallel`
//! feature is enabled. Results always come back in input order, so callers
//! observe identical output under either mode.

/// How independent work items are scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses the rayon pool when built with `parallel`, otherwise runs
    /// sequentially.
    #[default]
    Parallel,
}

impl Execution {
    /// True if this mode will actually fan out in the current build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Send + Sync,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return items.into_par_iter().map(f).collect();
        }
        items.into_iter().map(f).collect()
    }

    /// Maps a fallible `f` over `items`; the first error in input order wins.
    pub fn try_map<T, R, E, F>(self, items: Vec<T>, f: F) -> Result<Vec<R>, E>
    where
        T: Send,
        R: Send,
        E: Send,
        F: Fn(T) -> Result<R, E> + Send + Sync,
    {
        self.map(items, f).into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_preserve_order() {
        let items: Vec<u64> = (0..200).collect();
        let f = |x: u64| x.wrapping_mul(2654435761) % 1009;
        let seq = Execution::Sequential.map(items.clone(), f);
        let par = Execution::Parallel.map(items, f);
        assert_eq!(seq, par);
    }

    #[test]
    fn try_map_reports_first_error() {
        let r: Result<Vec<u32>, u32> =
            Execution::Parallel.try_map(vec![1, 2, 3, 4], |x| if x % 2 == 0 { Err(x) } else { Ok(x) });
        assert_eq!(r, Err(2));
    }
}
