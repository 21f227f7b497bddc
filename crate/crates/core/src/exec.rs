//! Execution strategy for the data-parallel loops (rows of the holder
//! layer, ensemble draws).
//!
//! With the `parallel` feature, [`Execution::Parallel`] fans work out over
//! rayon's global pool. Without it, `Parallel` degrades to the sequential
//! path. Either way results are gathered in index order and every floating
//! point reduction is done sequentially over that order, so the two
//! strategies produce bit-identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Whether this strategy will actually run on more than one thread.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
            _ => (0..n).map(f).collect(),
        }
    }

    /// Sums `f(0..n)` in index order.
    pub fn sum(self, n: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
        self.map(n, f).into_iter().sum()
    }

    /// Component-wise sum of `f(0..n)`, in index order.
    pub fn sum_pairs(self, n: usize, f: impl Fn(usize) -> (f64, f64) + Sync + Send) -> (f64, f64) {
        self.map(n, f)
            .into_iter()
            .fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1))
    }
}
