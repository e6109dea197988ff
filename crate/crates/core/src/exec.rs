//! Trial fan-out. Results are ordered by trial index and each trial derives
//! its randomness from its own index, so sequential and parallel runs are
//! bit-identical.

/// How independent trials are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Work-stealing over the global rayon pool.
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Exec::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// `f(0), f(1), .., f(count - 1)` in index order.
    pub fn map<T, F>(self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..count).map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..count).into_par_iter().map(f).collect()
            }
        }
    }

    /// Applies `f` to each item, preserving order.
    pub fn map_items<I, T, F>(self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        self.map(items.len(), |i| f(&items[i]))
    }
}

/// Independent 64-bit seed for trial `index` of a run seeded with `base`.
pub fn trial_seed(base: u64, index: usize) -> u64 {
    let mut g = crate::lt::prng::SplitMix64::new(base ^ (index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    g.next_u64()
}
