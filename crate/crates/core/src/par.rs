//! Order-preserving map over a batch, data-parallel when the `parallel`
//! feature is enabled.

/// Evaluation workers. Width 1 runs inline; width 0 uses every core.
pub struct Workers {
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Workers {
    pub fn new(width: usize) -> Workers {
        #[cfg(feature = "parallel")]
        {
            let pool = (width != 1).then(|| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(width)
                    .build()
                    .expect("thread pool starts")
            });
            Workers { pool }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = width;
            Workers {}
        }
    }

    pub fn sequential() -> Workers {
        Workers::new(1)
    }

    /// Results come back in input order regardless of scheduling.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| items.par_iter().map(&f).collect());
        }
        items.iter().map(f).collect()
    }
}
