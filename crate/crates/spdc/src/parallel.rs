use rayon::prelude::*;
use spdc_core::numeric::PointMap;

/// Order-preserving parallel map on the global rayon pool.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl PointMap for Rayon {
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }
}
