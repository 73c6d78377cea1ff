use rayon::prelude::*;

use crate::error::{invalid_arg, Result};
use crate::rng::RngStream;

/// Mixes an estimator-specific tag into the user seed so different estimators
/// run with the same seed do not share random numbers.
pub fn domain_seed(seed: u64, tag: &str) -> u64 {
    // FNV-1a over the tag, then a splitmix64 finalizer.
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in tag.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs `replicate` on streams `0..n` of `seed` and returns results in stream order.
///
/// `workers = None` uses rayon's global pool. Output order, and hence every
/// downstream reduction, does not depend on the worker count.
pub fn run_replicates<T, F>(
    seed: u64,
    n: usize,
    workers: Option<usize>,
    replicate: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(RngStream) -> Result<T> + Sync + Send,
{
    let job = || {
        (0..n as u64)
            .into_par_iter()
            .map(|i| replicate(RngStream::new(seed, i)))
            .collect::<Result<Vec<T>>>()
    };
    match workers {
        None => job(),
        Some(0) => Err(invalid_arg("worker count must be positive")),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| invalid_arg(format!("cannot start {w} workers: {e}")))?
            .install(job),
    }
}
