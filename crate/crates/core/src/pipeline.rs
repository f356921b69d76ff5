//! Deterministic per-record randomness and ordered parallel generation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Records generated per parallel batch before they are handed to the sink.
const BATCH: u64 = 2048;

/// The random stream for record `ordinal` of a run seeded with `seed`.
///
/// Each ordinal gets its own ChaCha stream, so a record depends only on
/// `(seed, ordinal)` and never on how many records were generated before it
/// or on which thread produced it.
pub fn record_rng(seed: u64, ordinal: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ordinal);
    rng
}

/// Produces items `0..n` with up to `jobs` worker threads and feeds them to
/// `sink` in ordinal order. Stops at the first error, by ordinal.
pub fn run_ordered<T, E, P, S>(n: u64, jobs: usize, produce: P, mut sink: S) -> Result<(), E>
where
    T: Send,
    E: Send,
    P: Fn(u64) -> Result<T, E> + Sync,
    S: FnMut(T) -> Result<(), E>,
{
    let jobs = jobs.max(1);
    if jobs == 1 {
        for ordinal in 0..n {
            sink(produce(ordinal)?)?;
        }
        return Ok(());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool with a positive thread count");
    let mut start = 0;
    while start < n {
        let end = (start + BATCH).min(n);
        let batch: Vec<Result<T, E>> = pool.install(|| (start..end).into_par_iter().map(&produce).collect());
        for item in batch {
            sink(item?)?;
        }
        start = end;
    }
    Ok(())
}

/// Number of worker threads to use when the caller does not say.
pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
