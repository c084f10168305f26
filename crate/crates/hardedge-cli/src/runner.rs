//! Deterministic replica execution.
//!
//! Experiments draw many independent replicas.  Each replica `r` of a target
//! gets its own seed derived from the master seed and a stream index, so the
//! set of seeds — and therefore every number in the run — is a pure function
//! of (config, master seed), independent of scheduling.  Replicas may run in
//! parallel; results are merged by replica index, which `rayon`'s indexed
//! collect preserves, so reports are byte-identical at any thread count.
//!
//! The environment variable `HARDNESS_THREADS` caps worker threads (values
//! `0` or unparseable text are ignored).  Distinct targets inside one run
//! take disjoint seed-stream blocks of [`STREAM_BLOCK`] indices each.

use hardedge_core::sampler::derive_stream_seed;

/// Seed-stream indices reserved per target (far above any replica count).
pub const STREAM_BLOCK: u64 = 1 << 20;

/// Effective worker-thread count: the available parallelism, capped by the
/// `HARDNESS_THREADS` environment variable when it parses to a positive int.
pub fn effective_threads() -> usize {
    let available = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    match std::env::var("HARDNESS_THREADS") {
        Ok(text) => match text.trim().parse::<usize>() {
            Ok(cap) if cap >= 1 => available.min(cap),
            _ => available,
        },
        Err(_) => available,
    }
}

/// Run `count` replicas of `body`, feeding each its derived seed, in
/// parallel when worthwhile.  Results come back ordered by replica index;
/// the first error (by index) wins, so failures are deterministic too.
pub fn replica_map<T, E, F>(
    count: usize,
    master_seed: u64,
    stream_block: u64,
    body: F,
) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize, u64) -> Result<T, E> + Sync,
{
    let seed_of = |r: usize| derive_stream_seed(master_seed, stream_block * STREAM_BLOCK + r as u64);
    let threads = effective_threads();
    if threads <= 1 || count < 2 {
        let mut out = Vec::with_capacity(count);
        for r in 0..count {
            out.push(body(r, seed_of(r))?);
        }
        return Ok(out);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool construction only fails on exotic resource limits");
    pool.install(|| {
        use rayon::prelude::*;
        (0..count)
            .into_par_iter()
            .map(|r| body(r, seed_of(r)))
            .collect::<Result<Vec<T>, E>>()
    })
}
