//! Counter-based seeding and chunked parallel execution.
//!
//! Every random draw in a run comes from a [`Stream`] derived from the root
//! seed by a chain of 64-bit mixes:
//!
//! ```text
//! root            = mix64(seed ^ ROOT_SALT)
//! child(key, tag) = mix64(key ^ mix64(tag + GOLDEN_GAMMA))
//! ```
//!
//! where `mix64` is the SplitMix64 finalizer. Experiments derive one child
//! per experiment tag, one per sweep/grid point and one per trial chunk
//! (chunk `c` covers trials `[c * CHUNK_TRIALS, (c + 1) * CHUNK_TRIALS)`).
//! A stream key seeds `ChaCha8Rng::seed_from_u64`. Chunk boundaries depend
//! only on the trial index, so results do not depend on the worker count.

use std::ops::Range;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Trials per chunk.
pub const CHUNK_TRIALS: u64 = 16_384;

const ROOT_SALT: u64 = 0x6a09_e667_f3bc_c908;
const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A position in the seed tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stream {
    key: u64,
}

impl Stream {
    pub fn root(seed: u64) -> Self {
        Self {
            key: mix64(seed ^ ROOT_SALT),
        }
    }

    pub fn child(self, tag: u64) -> Self {
        Self {
            key: mix64(self.key ^ mix64(tag.wrapping_add(GOLDEN_GAMMA))),
        }
    }

    pub fn key(self) -> u64 {
        self.key
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key)
    }
}

/// Runs trial chunks serially or on a dedicated rayon pool.
#[derive(Clone, Default)]
pub struct Executor {
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor")
            .field("workers", &self.workers())
            .finish()
    }
}

impl Executor {
    pub fn serial() -> Self {
        Self { pool: None }
    }

    pub fn with_workers(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        if workers == 1 {
            return Ok(Self::serial());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
        Ok(Self {
            pool: Some(Arc::new(pool)),
        })
    }

    pub fn workers(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }

    /// Maps `f` over the fixed chunks of `n_trials` trials and returns the
    /// per-chunk results in chunk order. Each chunk gets its own RNG.
    pub fn map_chunks<A, F>(&self, stream: Stream, n_trials: u64, f: F) -> Vec<A>
    where
        A: Send,
        F: Fn(&mut ChaCha8Rng, Range<u64>) -> A + Sync,
    {
        self.map_chunk_streams(stream, n_trials, |s, range| f(&mut s.rng(), range))
    }

    /// Like [`map_chunks`](Self::map_chunks) but hands out the chunk's
    /// [`Stream`] so the caller can split it further.
    pub fn map_chunk_streams<A, F>(&self, stream: Stream, n_trials: u64, f: F) -> Vec<A>
    where
        A: Send,
        F: Fn(Stream, Range<u64>) -> A + Sync,
    {
        let n_chunks = n_trials.div_ceil(CHUNK_TRIALS);
        let run = |c: u64| {
            let start = c * CHUNK_TRIALS;
            let end = (start + CHUNK_TRIALS).min(n_trials);
            f(stream.child(c), start..end)
        };
        match &self.pool {
            None => (0..n_chunks).map(run).collect(),
            Some(pool) => pool.install(|| (0..n_chunks).into_par_iter().map(run).collect()),
        }
    }

    /// Like [`map_chunks`](Self::map_chunks) but folds the chunk results in
    /// chunk order.
    pub fn fold_chunks<A, F, M>(&self, stream: Stream, n_trials: u64, init: A, f: F, merge: M) -> A
    where
        A: Send,
        F: Fn(&mut ChaCha8Rng, Range<u64>) -> A + Sync,
        M: FnMut(A, A) -> A,
    {
        self.map_chunks(stream, n_trials, f)
            .into_iter()
            .fold(init, merge)
    }

    /// Maps `f` over independent work items, preserving order.
    pub fn map_items<I, A, F>(&self, items: Vec<I>, f: F) -> Vec<A>
    where
        I: Send,
        A: Send,
        F: Fn(I) -> A + Sync + Send,
    {
        match &self.pool {
            None => items.into_iter().map(f).collect(),
            Some(pool) => pool.install(|| items.into_par_iter().map(f).collect()),
        }
    }
}
