//! Counter-based random streams.
//!
//! Every random draw in the crate is addressed by a coordinate
//! `(seed, domain, level, index)`. The coordinate selects a ChaCha8 key
//! (from the seed), a stream id (from domain and level) and a word offset
//! (from the index), so each draw is a pure function of where it sits in
//! the computation. Results therefore do not depend on thread count or on
//! evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What the stream is used for. Keeps, e.g., initial disorder draws and
/// parent selection for the same `(level, index)` independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Domain {
    Initial = 1,
    Parents = 2,
    Leaves = 3,
    /// Disorder for brute-force cross-checks.
    Oracle = 4,
}

const LEVEL_BITS: u32 = 56;
/// Words reserved per index; far more than any single coordinate consumes.
const WORDS_PER_INDEX_LOG2: u32 = 32;

/// Factory for coordinate-addressed generators sharing one global seed.
#[derive(Clone)]
pub struct StreamFactory {
    base: ChaCha8Rng,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Generator positioned at coordinate `(domain, level, index)`.
    ///
    /// `level` must stay below 2^56 and `index` below 2^36.
    pub fn stream(&self, domain: Domain, level: u64, index: u64) -> ChaCha8Rng {
        debug_assert!(level < (1 << LEVEL_BITS));
        debug_assert!(index < (1 << 36));
        let mut rng = self.base.clone();
        rng.set_stream(((domain as u64) << LEVEL_BITS) | level);
        rng.set_word_pos((index as u128) << WORDS_PER_INDEX_LOG2);
        rng
    }
}

impl std::fmt::Debug for StreamFactory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StreamFactory").finish_non_exhaustive()
    }
}
