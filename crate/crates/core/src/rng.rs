//! Counter-based random streams.
//!
//! A stream is a `(seed, stream_id)` pair backed by ChaCha20. Work is cut
//! into fixed-size chunks and chunk `k` reads from its own block-counter
//! window, so a draw sequence depends only on the seed, the stream id and
//! the chunk index, never on how many workers consumed it.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// Number of 32-bit words reserved per chunk (2^36 words, far more than any
/// chunk consumes).
const CHUNK_WORD_SHIFT: u32 = 36;

/// Rows per work chunk for all Monte Carlo loops.
pub const CHUNK_ROWS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// A stream with the same seed and a different id.
    pub fn with_stream(self, stream_id: u64) -> Self {
        Self { seed: self.seed, stream_id }
    }

    /// Derives a child stream id. Children of distinct parents (or distinct
    /// indices) land on distinct ids with overwhelming probability.
    pub fn child(self, index: u64) -> Self {
        let mixed = splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019)));
        Self { seed: self.seed, stream_id: mixed }
    }

    /// Generator positioned at the start of chunk `chunk`.
    pub fn chunk_rng(&self, chunk: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::from_seed(self.key());
        rng.set_stream(self.stream_id);
        rng.set_word_pos((chunk as u128) << CHUNK_WORD_SHIFT);
        rng
    }

    /// Generator for a whole stream (chunk 0).
    pub fn rng(&self) -> ChaCha20Rng {
        self.chunk_rng(0)
    }

    fn key(&self) -> [u8; 32] {
        let mut key = [0u8; 32];
        let mut state = self.seed;
        for word in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            word.copy_from_slice(&state.to_le_bytes());
        }
        key
    }
}

pub(crate) fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
