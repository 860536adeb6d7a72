//! Seeded random streams.
//!
//! Every random decision is drawn from a stream derived from the user seed,
//! a [`Purpose`] tag, a sentence id and a round number. Streams for distinct
//! tuples are independent, so the outcome for one sentence never depends on
//! the order in which sentences are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a random stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    TieBreak,
    Resample,
    SyntheticPool,
    SyntheticWeights,
    Initialization,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::TieBreak => 1,
            Purpose::Resample => 2,
            Purpose::SyntheticPool => 3,
            Purpose::SyntheticWeights => 4,
            Purpose::Initialization => 5,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the stream for `(seed, purpose, sent_id, round)`.
pub fn stream(seed: u64, purpose: Purpose, sent_id: u64, round: u64) -> StreamRng {
    let mut key = splitmix64(seed);
    key = splitmix64(key ^ sent_id);
    key = splitmix64(key ^ round);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(purpose.tag());
    rng
}
