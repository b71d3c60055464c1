//! Seeding of the independent random streams.
//!
//! Every user owns one generator per purpose, keyed by `seed ^ user_id` and a
//! ChaCha stream id, so changing the policy never shifts the channel or
//! content draws another user or purpose sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Channel,
    Content,
    Oracle,
    Controller,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Channel => 0,
            Stream::Content => 1,
            Stream::Oracle => 2,
            Stream::Controller => 3,
        }
    }
}

pub fn stream_rng(seed: u64, user_id: u32, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u64::from(user_id));
    rng.set_stream(stream.id());
    rng
}

/// Generator for draws that are not tied to a user (candidate sampling).
pub fn controller_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(32) ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(Stream::Controller.id());
    rng
}
