//! Named random sub-streams derived from a single user seed.
//!
//! Every consumer of randomness gets its own ChaCha stream so that adding a
//! new consumer never shifts the numbers seen by an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifies an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Generator,
    FaceInit,
    LocationInit,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Generator => 1,
            Stream::FaceInit => 2,
            Stream::LocationInit => 3,
        }
    }
}

pub fn substream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}

/// A plain seed for APIs that take an integer seed, derived from a named stream.
pub fn subseed(seed: u64, stream: Stream) -> u64 {
    use rand::RngCore;
    substream(seed, stream).next_u64()
}
