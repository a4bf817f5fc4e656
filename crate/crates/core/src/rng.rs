//! Seeded random streams.
//!
//! Every experiment seed expands into independent ChaCha20 streams, one per
//! consumer. The stream id is the ChaCha stream selector, so reseeding one
//! consumer never perturbs the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type SimRng = ChaCha20Rng;

/// Consumers of randomness inside one simulated run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Context = 0,
    Player = 1,
    Nature = 2,
}

/// Child stream of `seed` for one consumer of a run.
pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Child stream for the `rep`-th replication of a Monte-Carlo diagnostic.
/// Ids from 16 upwards are reserved for replications.
pub fn replication(seed: u64, rep: usize) -> SimRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(16 + rep as u64);
    rng
}
