//! Seeded, splittable random streams.
//!
//! Every consumer draws from a ChaCha20 stream identified by `(root seed,
//! stream id)`. ChaCha is counter-based, so distinct stream ids give
//! independent sequences without coordination between tasks.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

/// Deterministic generator for stream `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a stream id from a namespace tag and a task index.
pub fn stream_id(tag: u32, index: u32) -> u64 {
    (u64::from(tag) << 32) | u64::from(index)
}
