//! Seeded ChaCha streams. Every consumer draws from its own stream id so
//! results never depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const SPLIT_STREAM: u64 = 1;
pub const FOREST_STREAM_BASE: u64 = 1 << 32;
pub const SYNTH_STREAM_BASE: u64 = 2 << 32;
pub const ES_STREAM_BASE: u64 = 3 << 32;

pub fn stream(seed: u64, id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
