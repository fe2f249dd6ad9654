//! Deterministic random streams.
//!
//! Every stochastic step draws from a ChaCha8 generator keyed by the frame
//! seed and a fixed stream number, so results do not depend on call order or
//! thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_PULSE: u64 = 0;
pub const STREAM_DETECTOR: u64 = 1;
pub const STREAM_PATTERN: u64 = 2;
/// Temporal mode `m` uses stream `STREAM_MODES + m`.
pub const STREAM_MODES: u64 = 1 << 16;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
