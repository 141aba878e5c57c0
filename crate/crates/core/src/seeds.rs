//! Seed derivation for the simulator's independent random streams.
//!
//! Replication `k` of a batch uses `base_seed + k` (wrapping). Within a
//! replication, each named stream seeds its own generator with
//! `splitmix64(splitmix64(replication_seed) ^ stream_id)`, so streams are
//! decorrelated and results are reproducible regardless of how replications
//! are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Event generation (patch choice and positions).
pub const EVENT_STREAM: u64 = 1;
/// Initial agent placement and move-phase offsets.
pub const INIT_STREAM: u64 = 2;
/// Agent movement directions and mode-switch coin flips.
pub const AGENT_STREAM: u64 = 3;
/// Detection Bernoulli trials.
pub const DETECTION_STREAM: u64 = 4;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replication_seed(base_seed: u64, replication: u64) -> u64 {
    base_seed.wrapping_add(replication)
}

/// Deterministic generator for one named stream of one replication.
pub fn stream_rng(replication_seed: u64, stream_id: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(splitmix64(splitmix64(replication_seed) ^ stream_id))
}
