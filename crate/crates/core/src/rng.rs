//! Deterministic random streams.
//!
//! Every random draw in a run comes from a stream keyed by the master seed,
//! a purpose tag, an index (agent or pair) and the iteration. Streams are
//! independent of evaluation order, so parallel evaluation and optional
//! diagnostics never shift the training trajectory.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Each purpose gets a disjoint key space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Init = 1,
    Perturb = 2,
    Broadcast = 3,
    Evaluation = 4,
    Topology = 5,
    Instance = 6,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes the key components into a single 64-bit stream seed.
pub fn stream_seed(master: u64, purpose: Purpose, index: u64, iteration: u64) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ purpose as u64);
    h = splitmix64(h ^ index);
    splitmix64(h ^ iteration)
}

/// Builds the generator for one keyed stream.
pub fn stream(master: u64, purpose: Purpose, index: u64, iteration: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master, purpose, index, iteration))
}
