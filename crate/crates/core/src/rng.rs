//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator whose key is
//! derived from a global seed and whose 64-bit stream id encodes
//! `(replica, stream)`. Two draws with the same `(seed, replica, stream)`
//! triple see the same sequence regardless of which thread performs them or
//! in which order replicas are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named stream ids. Keeping them distinct guarantees that, for example, the
/// lattice sample and the Poisson vertex sample of one replica never share
/// random words.
pub mod streams {
    pub const PERCOLATION: u32 = 1;
    pub const CABLE_VERTICES: u32 = 2;
    pub const WALK: u32 = 3;
    pub const HITTING: u32 = 4;
    pub const COMMUTE: u32 = 5;
    pub const CENTERS: u32 = 6;
    pub const HEAT_MC: u32 = 7;
    pub const REPLICA_SEED: u32 = 8;
    pub const FIXTURES: u32 = 9;
}

/// SplitMix64 finaliser; used to spread the global seed over the 256-bit key.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key_from_seed(seed: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        state = mix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    key
}

/// Generator for `(seed, replica, stream)`.
pub fn stream_rng(seed: u64, replica: u32, stream: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(key_from_seed(seed));
    rng.set_stream(((replica as u64) << 32) | stream as u64);
    rng
}

/// Deterministic child seed for a replica, so that per-replica artifacts can
/// record a single integer that regenerates them.
pub fn replica_seed(seed: u64, replica: u32) -> u64 {
    mix64(seed ^ mix64(((replica as u64) << 32) | streams::REPLICA_SEED as u64))
}
