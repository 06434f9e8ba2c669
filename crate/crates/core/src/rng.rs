//! Counter-keyed random draws.
//!
//! Every random quantity in the engine comes from ChaCha8 keyed by
//! `(seed, domain)`, with the agent id selecting the stream and the tick
//! selecting the block offset inside that stream. A draw therefore depends
//! only on its coordinates, never on how many draws happened before it or on
//! which thread asked for it.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Independent sub-streams of the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Placement = 1,
    Heading = 2,
    Query = 3,
    OracleNoise = 4,
    Synthetic = 5,
    Derive = 6,
}

/// 32-bit words reserved per tick within a stream.
const WORDS_PER_TICK: u128 = 256;

/// Generator for the draw at `(seed, domain, stream, tick)`.
pub fn keyed(seed: u64, domain: Domain, stream: u64, tick: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (domain as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(stream);
    rng.set_word_pos(tick as u128 * WORDS_PER_TICK);
    rng
}

/// Derives a child seed, e.g. one per query or per experiment phase.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    keyed(seed, Domain::Derive, index, 0).random()
}

/// Stable 64-bit digest of a sequence of byte strings.
pub fn digest64(parts: &[&[u8]]) -> u64 {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    let out = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&out[..8]);
    u64::from_le_bytes(bytes)
}

/// Uniformly random unit vector.
pub fn unit_direction(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let angle = rng.random::<f64>() * std::f64::consts::TAU;
    (angle.cos(), angle.sin())
}
