//! Counter-based seed derivation.
//!
//! Every random quantity in an experiment is keyed by a logical work unit
//! (stream label plus indices), never by the order in which work happens to
//! run. A child seed is `mix(mix(master ^ label) ^ i0) ^ i1 ...` where `mix`
//! is the SplitMix64 finalizer, so streams are independent of each other and
//! of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The PRNG used everywhere a seed is turned into random draws.
pub type Prng = ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function. Bijective on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Named seed streams. The discriminant is part of the derivation, so the
/// numeric values must never be reordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    TrainInstance = 1,
    TrainStart = 2,
    ValidInstance = 3,
    ValidStart = 4,
    TestInstance = 5,
    TestStart = 6,
    RunMean = 7,
    CmaSampling = 8,
    CalibrationInstance = 9,
    CalibrationStart = 10,
    SetStart = 11,
    ObservationTies = 12,
    ArgmaxTies = 13,
    Analysis = 14,
}

/// Derive a child seed from a master seed, a stream label, and any number of
/// indices.
pub fn derive(master: u64, stream: Stream, indices: &[u64]) -> u64 {
    let mut h = mix64(master ^ mix64(stream as u64));
    for &i in indices {
        h = mix64(h ^ i);
    }
    h
}

/// Re-key an already-derived seed for a sub-purpose.
#[inline]
pub fn subseed(seed: u64, stream: Stream) -> u64 {
    mix64(seed ^ mix64(stream as u64))
}

pub fn rng(seed: u64) -> Prng {
    Prng::seed_from_u64(seed)
}

/// Hash of a solution's bits mixed with a master seed.
///
/// Bits are packed little-endian into 64-bit words (bit `i` lives in word
/// `i / 64` at position `i % 64`). Starting from `mix64(master ^ mix64(n))`
/// each word is folded in with `h = mix64(h ^ word)`. Because `mix64` is a
/// bijection, two distinct bit-vectors of the same length never collide.
pub fn state_hash(bits: &[bool], master: u64) -> u64 {
    let mut h = mix64(master ^ mix64(bits.len() as u64));
    for chunk in bits.chunks(64) {
        let mut word = 0u64;
        for (p, &b) in chunk.iter().enumerate() {
            word |= (b as u64) << p;
        }
        h = mix64(h ^ word);
    }
    h
}

/// Uniformly random bit-vector drawn from `seed`.
pub fn random_bits(n: usize, seed: u64) -> Vec<bool> {
    use rand::Rng;
    let mut r = rng(seed);
    (0..n).map(|_| r.random::<bool>()).collect()
}
