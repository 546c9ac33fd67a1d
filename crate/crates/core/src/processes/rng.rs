//! Counter-based randomness keyed by `(seed, stream)`.
//!
//! Every stream is a ChaCha20 keystream: the key is expanded from `seed`, the
//! stream id selects the ChaCha nonce, and the word position is the counter,
//! so any draw is addressable without replaying earlier ones. Gaussian
//! variates use the ziggurat method of `rand_distr::StandardNormal`, which
//! consumes the stream deterministically; results are bitwise reproducible.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

/// Stream ids used by the generators; distinct components never share a stream.
pub mod streams {
    pub const BROWNIAN: u64 = 1;
    pub const ITO_NOISE: u64 = 2;
    pub const FBM: u64 = 3;
    pub const JUMP_COUNTS: u64 = 4;
    pub const SMALL_JUMP_GAUSSIAN: u64 = 5;
    pub const ETA_FBM: u64 = 6;
    /// Jump components use `JUMP_BASE + component`.
    pub const JUMP_BASE: u64 = 1 << 16;
    /// Tail shells use `TAIL_BASE + shell`.
    pub const TAIL_BASE: u64 = 1 << 20;
    /// Coordinate `c >= 1` of a multi-dimensional fBm uses `FBM_COMPONENT_BASE + c`.
    pub const FBM_COMPONENT_BASE: u64 = 1 << 24;
}

/// A sequential generator positioned at the start of `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The `counter`-th 64-bit word of stream `(seed, stream)`.
pub fn counter_u64(seed: u64, stream: u64, counter: u64) -> u64 {
    let mut rng = stream_rng(seed, stream);
    rng.set_word_pos(u128::from(counter) * 2);
    rng.next_u64()
}

/// Uniform in `[0, 1)` with 53 random bits.
pub fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn gaussian(rng: &mut impl RngCore) -> f64 {
    StandardNormal.sample(rng)
}

pub fn poisson(rng: &mut impl RngCore, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("positive finite mean");
    dist.sample(rng) as u64
}
