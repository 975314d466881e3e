//! Seeded random streams.
//!
//! Every stochastic component draws from a `xoshiro256++` generator whose
//! 256-bit state is filled by SplitMix64 from a 64-bit seed. Independent
//! consumers (weight init, shuffling, analog noise, update pulses) get their
//! own stream, derived as
//!
//! ```text
//! stream_seed = splitmix64(seed ^ splitmix64(stream_id))
//! ```
//!
//! Uniform doubles use the top 53 bits of a 64-bit draw (`(u >> 11) * 2^-53`),
//! Bernoulli(p) is `uniform < p`, and Gaussians use the ziggurat sampler from
//! `rand_distr::StandardNormal`. All of these are platform independent.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type SimRng = Xoshiro256PlusPlus;

/// Stream identifiers used across the crate.
pub mod streams {
    pub const INIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const FORWARD_NOISE: u64 = 3;
    pub const UPDATE: u64 = 4;
    pub const EVAL_NOISE: u64 = 5;
    pub const READ_NOISE: u64 = 6;
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn stream(seed: u64, stream_id: u64) -> SimRng {
    SimRng::seed_from_u64(splitmix64(seed ^ splitmix64(stream_id)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference SplitMix64 generator seeded with 0.
        let mut state = 0u64;
        let mut next = || {
            let out = splitmix64(state);
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            out
        };
        assert_eq!(next(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(next(), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map({
            let mut r = stream(7, streams::INIT);
            move |_| r.next_u64()
        }).collect();
        let b: Vec<u64> = (0..4).map({
            let mut r = stream(7, streams::INIT);
            move |_| r.next_u64()
        }).collect();
        let c = stream(7, streams::SHUFFLE).next_u64();
        assert_eq!(a, b);
        assert_ne!(a[0], c);
    }
}
