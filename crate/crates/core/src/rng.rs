//! Seed derivation and the deterministic stream used for every random draw.
//!
//! The algorithm is fixed so that seeds reproduce across implementations:
//!
//! * Seeds are combined with the SplitMix64 finalizer: starting from the
//!   master seed, each 64-bit word `w` is folded in as `h = mix64(h ^ w)`.
//!   Floats enter through their IEEE-754 bit pattern.
//! * A stream is ChaCha20 (20 rounds, stream 0, counter 0) keyed with four
//!   successive SplitMix64 outputs of the seed, written little-endian.
//! * A uniform `f64` in `[0, 1)` is `(next_u64 >> 11) * 2^-53`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function applied to `z + GOLDEN_GAMMA`.
pub fn mix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `words` into `seed`.
pub fn derive_seed(seed: u64, words: &[u64]) -> u64 {
    words.iter().fold(mix64(seed), |h, &w| mix64(h ^ w))
}

/// Per-trajectory seed for one initial condition of one system instance.
pub fn ic_seed(master_seed: u64, k: f64, rho: f64, n: usize, ic_index: usize) -> u64 {
    derive_seed(
        master_seed,
        &[k.to_bits(), rho.to_bits(), n as u64, ic_index as u64],
    )
}

/// Tags for seed streams that hang off a trajectory seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    InitialCondition = 0,
    LyapunovDeviation = 1,
    SaliDeviation = 2,
    Split = 3,
}

pub fn stream_seed(seed: u64, tag: StreamTag) -> u64 {
    derive_seed(seed, &[0x5441_4753 ^ tag as u64])
}

/// Deterministic uniform stream.
pub struct Stream(ChaCha20Rng);

impl Stream {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed;
        for chunk in key.chunks_exact_mut(8) {
            let word = mix64(state);
            state = state.wrapping_add(GOLDEN_GAMMA);
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        Stream(ChaCha20Rng::from_seed(key))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let x = lo + (hi - lo) * self.unit();
        if x >= hi {
            lo
        } else {
            x
        }
    }

    /// Uniform integer in `0..bound` by rejection.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of SplitMix64 seeded with 0 (state advanced by the gamma
        // before mixing), as published with the reference implementation.
        assert_eq!(mix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(mix64(GOLDEN_GAMMA), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn unit_is_half_open() {
        let mut s = Stream::new(7);
        for _ in 0..10_000 {
            let u = s.unit();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4)
            .map({
                let mut s = Stream::new(42);
                move |_| s.next_u64()
            })
            .collect();
        let b: Vec<u64> = (0..4)
            .map({
                let mut s = Stream::new(42);
                move |_| s.next_u64()
            })
            .collect();
        let c: Vec<u64> = (0..4)
            .map({
                let mut s = Stream::new(43);
                move |_| s.next_u64()
            })
            .collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn ic_seed_depends_on_every_component() {
        let base = ic_seed(1, 2.0, 0.1, 8, 0);
        assert_ne!(base, ic_seed(2, 2.0, 0.1, 8, 0));
        assert_ne!(base, ic_seed(1, 6.5, 0.1, 8, 0));
        assert_ne!(base, ic_seed(1, 2.0, 0.2, 8, 0));
        assert_ne!(base, ic_seed(1, 2.0, 0.1, 16, 0));
        assert_ne!(base, ic_seed(1, 2.0, 0.1, 8, 1));
    }

    #[test]
    fn below_stays_in_range() {
        let mut s = Stream::new(3);
        let mut seen = [false; 5];
        for _ in 0..1000 {
            let v = s.below(5) as usize;
            seen[v] = true;
        }
        assert!(seen.iter().all(|&x| x));
    }
}
