//! Counter-based random streams.
//!
//! Every draw is addressed by `(seed, index)`: the generator is ChaCha20 from
//! `rand_chacha`, keyed with `seed_from_u64(seed)`, with its 64-bit stream id
//! set to `index`; the first output word of that stream is the draw. A unit
//! float keeps the top 53 bits: `(word >> 11) * 2^-53`, so values lie in
//! `[0, 1)`. Draws never depend on how many other draws were made.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn word(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.next_u64()
}

pub fn unit(seed: u64, index: u64) -> f64 {
    (word(seed, index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in `0..n` (n > 0).
pub fn index_below(seed: u64, index: u64, n: usize) -> usize {
    ((unit(seed, index) * n as f64) as usize).min(n - 1)
}

/// Derives a child seed from a parent seed and a label, for nesting streams.
pub fn derive(seed: u64, label: u64) -> u64 {
    word(seed ^ 0x9E37_79B9_7F4A_7C15, label)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_addressable() {
        assert_eq!(word(7, 3), word(7, 3));
        assert_ne!(word(7, 3), word(7, 4));
        assert_ne!(word(7, 3), word(8, 3));
        for i in 0..1000 {
            let u = unit(11, i);
            assert!((0.0..1.0).contains(&u));
            assert!(index_below(11, i, 5) < 5);
        }
    }

    #[test]
    fn unit_mean_is_reasonable() {
        let mean = (0..4000).map(|i| unit(1, i)).sum::<f64>() / 4000.0;
        assert!((mean - 0.5).abs() < 0.02);
    }
}
