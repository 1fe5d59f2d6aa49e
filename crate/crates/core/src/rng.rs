//! Seeded randomness for Monte-Carlo calibration.
//!
//! One named generator is used everywhere: ChaCha12, seeded from a `u64`.
//! Streams are reproducible within this implementation; cross-language
//! stream equality is not promised.

use rand_core::{RngCore, SeedableRng};

use crate::math;

/// The crate's pinned random number generator.
pub type LroRng = rand_chacha::ChaCha12Rng;

/// Build the named generator from a 64-bit seed.
pub fn seeded(seed: u64) -> LroRng {
    LroRng::seed_from_u64(seed)
}

/// Uniform draw in `[0, 1)` from the top 53 bits of a `u64`.
#[inline]
pub fn uniform01(rng: &mut LroRng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in `(0, 1]`, safe to pass to `ln`.
#[inline]
pub fn uniform01_open_left(rng: &mut LroRng) -> f64 {
    1.0 - uniform01(rng)
}

/// Erlang(`shape`, rate 1) variate as a sum of `shape` exponentials.
///
/// Exact for the integer shapes used by Dirichlet posterior sampling
/// (`N_i + 1`); cost is linear in `shape`.
pub fn erlang(rng: &mut LroRng, shape: u64) -> f64 {
    let mut log_sum = 0.0;
    for _ in 0..shape {
        log_sum += math::ln(uniform01_open_left(rng));
    }
    -log_sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_in_range_and_deterministic() {
        let mut a = seeded(42);
        let mut b = seeded(42);
        for _ in 0..1000 {
            let ua = uniform01(&mut a);
            assert!((0.0..1.0).contains(&ua));
            assert_eq!(ua, uniform01(&mut b));
        }
    }

    #[test]
    fn erlang_mean_matches_shape() {
        let mut rng = seeded(7);
        let shape = 12u64;
        let trials = 20_000;
        let mean: f64 = (0..trials).map(|_| erlang(&mut rng, shape)).sum::<f64>() / trials as f64;
        assert!((mean - shape as f64).abs() < 0.2, "mean {mean}");
    }
}
