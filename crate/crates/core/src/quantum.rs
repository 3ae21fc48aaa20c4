//! Quantum predictions and sampling for the spin-½ singlet state.
//!
//! Randomness is counter based: every pair draws from its own ChaCha stream
//! keyed by `(seed, block, pair)`, so results do not depend on the order or
//! thread in which pairs are generated.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::primitives::{Angle, CorrelationEstimate, Outcome};

/// Bits of the stream id reserved for the pair index within a block.
const PAIR_BITS: u32 = 40;

/// Independent random stream for one emitted pair.
pub fn pair_rng(seed: u64, block: u32, pair: u64) -> ChaCha8Rng {
    debug_assert!(pair < 1 << PAIR_BITS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(block) << PAIR_BITS) | pair);
    rng
}

/// `⟨E,P⟩ = −cos(θ1 − θ2)` for singlet pairs measured along `θ1` and `θ2`.
pub fn twisted_malus(theta1: Angle, theta2: Angle) -> f64 {
    -(theta1 - theta2).cos()
}

/// Draws `(a, b)` from `P(a,b) = (1 − a·b·cos(θA − θB))/4`.
///
/// Alice's value is a fair coin; Bob's is opposite with probability
/// `(1 + cos Δ)/2`. At equal angles the second draw is always `< 1`, so the
/// outcomes are exactly opposite.
pub fn sample_pair_with<R: Rng + ?Sized>(rng: &mut R, theta_a: Angle, theta_b: Angle) -> (Outcome, Outcome) {
    let a = if rng.gen::<f64>() < 0.5 {
        Outcome::Minus
    } else {
        Outcome::Plus
    };
    let p_opposite = (1.0 + (theta_a - theta_b).cos()) / 2.0;
    let b = if rng.gen::<f64>() < p_opposite { -a } else { a };
    (a, b)
}

/// A seeded source of singlet pairs. Each draw consumes one pair index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingletSource {
    pub rng_seed: u64,
    pub pair_counter: u64,
}

impl SingletSource {
    pub fn new(rng_seed: u64) -> Self {
        Self {
            rng_seed,
            pair_counter: 0,
        }
    }

    fn next_rng(&mut self) -> ChaCha8Rng {
        let rng = pair_rng(self.rng_seed, 0, self.pair_counter);
        self.pair_counter += 1;
        rng
    }

    pub fn sample_pair(&mut self, theta_a: Angle, theta_b: Angle) -> (Outcome, Outcome) {
        sample_pair_with(&mut self.next_rng(), theta_a, theta_b)
    }

    pub fn sample_prepared(&mut self, state: PreparedState, theta: Angle) -> Outcome {
        sample_prepared_with(&mut self.next_rng(), state, theta)
    }
}

/// A pure one-particle spin state `|sign⟩` along `axis_angle`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreparedState {
    pub axis_angle: Angle,
    pub sign: Outcome,
}

/// State of the partner particle once one particle of the pair has been
/// measured with result `p_outcome` along `p_axis`.
pub fn collapse(p_outcome: Outcome, p_axis: Angle) -> PreparedState {
    PreparedState {
        axis_angle: p_axis,
        sign: -p_outcome,
    }
}

/// Probability that a prepared state yields `+1` along `theta`.
pub fn prob_plus(state: PreparedState, theta: Angle) -> f64 {
    (1.0 + f64::from(state.sign.value()) * (theta - state.axis_angle).cos()) / 2.0
}

/// Measures a prepared state along `theta`; `E[outcome] = sign·cos(θ − axis)`.
pub fn sample_prepared_with<R: Rng + ?Sized>(rng: &mut R, state: PreparedState, theta: Angle) -> Outcome {
    if rng.gen::<f64>() < prob_plus(state, theta) {
        Outcome::Plus
    } else {
        Outcome::Minus
    }
}

/// Measured-pair correlation over `n` singlet pairs of block `block`.
pub fn estimate_pair_correlation(
    seed: u64,
    block: u32,
    theta_a: Angle,
    theta_b: Angle,
    n: usize,
) -> CorrelationEstimate {
    let products: Vec<i8> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let (a, b) = sample_pair_with(&mut pair_rng(seed, block, i), theta_a, theta_b);
            a.value() * b.value()
        })
        .collect();
    CorrelationEstimate::from_products(products, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

    fn a(x: f64) -> Angle {
        Angle::new(x)
    }

    #[test]
    fn twisted_malus_examples() {
        assert_eq!(twisted_malus(a(0.0), a(0.0)), -1.0);
        assert_abs_diff_eq!(twisted_malus(a(0.0), a(FRAC_PI_2)), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(twisted_malus(a(3.0 * FRAC_PI_4), a(0.0)), SQRT_2 / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn equal_axes_are_perfectly_anticorrelated() {
        let mut src = SingletSource::new(7);
        for k in 0..2000 {
            let theta = a(k as f64 * 0.01);
            let (x, y) = src.sample_pair(theta, theta);
            assert_eq!(x, -y);
        }
        assert_eq!(src.pair_counter, 2000);
    }

    #[test]
    fn pair_correlation_matches_malus() {
        let n = 200_000;
        let tol = 4.0 / (n as f64).sqrt();
        for (k, delta) in [FRAC_PI_2, 3.0 * FRAC_PI_4, 0.3].into_iter().enumerate() {
            let est = estimate_pair_correlation(11, k as u32, a(delta), a(0.0), n);
            assert!((est.mean() - twisted_malus(a(delta), a(0.0))).abs() < tol, "{delta}: {}", est.mean());
        }
    }

    #[test]
    fn marginals_are_unbiased() {
        let n = 200_000u64;
        let (mut sa, mut sb) = (0i64, 0i64);
        for i in 0..n {
            let (x, y) = sample_pair_with(&mut pair_rng(3, 0, i), a(1.0), a(-0.2));
            sa += i64::from(x.value());
            sb += i64::from(y.value());
        }
        let tol = 4.0 / (n as f64).sqrt();
        assert!((sa as f64 / n as f64).abs() < tol);
        assert!((sb as f64 / n as f64).abs() < tol);
    }

    #[test]
    fn same_seed_same_stream() {
        let draw = |seed| {
            let mut s = SingletSource::new(seed);
            (0..100).map(|_| s.sample_pair(a(0.4), a(1.3))).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
        let par = estimate_pair_correlation(9, 2, a(0.4), a(1.3), 10_000);
        let seq: i64 = (0..10_000u64)
            .map(|i| {
                let (x, y) = sample_pair_with(&mut pair_rng(9, 2, i), a(0.4), a(1.3));
                i64::from(x.value() * y.value())
            })
            .sum();
        assert_eq!(par.sum_products, seq);
    }

    #[test]
    fn collapse_examples() {
        let s = collapse(Outcome::Plus, a(0.0));
        assert_eq!((s.axis_angle, s.sign), (a(0.0), Outcome::Minus));
        let s = collapse(Outcome::Minus, a(1.1));
        assert_eq!((s.axis_angle, s.sign), (a(1.1), Outcome::Plus));

        let mut src = SingletSource::new(1);
        for k in 0..500 {
            let p = if k % 3 == 0 { Outcome::Plus } else { Outcome::Minus };
            let axis = a(k as f64 * 0.037);
            assert_eq!(src.sample_prepared(collapse(p, axis), axis), -p);
        }
    }

    #[test]
    fn prepared_state_born_rule() {
        let up = PreparedState {
            axis_angle: a(0.0),
            sign: Outcome::Plus,
        };
        let mut src = SingletSource::new(2);
        for _ in 0..500 {
            assert_eq!(src.sample_prepared(up, a(0.0)), Outcome::Plus);
            assert_eq!(src.sample_prepared(up, a(PI)), Outcome::Minus);
        }
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| f64::from(src.sample_prepared(up, a(FRAC_PI_2)).value()))
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn collapse_chain_reproduces_malus() {
        // B measured from the pair; a fresh observable sampled from the
        // collapsed partner at θE must correlate with B as −cos(θE − θB).
        let (theta_b, theta_e) = (a(0.2), a(2.1));
        let n = 200_000u64;
        let mut sum = 0i64;
        for i in 0..n {
            let mut rng = pair_rng(21, 0, i);
            let (_, b) = sample_pair_with(&mut rng, a(0.0), theta_b);
            let e = sample_prepared_with(&mut rng, collapse(b, theta_b), theta_e);
            sum += i64::from(e.value() * b.value());
        }
        let tol = 4.0 / (n as f64).sqrt();
        assert!((sum as f64 / n as f64 - twisted_malus(theta_e, theta_b)).abs() < tol);
    }
}
