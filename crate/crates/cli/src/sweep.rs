//! Exhaustive V3/V4 check of the sign-based hidden-variable model over an
//! angle grid.
//!
//! For one seed the model fixes every outcome at every grid angle, so all
//! configurations share one table. Alice's outcomes are stored as bitsets;
//! Bob's are their negation. The product sum of two Alice columns is then
//! `N − 2·popcount(a ⊕ b)` and every inequality margin is an integer
//! expression in those sums.

use bellbench::primitives::{correlate, Angle, AxisConfig, AxisSymbol, Block, Outcome, Side};
use bellbench::quantum::pair_rng;
use bellbench::realism::{generate_block, lhv_outcome, CounterfactualModel, HiddenVariable};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSweep {
    pub seed: u64,
    /// Smallest scaled V3 margin over all `K³` role assignments of grid angles.
    pub min_v3_margin: i64,
    /// Smallest scaled V4 margin over all `K⁴` configurations.
    pub min_v4_margin: i64,
    pub v3_violations: u64,
    /// Number of `(P, P')` grid pairs for which some `(E, E')` violates V4.
    pub v4_violating_pp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub delta: f64,
    pub estimate: f64,
    pub closed_form: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoPointCheck {
    pub delta: f64,
    pub same_side: bool,
    pub mean: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub n: usize,
    pub within_tolerance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub grid_points: usize,
    pub grid_step: f64,
    pub pairs: usize,
    pub seeds: Vec<SeedSweep>,
    pub v3_configurations: u64,
    pub v4_configurations: u64,
    /// Opposite-side correlation against angle difference, from the first seed.
    pub curve: Vec<CurvePoint>,
    pub two_point: Vec<TwoPointCheck>,
}

impl SweepReport {
    pub fn violations(&self) -> u64 {
        self.seeds.iter().map(|s| s.v3_violations + s.v4_violating_pp).sum()
    }
}

/// `±(1 − 2|Δ|/π)`: opposite sides carry the minus sign.
fn closed_form(delta: f64, same_side: bool) -> f64 {
    let d = Angle::new(delta).radians().abs();
    let c = 1.0 - 2.0 * d / std::f64::consts::PI;
    if same_side {
        c
    } else {
        -c
    }
}

/// Pairwise product sums of Alice's outcomes at the grid angles.
fn alice_sums(seed: u64, angles: &[Angle], pairs: usize) -> Vec<Vec<i64>> {
    let lambdas: Vec<HiddenVariable> = (0..pairs as u64)
        .into_par_iter()
        .map(|i| HiddenVariable::sample(&mut pair_rng(seed, 0, i)))
        .collect();
    let words = pairs.div_ceil(64);
    let columns: Vec<Vec<u64>> = angles
        .par_iter()
        .map(|theta| {
            let mut bits = vec![0u64; words];
            for (i, l) in lambdas.iter().enumerate() {
                if lhv_outcome(*l, *theta, Side::Alice) == Outcome::Plus {
                    bits[i / 64] |= 1 << (i % 64);
                }
            }
            bits
        })
        .collect();
    let n = pairs as i64;
    (0..angles.len())
        .into_par_iter()
        .map(|a| {
            (0..angles.len())
                .map(|b| {
                    let differ: u32 = columns[a].iter().zip(&columns[b]).map(|(x, y)| (x ^ y).count_ones()).sum();
                    n - 2 * i64::from(differ)
                })
                .collect()
        })
        .collect()
}

fn sweep_seed(seed: u64, angles: &[Angle], pairs: usize) -> SeedSweep {
    let s = alice_sums(seed, angles, pairs);
    let k = angles.len();
    let n = pairs as i64;

    // V3 with x = E (Alice), y = P (Bob), z = E' (Alice):
    // N − Σyz − |Σxy − Σxz| = N + S[p][e'] − |S[e][p] + S[e][e']|
    let (min_v3, v3_violations) = (0..k)
        .into_par_iter()
        .map(|e| {
            let mut min = i64::MAX;
            let mut bad = 0u64;
            for p in 0..k {
                for ep in 0..k {
                    let m = n + s[p][ep] - (s[e][p] + s[e][ep]).abs();
                    min = min.min(m);
                    bad += u64::from(m < 0);
                }
            }
            (min, bad)
        })
        .reduce(|| (i64::MAX, 0), |a, b| (a.0.min(b.0), a.1 + b.1));

    // V4 with w = E', x = E (Alice), y = P, z = P' (Bob):
    // 2N − |S[e][p] + S[e][p']| − |S[e'][p] − S[e'][p']|. For fixed (P, P')
    // the two terms are maximized independently over E and E'.
    let (min_v4, v4_bad) = (0..k)
        .into_par_iter()
        .map(|p| {
            let mut min = i64::MAX;
            let mut bad = 0u64;
            for pp in 0..k {
                let plus = (0..k).map(|e| (s[e][p] + s[e][pp]).abs()).max().unwrap_or(0);
                let minus = (0..k).map(|e| (s[e][p] - s[e][pp]).abs()).max().unwrap_or(0);
                let m = 2 * n - plus - minus;
                min = min.min(m);
                bad += u64::from(m < 0);
            }
            (min, bad)
        })
        .reduce(|| (i64::MAX, 0), |a, b| (a.0.min(b.0), a.1 + b.1));

    SeedSweep {
        seed,
        min_v3_margin: min_v3,
        min_v4_margin: min_v4,
        v3_violations,
        v4_violating_pp: v4_bad,
    }
}

pub const TWO_POINT_DELTAS: [f64; 5] = [
    0.0,
    std::f64::consts::FRAC_PI_4,
    std::f64::consts::FRAC_PI_2,
    3.0 * std::f64::consts::FRAC_PI_4,
    std::f64::consts::PI,
];

/// Model correlations at `Δ ∈ {0, π/4, π/2, 3π/4, π}` for both sides, each
/// from its own block of `n` pairs.
pub fn two_point_checks(seed: u64, n: usize) -> Result<Vec<TwoPointCheck>, CliError> {
    let mut out = Vec::new();
    for (i, delta) in TWO_POINT_DELTAS.into_iter().enumerate() {
        for same_side in [false, true] {
            let other = if same_side { AxisSymbol::EPrime } else { AxisSymbol::P };
            let axes = AxisConfig::new().with(AxisSymbol::E, 0.0).with(other, delta);
            let index = 2 * i as u32 + u32::from(same_side);
            let block = generate_block(&CounterfactualModel::LhvSign, &Block::new(axes, n, index)?, seed)?;
            let est = correlate(block.get(AxisSymbol::E)?, block.get(other)?)?;
            let expected = closed_form(delta, same_side);
            out.push(TwoPointCheck {
                delta,
                same_side,
                mean: est.mean(),
                expected,
                tolerance: est.tolerance(),
                n,
                within_tolerance: (est.mean() - expected).abs() <= est.tolerance(),
            });
        }
    }
    Ok(out)
}

/// Sweeps seeds `first_seed .. first_seed + seeds` over a grid of
/// `round(2π / grid_step)` angles with `pairs` pairs each, then checks the
/// two-point function on `two_point_pairs` pairs.
pub fn lhv_sweep(
    first_seed: u64,
    seeds: u64,
    grid_step: f64,
    pairs: usize,
    two_point_pairs: usize,
) -> Result<SweepReport, CliError> {
    let k = ((std::f64::consts::TAU / grid_step).round() as usize).max(1);
    let angles: Vec<Angle> = (0..k).map(|i| Angle::new(i as f64 * grid_step)).collect();
    let seed_reports: Vec<SeedSweep> = (0..seeds)
        .map(|i| sweep_seed(first_seed.wrapping_add(i), &angles, pairs))
        .collect();

    let s = alice_sums(first_seed, &angles, pairs);
    let curve = (0..=k / 2)
        .map(|d| {
            let total: i64 = (0..k).map(|a| -s[a][(a + d) % k]).sum();
            let delta = d as f64 * grid_step;
            CurvePoint {
                delta,
                estimate: total as f64 / (k * pairs) as f64,
                closed_form: closed_form(delta, false),
            }
        })
        .collect();

    Ok(SweepReport {
        grid_points: k,
        grid_step,
        pairs,
        seeds: seed_reports,
        v3_configurations: (k as u64).pow(3),
        v4_configurations: (k as u64).pow(4),
        curve,
        two_point: two_point_checks(first_seed, two_point_pairs)?,
    })
}
