//! Angles, ±1 outcomes, outcome sequences and correlation statistics.
//!
//! Every axis lives in the plane perpendicular to the flight line, so an
//! oriented axis is fully described by its angle to a fixed reference axis
//! plus the side (Alice or Bob) it belongs to.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// ── Angles and axes ─────────────────────────────────────────────────────────

/// An angle in radians, normalized to `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub fn new(radians: f64) -> Self {
        let r = radians.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs
        let r = if r >= TAU { 0.0 } else { r };
        Angle(if r > PI { r - TAU } else { r })
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// The same axis with the opposite orientation.
    pub fn reversed(self) -> Self {
        Angle::new(self.0 + PI)
    }

    pub fn cos(self) -> f64 {
        self.0.cos()
    }

    /// Unsigned separation in `[0, π]`.
    pub fn separation(self, other: Angle) -> f64 {
        (other - self).radians().abs()
    }

    /// True when the two axes are perpendicular, to within `1e-9` in `cos`.
    pub fn is_orthogonal_to(self, other: Angle) -> bool {
        (self - other).cos().abs() <= 1e-9
    }
}

impl From<f64> for Angle {
    fn from(radians: f64) -> Self {
        Angle::new(radians)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl Sub for Angle {
    type Output = Angle;

    fn sub(self, rhs: Angle) -> Angle {
        Angle::new(self.0 - rhs.0)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} rad", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Alice,
    Bob,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Alice => Side::Bob,
            Side::Bob => Side::Alice,
        }
    }
}

/// An oriented measurement axis on one side of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedAxis {
    pub angle: Angle,
    side: Side,
}

impl OrientedAxis {
    pub fn new(angle: Angle, side: Side) -> Self {
        Self { angle, side }
    }

    pub fn side(&self) -> Side {
        self.side
    }
}

/// Signed angle from `a1` to `a2`, normalized to `(-π, π]`.
pub fn angle_between(a1: &OrientedAxis, a2: &OrientedAxis) -> Angle {
    a2.angle - a1.angle
}

/// The four spin-projection sequences of a Bell argument: `E`, `E'` on
/// Alice's side and `P`, `P'` on Bob's. Unprimed ones are the measured
/// sequences; primed ones exist only through a realism assumption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AxisSymbol {
    #[serde(rename = "E")]
    E,
    #[serde(rename = "E'")]
    EPrime,
    #[serde(rename = "P")]
    P,
    #[serde(rename = "P'")]
    PPrime,
}

impl AxisSymbol {
    pub const ALL: [AxisSymbol; 4] = [
        AxisSymbol::E,
        AxisSymbol::EPrime,
        AxisSymbol::P,
        AxisSymbol::PPrime,
    ];

    pub fn side(self) -> Side {
        match self {
            AxisSymbol::E | AxisSymbol::EPrime => Side::Alice,
            AxisSymbol::P | AxisSymbol::PPrime => Side::Bob,
        }
    }

    pub fn provenance(self) -> Provenance {
        match self {
            AxisSymbol::E | AxisSymbol::P => Provenance::Measured,
            AxisSymbol::EPrime | AxisSymbol::PPrime => Provenance::Counterfactual,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AxisSymbol::E => "E",
            AxisSymbol::EPrime => "E'",
            AxisSymbol::P => "P",
            AxisSymbol::PPrime => "P'",
        }
    }
}

impl fmt::Display for AxisSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AxisSymbol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "E" => Ok(AxisSymbol::E),
            "E'" | "Eprime" | "E_prime" => Ok(AxisSymbol::EPrime),
            "P" => Ok(AxisSymbol::P),
            "P'" | "Pprime" | "P_prime" => Ok(AxisSymbol::PPrime),
            other => Err(format!("unknown axis symbol `{other}`")),
        }
    }
}

/// Angles for whichever of the four axis symbols a scenario uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AxisConfig {
    angles: [Option<Angle>; 4],
}

impl AxisConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, symbol: AxisSymbol, angle: impl Into<Angle>) -> Self {
        self.set(symbol, angle.into());
        self
    }

    pub fn set(&mut self, symbol: AxisSymbol, angle: Angle) {
        self.angles[symbol.index()] = Some(angle);
    }

    pub fn get(&self, symbol: AxisSymbol) -> Option<Angle> {
        self.angles[symbol.index()]
    }

    pub fn require(&self, symbol: AxisSymbol) -> Result<Angle> {
        self.get(symbol).ok_or(Error::MissingAngle(symbol))
    }

    pub fn axis(&self, symbol: AxisSymbol) -> Result<OrientedAxis> {
        Ok(OrientedAxis::new(self.require(symbol)?, symbol.side()))
    }

    pub fn contains(&self, symbol: AxisSymbol) -> bool {
        self.get(symbol).is_some()
    }

    /// Configured symbols in canonical `E, E', P, P'` order.
    pub fn symbols(&self) -> impl Iterator<Item = AxisSymbol> + '_ {
        AxisSymbol::ALL.into_iter().filter(|s| self.contains(*s))
    }

    /// Three-axis configuration used by the V3 inequality.
    pub fn v3(p: f64, e: f64, e_prime: f64) -> Self {
        Self::new()
            .with(AxisSymbol::P, p)
            .with(AxisSymbol::E, e)
            .with(AxisSymbol::EPrime, e_prime)
    }

    /// Four-axis configuration used by the V4 (CHSH) inequality.
    pub fn v4(e: f64, e_prime: f64, p: f64, p_prime: f64) -> Self {
        Self::new()
            .with(AxisSymbol::E, e)
            .with(AxisSymbol::EPrime, e_prime)
            .with(AxisSymbol::P, p)
            .with(AxisSymbol::PPrime, p_prime)
    }
}

/// A run of consecutive pairs `I_κ` over which every axis stays fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub axes: AxisConfig,
    count: usize,
    pub index: u32,
}

impl Block {
    pub fn new(axes: AxisConfig, count: usize, index: u32) -> Result<Self> {
        if count == 0 {
            return Err(Error::EmptyBlock);
        }
        Ok(Self { axes, count, index })
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

// ── Outcomes and sequences ──────────────────────────────────────────────────

/// A normalized spin projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Outcome {
    Minus,
    Plus,
}

impl Outcome {
    pub fn value(self) -> i8 {
        match self {
            Outcome::Minus => -1,
            Outcome::Plus => 1,
        }
    }

    /// `+1` for non-negative inputs; zero resolves to `+1`.
    pub fn from_sign(x: f64) -> Self {
        if x >= 0.0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }
}

impl Neg for Outcome {
    type Output = Outcome;

    fn neg(self) -> Outcome {
        match self {
            Outcome::Minus => Outcome::Plus,
            Outcome::Plus => Outcome::Minus,
        }
    }
}

impl From<Outcome> for i8 {
    fn from(o: Outcome) -> i8 {
        o.value()
    }
}

impl TryFrom<i8> for Outcome {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(format!("outcome must be +1 or -1, got {other}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    Measured,
    Counterfactual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSequence {
    pub axis: OrientedAxis,
    pub values: Vec<Outcome>,
    pub provenance: Provenance,
}

impl OutcomeSequence {
    pub fn new(axis: OrientedAxis, values: Vec<Outcome>, provenance: Provenance) -> Self {
        Self {
            axis,
            values,
            provenance,
        }
    }

    /// Sequence on an arbitrary axis, for algebraic identities where the
    /// physical axis is irrelevant.
    pub fn abstract_from(values: Vec<Outcome>) -> Self {
        Self::new(
            OrientedAxis::new(Angle::ZERO, Side::Alice),
            values,
            Provenance::Counterfactual,
        )
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Returns `q` with every value negated and moved to the opposite side at the
/// same angle: the partner sequence forced by the singlet's anti-correlation.
pub fn mirror(q: &OutcomeSequence) -> OutcomeSequence {
    OutcomeSequence {
        axis: OrientedAxis::new(q.axis.angle, q.axis.side().opposite()),
        values: q.values.iter().map(|v| -*v).collect(),
        provenance: q.provenance,
    }
}

/// `Σ u_i·v_i` over two equal-length sequences.
pub fn product_sum(u: &[Outcome], v: &[Outcome]) -> Result<i64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(u
        .iter()
        .zip(v)
        .map(|(a, b)| i64::from(a.value() * b.value()))
        .sum())
}

// ── Correlation estimates ───────────────────────────────────────────────────

/// Burn-in before partial-mean extrema are tracked: `⌈√n⌉`.
pub fn default_burn_in(n: usize) -> usize {
    (n as f64).sqrt().ceil() as usize
}

/// Running estimate of `⟨U,V⟩ = lim (1/N) Σ U_i·V_i`.
///
/// The product sum is kept as an integer so that merging is exact. The
/// smallest and largest partial means seen after `burn_in` samples stand in
/// for `liminf` and `limsup`, which have no finite-N definition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub n: usize,
    pub sum_products: i64,
    pub burn_in: usize,
    running_min_mean: Option<f64>,
    running_max_mean: Option<f64>,
}

impl CorrelationEstimate {
    pub fn empty() -> Self {
        Self {
            n: 0,
            sum_products: 0,
            burn_in: 0,
            running_min_mean: None,
            running_max_mean: None,
        }
    }

    /// Builds an estimate by streaming the product sequence `u_i·v_i`.
    pub fn from_products<I>(products: I, len: usize) -> Self
    where
        I: IntoIterator<Item = i8>,
    {
        let burn_in = default_burn_in(len);
        let mut sum = 0i64;
        let mut n = 0usize;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in products {
            sum += i64::from(p);
            n += 1;
            if n > burn_in {
                let m = sum as f64 / n as f64;
                lo = lo.min(m);
                hi = hi.max(m);
            }
        }
        let tracked = n > burn_in;
        Self {
            n,
            sum_products: sum,
            burn_in,
            running_min_mean: tracked.then_some(lo),
            running_max_mean: tracked.then_some(hi),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum_products as f64 / self.n as f64
        }
    }

    /// Smallest partial mean after burn-in (the `liminf` proxy).
    pub fn running_min_mean(&self) -> Option<f64> {
        self.running_min_mean
    }

    /// Largest partial mean after burn-in (the `limsup` proxy).
    pub fn running_max_mean(&self) -> Option<f64> {
        self.running_max_mean
    }

    /// True when the tracked partial means reach both sides of zero.
    pub fn extrema_straddle_zero(&self) -> bool {
        matches!(
            (self.running_min_mean, self.running_max_mean),
            (Some(lo), Some(hi)) if lo <= 0.0 && hi >= 0.0
        )
    }

    /// Monte Carlo tolerance `4/√n`.
    pub fn tolerance(&self) -> f64 {
        if self.n == 0 {
            f64::INFINITY
        } else {
            4.0 / (self.n as f64).sqrt()
        }
    }
}

impl Default for CorrelationEstimate {
    fn default() -> Self {
        Self::empty()
    }
}

/// Correlation of two measured or inferred sequences over the same pairs.
pub fn correlate(u: &OutcomeSequence, v: &OutcomeSequence) -> Result<CorrelationEstimate> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    if u.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(CorrelationEstimate::from_products(
        u.values.iter().zip(&v.values).map(|(a, b)| a.value() * b.value()),
        u.len(),
    ))
}

/// Combines the estimates of two consecutive runs.
///
/// Counts and sums add exactly, so the merged mean equals the mean of the
/// concatenated sequences. The merged extrema cover every partial mean of
/// the concatenation past `e1.burn_in`, which contains the range tracked by
/// a direct recomputation.
pub fn merge(e1: &CorrelationEstimate, e2: &CorrelationEstimate) -> CorrelationEstimate {
    if e2.is_empty() {
        return *e1;
    }
    if e1.is_empty() {
        return *e2;
    }
    let n1 = e1.n as f64;
    let s1 = e1.sum_products as f64;
    let mean1 = e1.mean();
    // Partial means inside e2's own burn-in are unknown; with k ≤ b2 extra
    // samples they lie within [(s1 - b2)/(n1 + b2), (s1 + b2)/(n1 + b2)].
    let b2 = e2.burn_in.min(e2.n) as f64;
    let early_lo = (s1 - b2) / (n1 + b2);
    let early_hi = (s1 + b2) / (n1 + b2);

    let mut lo = mean1.min(early_lo);
    let mut hi = mean1.max(early_hi);
    for v in [e1.running_min_mean, e2.running_min_mean].into_iter().flatten() {
        lo = lo.min(v);
    }
    for v in [e1.running_max_mean, e2.running_max_mean].into_iter().flatten() {
        hi = hi.max(v);
    }
    CorrelationEstimate {
        n: e1.n + e2.n,
        sum_products: e1.sum_products + e2.sum_products,
        burn_in: e1.burn_in,
        running_min_mean: Some(lo),
        running_max_mean: Some(hi),
    }
}

// ── Probabilities ───────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(into = "f64", try_from = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(p: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&p) {
            Ok(Probability(p))
        } else {
            Err(Error::OutOfRange {
                what: "probability",
                value: p,
                lo: 0.0,
                hi: 1.0,
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        Probability::new(p)
    }
}

pub(crate) fn check_correlation(what: &'static str, c: f64) -> Result<f64> {
    if (-1.0..=1.0).contains(&c) {
        Ok(c)
    } else {
        Err(Error::OutOfRange {
            what,
            value: c,
            lo: -1.0,
            hi: 1.0,
        })
    }
}

/// `Prob(U_i = V_i) = (1 + ⟨U,V⟩)/2`.
pub fn corr_to_prob(c: f64) -> Result<Probability> {
    let c = check_correlation("correlation", c)?;
    Probability::new((1.0 + c) / 2.0)
}

/// `⟨U,V⟩ = 2·Prob(U_i = V_i) − 1`.
pub fn prob_to_corr(p: Probability) -> f64 {
    2.0 * p.value() - 1.0
}

/// Empirical `Prob(U_i = V_i)` for two sequences over the same pairs.
pub fn equality_frequency(u: &OutcomeSequence, v: &OutcomeSequence) -> Result<f64> {
    let s = product_sum(&u.values, &v.values)?;
    if u.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok((u.len() as f64 + s as f64) / (2.0 * u.len() as f64))
}

/// Groups sequences by symbol; the container used for assignment blocks.
pub type SequenceMap = BTreeMap<AxisSymbol, OutcomeSequence>;
