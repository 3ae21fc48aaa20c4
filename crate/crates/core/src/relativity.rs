//! Event ordering in 1+1 dimensional spacetime (`c = 1`) and the engine
//! deciding which correlations exist under a set of hypotheses.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primitives::{correlate, Angle, AxisConfig, AxisSymbol, Block, CorrelationEstimate};
use crate::quantum::twisted_malus;
use crate::realism::{generate_block, CounterfactualModel};

// ── Spacetime ───────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeEvent {
    pub x: f64,
    pub t: f64,
}

impl SpacetimeEvent {
    pub fn new(x: f64, t: f64) -> Self {
        Self { x, t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntervalType {
    Spacelike,
    Timelike,
    Lightlike,
}

/// Classifies the separation by the sign of `Δx² − Δt²`.
pub fn interval_type(e1: &SpacetimeEvent, e2: &SpacetimeEvent) -> IntervalType {
    let dx2 = (e2.x - e1.x).powi(2);
    let dt2 = (e2.t - e1.t).powi(2);
    let scale = dx2.max(dt2);
    let s = dx2 - dt2;
    if s.abs() <= 1e-12 * scale {
        IntervalType::Lightlike
    } else if s > 0.0 {
        IntervalType::Spacelike
    } else {
        IntervalType::Timelike
    }
}

/// A Lorentz observer moving at `beta = v/c` along the flight line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boost {
    beta: f64,
}

impl Boost {
    pub fn new(beta: f64) -> Result<Self> {
        if beta.abs() < 1.0 {
            Ok(Self { beta })
        } else {
            Err(Error::InvalidBoost(beta))
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        1.0 / (1.0 - self.beta * self.beta).sqrt()
    }

    pub fn apply(&self, e: &SpacetimeEvent) -> SpacetimeEvent {
        let g = self.gamma();
        SpacetimeEvent {
            x: g * (e.x - self.beta * e.t),
            t: g * (e.t - self.beta * e.x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeOrder {
    FirstBeforeSecond,
    Simultaneous,
    SecondBeforeFirst,
}

/// Order of `e1` and `e2` for the observer `b`: sign of `t′₂ − t′₁`.
pub fn boosted_order(e1: &SpacetimeEvent, e2: &SpacetimeEvent, b: &Boost) -> TimeOrder {
    let dt = b.apply(e2).t - b.apply(e1).t;
    if dt > 0.0 {
        TimeOrder::FirstBeforeSecond
    } else if dt < 0.0 {
        TimeOrder::SecondBeforeFirst
    } else {
        TimeOrder::Simultaneous
    }
}

/// Which measurement station comes first for an observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObserverKind {
    /// Measurements at `E` precede those at `P` for every pair.
    EP,
    /// Measurements at `P` precede those at `E` for every pair.
    PE,
}

/// Finds a boost for which the `desired` station measures first.
pub fn find_observer(e_event: &SpacetimeEvent, p_event: &SpacetimeEvent, desired: ObserverKind) -> Result<Boost> {
    find_observer_for_schedule(&[(*e_event, *p_event)], desired)
}

/// As [`find_observer`], but one boost must work for every `(E, P)` pair
/// of the schedule.
///
/// For a spacelike pair with `X` first and `Y` second, `t′_Y > t′_X` iff
/// `Δt − β·Δx > 0` with `Δ = Y − X`; that is a half-interval of `β` bounded
/// by `Δt/Δx ∈ (−1, 1)`. The returned `β` is the midpoint of the
/// intersection of all half-intervals with `(−1, 1)`.
pub fn find_observer_for_schedule(
    schedule: &[(SpacetimeEvent, SpacetimeEvent)],
    desired: ObserverKind,
) -> Result<Boost> {
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    for (e, p) in schedule {
        if interval_type(e, p) != IntervalType::Spacelike {
            return Err(Error::NotSpacelike);
        }
        let (first, second) = match desired {
            ObserverKind::EP => (e, p),
            ObserverKind::PE => (p, e),
        };
        let dx = second.x - first.x;
        let critical = (second.t - first.t) / dx;
        if dx > 0.0 {
            hi = hi.min(critical);
        } else {
            lo = lo.max(critical);
        }
    }
    if lo >= hi {
        return Err(Error::NoCommonObserver);
    }
    Boost::new((lo + hi) / 2.0)
}

// ── Hypotheses ──────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hypothesis {
    #[serde(rename = "QM")]
    QuantumMechanics,
    #[serde(rename = "WR")]
    WeakRealism,
    Locality,
    #[serde(rename = "EACP")]
    Eacp,
    #[serde(rename = "FWP")]
    FreeWill,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 5] = [
        Hypothesis::QuantumMechanics,
        Hypothesis::WeakRealism,
        Hypothesis::Locality,
        Hypothesis::Eacp,
        Hypothesis::FreeWill,
    ];

    fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub fn tag(self) -> &'static str {
        match self {
            Hypothesis::QuantumMechanics => "QM",
            Hypothesis::WeakRealism => "WR",
            Hypothesis::Locality => "Locality",
            Hypothesis::Eacp => "EACP",
            Hypothesis::FreeWill => "FWP",
        }
    }
}

impl FromStr for Hypothesis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qm" => Ok(Hypothesis::QuantumMechanics),
            "wr" | "weakrealism" | "weak-realism" => Ok(Hypothesis::WeakRealism),
            "locality" | "loc" => Ok(Hypothesis::Locality),
            "eacp" => Ok(Hypothesis::Eacp),
            "fwp" | "freewill" | "free-will" => Ok(Hypothesis::FreeWill),
            other => Err(format!("unknown hypothesis `{other}`")),
        }
    }
}

/// A subset of `{QM, WR, Locality, EACP, FWP}`; QM is always present.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<Hypothesis>", from = "Vec<Hypothesis>")]
pub struct HypothesisSet(u8);

impl HypothesisSet {
    pub fn quantum_only() -> Self {
        HypothesisSet(Hypothesis::QuantumMechanics.bit())
    }

    pub fn with(mut self, h: Hypothesis) -> Self {
        self.0 |= h.bit();
        self
    }

    pub fn from_flags(flags: &[Hypothesis]) -> Self {
        flags.iter().fold(Self::quantum_only(), |s, h| s.with(*h))
    }

    pub fn contains(&self, h: Hypothesis) -> bool {
        self.0 & h.bit() != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Hypothesis> + '_ {
        Hypothesis::ALL.into_iter().filter(|h| self.contains(*h))
    }

    /// `{QM, WR, Locality}`: the classical setting.
    pub fn local_realism() -> Self {
        Self::from_flags(&[Hypothesis::WeakRealism, Hypothesis::Locality])
    }

    /// `{QM, WR, EACP}`.
    pub fn eacp_realism() -> Self {
        Self::from_flags(&[Hypothesis::WeakRealism, Hypothesis::Eacp])
    }

    /// `{QM, WR, EACP, FWP}`.
    pub fn eacp_free_will() -> Self {
        Self::eacp_realism().with(Hypothesis::FreeWill)
    }

    /// Locality implies the EACP.
    pub fn has_eacp(&self) -> bool {
        self.contains(Hypothesis::Eacp) || self.contains(Hypothesis::Locality)
    }
}

impl fmt::Debug for HypothesisSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for HypothesisSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tags: Vec<&str> = self.iter().map(Hypothesis::tag).collect();
        write!(f, "{{{}}}", tags.join(", "))
    }
}

impl From<HypothesisSet> for Vec<Hypothesis> {
    fn from(s: HypothesisSet) -> Self {
        s.iter().collect()
    }
}

impl From<Vec<Hypothesis>> for HypothesisSet {
    fn from(v: Vec<Hypothesis>) -> Self {
        Self::from_flags(&v)
    }
}

impl FromStr for HypothesisSet {
    type Err = String;

    /// Comma or whitespace separated tags, e.g. `WR,EACP,FWP`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim().trim_start_matches('{').trim_end_matches('}');
        let flags = s
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<std::result::Result<Vec<Hypothesis>, _>>()?;
        Ok(Self::from_flags(&flags))
    }
}

// ── Definability engine ─────────────────────────────────────────────────────

/// The six correlations that appear in the V3 and V4 inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CorrelationSymbol {
    #[serde(rename = "E,P")]
    EP,
    #[serde(rename = "E,P'")]
    EPPrime,
    #[serde(rename = "E',P")]
    EPrimeP,
    #[serde(rename = "E',P'")]
    EPrimePPrime,
    #[serde(rename = "E,E'")]
    EEPrime,
    #[serde(rename = "P,P'")]
    PPPrime,
}

impl CorrelationSymbol {
    pub const ALL: [CorrelationSymbol; 6] = [
        CorrelationSymbol::EP,
        CorrelationSymbol::EPPrime,
        CorrelationSymbol::EPrimeP,
        CorrelationSymbol::EPrimePPrime,
        CorrelationSymbol::EEPrime,
        CorrelationSymbol::PPPrime,
    ];

    pub fn axes(self) -> (AxisSymbol, AxisSymbol) {
        use AxisSymbol::*;
        match self {
            CorrelationSymbol::EP => (E, P),
            CorrelationSymbol::EPPrime => (E, PPrime),
            CorrelationSymbol::EPrimeP => (EPrime, P),
            CorrelationSymbol::EPrimePPrime => (EPrime, PPrime),
            CorrelationSymbol::EEPrime => (E, EPrime),
            CorrelationSymbol::PPPrime => (P, PPrime),
        }
    }

    /// The symbol for an unordered pair of distinct axes.
    pub fn between(a: AxisSymbol, b: AxisSymbol) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.axes() == (a, b) || s.axes() == (b, a))
    }

    pub fn is_same_side(self) -> bool {
        let (a, b) = self.axes();
        a.side() == b.side()
    }

    /// Compact ASCII label, e.g. `E',P`.
    pub fn label(self) -> String {
        let (a, b) = self.axes();
        format!("{a},{b}")
    }
}

impl fmt::Display for CorrelationSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.axes();
        write!(f, "⟨{a},{b}⟩")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Status {
    /// The correlation exists and has this value.
    Defined { value: f64 },
    /// Same-side orthogonal axes under EACP and the Free Will Principle.
    ZeroByNoCorrelation,
    /// Only `liminf ≤ 0 ≤ limsup` can be asserted.
    Bounded { liminf_at_most: f64, limsup_at_least: f64 },
    /// The correlation makes no sense under these hypotheses.
    Undefined,
}

impl Status {
    /// The value an inequality may use: defined values and the lemma's zero.
    pub fn usable_value(&self) -> Option<f64> {
        match self {
            Status::Defined { value } => Some(*value),
            Status::ZeroByNoCorrelation => Some(0.0),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Status::Defined { .. } => "defined",
            Status::ZeroByNoCorrelation => "zero-by-no-correlation",
            Status::Bounded { .. } => "bounded",
            Status::Undefined => "undefined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationStatus {
    pub symbol: CorrelationSymbol,
    pub status: Status,
    /// Which rule produced the status.
    pub justification: &'static str,
}

/// Justification tags attached to every status.
pub mod rule {
    pub const TWISTED_MALUS: &str = "twisted-malus";
    pub const QM_SINGLE_AXIS: &str = "qm-one-axis-per-particle";
    pub const LOCALITY_MIRROR: &str = "locality-anticorrelation-identity";
    pub const EACP_CROSS_SIDE: &str = "eacp-cross-side-malus";
    pub const EACP_NO_JOINT: &str = "eacp-two-counterfactuals-undefined";
    pub const NO_CORRELATION: &str = "no-correlation-lemma";
    pub const PARTIAL_SUM_BOUNDS: &str = "no-correlation-liminf-limsup";
    pub const NO_REALISM: &str = "no-realism-no-counterfactual";
}

/// Status of one correlation under `h` for the configured angles.
///
/// * Without Weak Realism (or with it but neither Locality nor the EACP)
///   only the measured pair `⟨E,P⟩` has a value.
/// * With Weak Realism and Locality every correlation is fixed by the
///   twisted Malus law and the anti-correlation identity: cross-side
///   `−cos Δ`, same-side `+cos Δ`.
/// * With Weak Realism and the EACP alone, the three cross-side pairs that
///   involve at least one measured axis keep `−cos Δ`; `⟨E',P'⟩` is
///   undefined; a same-side pair is zero when its axes are orthogonal and
///   the Free Will Principle holds, and only bounded otherwise.
pub fn status(h: &HypothesisSet, angles: &AxisConfig, symbol: CorrelationSymbol) -> Result<CorrelationStatus> {
    let (a, b) = symbol.axes();
    let (ta, tb) = (angles.require(a)?, angles.require(b)?);
    let (status, justification) = classify(h, symbol, ta, tb);
    Ok(CorrelationStatus {
        symbol,
        status,
        justification,
    })
}

fn classify(h: &HypothesisSet, symbol: CorrelationSymbol, ta: Angle, tb: Angle) -> (Status, &'static str) {
    let malus = Status::Defined {
        value: twisted_malus(ta, tb),
    };
    if symbol == CorrelationSymbol::EP {
        return (malus, rule::TWISTED_MALUS);
    }
    if !h.contains(Hypothesis::WeakRealism) {
        return (Status::Undefined, rule::QM_SINGLE_AXIS);
    }
    if h.contains(Hypothesis::Locality) {
        return if symbol.is_same_side() {
            (Status::Defined { value: (ta - tb).cos() }, rule::LOCALITY_MIRROR)
        } else {
            (malus, rule::TWISTED_MALUS)
        };
    }
    if !h.has_eacp() {
        return (Status::Undefined, rule::NO_REALISM);
    }
    match symbol {
        CorrelationSymbol::EPPrime | CorrelationSymbol::EPrimeP => (malus, rule::EACP_CROSS_SIDE),
        CorrelationSymbol::EPrimePPrime => (Status::Undefined, rule::EACP_NO_JOINT),
        CorrelationSymbol::EEPrime | CorrelationSymbol::PPPrime => {
            if h.contains(Hypothesis::FreeWill) && ta.is_orthogonal_to(tb) {
                (Status::ZeroByNoCorrelation, rule::NO_CORRELATION)
            } else {
                (
                    Status::Bounded {
                        liminf_at_most: 0.0,
                        limsup_at_least: 0.0,
                    },
                    rule::PARTIAL_SUM_BOUNDS,
                )
            }
        }
        CorrelationSymbol::EP => unreachable!("handled above"),
    }
}

/// Whether `symbol` is undefined under `h`. Undefinedness never depends
/// on the angles, only on the hypotheses.
pub fn undefined_under(h: &HypothesisSet, symbol: CorrelationSymbol) -> bool {
    classify(h, symbol, Angle::ZERO, Angle::ZERO).0 == Status::Undefined
}

/// Statuses for every correlation whose two axes are configured.
pub fn definable_correlations(h: &HypothesisSet, angles: &AxisConfig) -> Vec<CorrelationStatus> {
    CorrelationSymbol::ALL
        .into_iter()
        .filter_map(|s| status(h, angles, s).ok())
        .collect()
}

// ── No-correlation check ────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum NoCorrelationVerdict {
    Consistent,
    WitnessOfEacpViolation,
}

impl fmt::Display for NoCorrelationVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoCorrelationVerdict::Consistent => "CONSISTENT",
            NoCorrelationVerdict::WitnessOfEacpViolation => "WITNESS-OF-EACP-VIOLATION",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoCorrelationReport {
    pub estimate: CorrelationEstimate,
    pub mean: f64,
    pub tolerance: f64,
    /// False when `E` and `E'` are not orthogonal; the lemma then says nothing.
    pub orthogonal: bool,
    pub verdict: NoCorrelationVerdict,
}

/// Samples `⟨E,E'⟩` from `model` with `P` present and checks it against the
/// No-Correlation Lemma: `|mean| ≤ 4/√n` and partial means straddling zero.
pub fn no_correlation_check(
    model: &CounterfactualModel,
    theta_e: Angle,
    theta_e_prime: Angle,
    theta_p: Angle,
    n: usize,
    seed: u64,
) -> Result<NoCorrelationReport> {
    let axes = AxisConfig::new()
        .with(AxisSymbol::E, theta_e)
        .with(AxisSymbol::EPrime, theta_e_prime)
        .with(AxisSymbol::P, theta_p);
    let block = generate_block(model, &Block::new(axes, n, 0)?, seed)?;
    let estimate = correlate(block.get(AxisSymbol::E)?, block.get(AxisSymbol::EPrime)?)?;
    let tolerance = estimate.tolerance();
    let verdict = if estimate.mean().abs() <= tolerance && estimate.extrema_straddle_zero() {
        NoCorrelationVerdict::Consistent
    } else {
        NoCorrelationVerdict::WitnessOfEacpViolation
    };
    Ok(NoCorrelationReport {
        estimate,
        mean: estimate.mean(),
        tolerance,
        orthogonal: theta_e.is_orthogonal_to(theta_e_prime),
        verdict,
    })
}
