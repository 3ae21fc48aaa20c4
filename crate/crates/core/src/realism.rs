//! Counterfactual models: rules that give every emitted pair a definite ±1
//! value on every configured axis, measured or not.
//!
//! Each pair receives exactly one tuple, so the value on a measured axis is
//! by construction the value the model would assign had that axis only been
//! inferred. Three models are provided:
//!
//! * [`CounterfactualModel::LhvSign`]: a local hidden-variable model with a
//!   planar hidden angle `λ`. It reproduces perfect anti-correlation at equal
//!   angles but only the piecewise-linear correlation `−1 + 2Δ/π`.
//! * [`CounterfactualModel::CollapseSequential`]: Bob's `P` is measured
//!   first and Alice's `E`, `E'` are sampled independently from the collapsed
//!   partner state. It reproduces the quantum cross correlations and is
//!   nonlocal; same-side axes come out correlated as `cos·cos`.
//! * [`CounterfactualModel::FileReplay`]: tuples read verbatim from a file.

use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primitives::{
    Angle, AxisConfig, AxisSymbol, Block, Outcome, OutcomeSequence, SequenceMap, Side,
};
use crate::quantum::{collapse, pair_rng, sample_prepared_with};

/// Planar hidden variable, uniform on the circle and drawn once per pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HiddenVariable {
    pub lambda: Angle,
}

impl HiddenVariable {
    pub fn new(lambda: Angle) -> Self {
        Self { lambda }
    }

    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::new(Angle::new(rng.gen::<f64>() * TAU))
    }
}

/// Alice reads `sign(cos(λ − θ))`, Bob the negation. `cos = 0` reads as `+1`
/// before Bob's negation.
pub fn lhv_outcome(lambda: HiddenVariable, theta: Angle, side: Side) -> Outcome {
    let alice = Outcome::from_sign((lambda.lambda - theta).cos());
    match side {
        Side::Alice => alice,
        Side::Bob => -alice,
    }
}

/// Closed-form LHV correlation between two axes separated by `delta`.
pub fn lhv_correlation(delta: Angle, same_side: bool) -> f64 {
    let same = 1.0 - 2.0 * delta.radians().abs() / std::f64::consts::PI;
    if same_side {
        same
    } else {
        -same
    }
}

/// One value per configured axis for a single pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Assignment {
    values: [Option<Outcome>; 4],
}

impl Assignment {
    /// Panics if `symbol` already has a value: a pair never gets two.
    pub fn set(&mut self, symbol: AxisSymbol, value: Outcome) {
        let slot = &mut self.values[symbol.index()];
        assert!(slot.is_none(), "axis {symbol} assigned twice for one pair");
        *slot = Some(value);
    }

    pub fn get(&self, symbol: AxisSymbol) -> Option<Outcome> {
        self.values[symbol.index()]
    }
}

/// Values drawn by the sequential-collapse rule for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollapseTuple {
    pub p: Outcome,
    pub e: Option<Outcome>,
    pub e_prime: Option<Outcome>,
}

/// `P` is a fair coin; `E` and `E'` are then sampled independently from the
/// partner state `|−P⟩` along `θ_P`.
pub fn collapse_sequential_assign<R: Rng + ?Sized>(
    rng: &mut R,
    theta_p: Angle,
    theta_e: Option<Angle>,
    theta_e_prime: Option<Angle>,
) -> CollapseTuple {
    let p = if rng.gen::<f64>() < 0.5 {
        Outcome::Minus
    } else {
        Outcome::Plus
    };
    let partner = collapse(p, theta_p);
    let e = theta_e.map(|t| sample_prepared_with(rng, partner, t));
    let e_prime = theta_e_prime.map(|t| sample_prepared_with(rng, partner, t));
    CollapseTuple { p, e, e_prime }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CounterfactualModel {
    LhvSign,
    CollapseSequential,
    FileReplay(ReplayTable),
}

impl CounterfactualModel {
    pub fn name(&self) -> &'static str {
        match self {
            CounterfactualModel::LhvSign => "lhv-sign",
            CounterfactualModel::CollapseSequential => "collapse-sequential",
            CounterfactualModel::FileReplay(_) => "file-replay",
        }
    }

    /// Parses `lhv-sign`, `collapse-sequential` or `replay:<path>`.
    pub fn from_spec(spec: &str) -> Result<Self, String> {
        match spec.trim() {
            "lhv-sign" | "lhv" => Ok(CounterfactualModel::LhvSign),
            "collapse-sequential" | "collapse" => Ok(CounterfactualModel::CollapseSequential),
            other => match other.strip_prefix("replay:") {
                Some(path) => ReplayTable::read(path)
                    .map(CounterfactualModel::FileReplay)
                    .map_err(|e| e.to_string()),
                None => Err(format!("unknown counterfactual model `{other}`")),
            },
        }
    }

    pub fn supports(&self, symbol: AxisSymbol) -> bool {
        match self {
            CounterfactualModel::LhvSign => true,
            // no rule is given for a second counterfactual on the collapsing side
            CounterfactualModel::CollapseSequential => symbol != AxisSymbol::PPrime,
            CounterfactualModel::FileReplay(t) => t.axes.contains(symbol),
        }
    }

    /// Checks that every configured axis can be assigned.
    pub fn validate(&self, axes: &AxisConfig) -> Result<()> {
        for symbol in axes.symbols() {
            if !self.supports(symbol) {
                return Err(Error::UnsupportedAxis {
                    model: self.name(),
                    axis: symbol,
                });
            }
        }
        match self {
            CounterfactualModel::CollapseSequential => {
                axes.require(AxisSymbol::P)?;
            }
            CounterfactualModel::FileReplay(t) => {
                for symbol in axes.symbols() {
                    let expected = axes.require(symbol)?;
                    let found = t.axes.require(symbol)?;
                    if (expected - found).radians().abs() > 1e-9 {
                        return Err(Error::ReplayAxisMismatch {
                            axis: symbol,
                            expected: expected.radians(),
                            found: found.radians(),
                        });
                    }
                }
            }
            CounterfactualModel::LhvSign => {}
        }
        Ok(())
    }

    /// Assigns the tuple for pair `pair` of block `block`. Callers must run
    /// [`validate`](Self::validate) first.
    pub fn assign(&self, seed: u64, block: u32, pair: usize, axes: &AxisConfig) -> Result<Assignment> {
        let mut out = Assignment::default();
        match self {
            CounterfactualModel::LhvSign => {
                let lambda = HiddenVariable::sample(&mut pair_rng(seed, block, pair as u64));
                for symbol in axes.symbols() {
                    let theta = axes.require(symbol)?;
                    out.set(symbol, lhv_outcome(lambda, theta, symbol.side()));
                }
            }
            CounterfactualModel::CollapseSequential => {
                let t = collapse_sequential_assign(
                    &mut pair_rng(seed, block, pair as u64),
                    axes.require(AxisSymbol::P)?,
                    axes.get(AxisSymbol::E),
                    axes.get(AxisSymbol::EPrime),
                );
                out.set(AxisSymbol::P, t.p);
                if let Some(e) = t.e {
                    out.set(AxisSymbol::E, e);
                }
                if let Some(e) = t.e_prime {
                    out.set(AxisSymbol::EPrime, e);
                }
            }
            CounterfactualModel::FileReplay(t) => {
                let row = t.rows.get(pair).ok_or(Error::ReplayExhausted {
                    available: t.rows.len(),
                    requested: pair + 1,
                })?;
                for (symbol, value) in t.order.iter().zip(row) {
                    if axes.contains(*symbol) {
                        out.set(*symbol, *value);
                    }
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for CounterfactualModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The sequences a model produced for one block, keyed by axis symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentBlock {
    pub block: Block,
    pub sequences: SequenceMap,
}

impl AssignmentBlock {
    pub fn get(&self, symbol: AxisSymbol) -> Result<&OutcomeSequence> {
        self.sequences.get(&symbol).ok_or(Error::MissingAngle(symbol))
    }
}

/// Runs `model` over every pair of `block`.
pub fn generate_block(model: &CounterfactualModel, block: &Block, seed: u64) -> Result<AssignmentBlock> {
    model.validate(&block.axes)?;
    if let CounterfactualModel::FileReplay(t) = model {
        if t.rows.len() < block.count() {
            return Err(Error::ReplayExhausted {
                available: t.rows.len(),
                requested: block.count(),
            });
        }
    }
    let tuples = (0..block.count())
        .into_par_iter()
        .map(|i| model.assign(seed, block.index, i, &block.axes))
        .collect::<Result<Vec<_>>>()?;

    let mut sequences = SequenceMap::new();
    for symbol in block.axes.symbols() {
        let values = tuples
            .iter()
            .map(|t| t.get(symbol).ok_or(Error::UnsupportedAxis {
                model: model.name(),
                axis: symbol,
            }))
            .collect::<Result<Vec<_>>>()?;
        sequences.insert(
            symbol,
            OutcomeSequence::new(block.axes.axis(symbol)?, values, symbol.provenance()),
        );
    }
    Ok(AssignmentBlock {
        block: *block,
        sequences,
    })
}

// ── Replay files ────────────────────────────────────────────────────────────

/// Pre-recorded tuples.
///
/// Text format: a header line `axes E=<rad> E'=<rad> ...` (optionally
/// prefixed by `#`) naming the column order and angles, then one line per
/// pair with whitespace-separated `+1`/`-1` values. Blank lines and later
/// `#` lines are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayTable {
    pub axes: AxisConfig,
    pub order: Vec<AxisSymbol>,
    pub rows: Vec<Vec<Outcome>>,
}

impl ReplayTable {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::MalformedReplay {
            line: 0,
            reason: format!("{}: {e}", path.as_ref().display()),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let malformed = |line: usize, reason: String| Error::MalformedReplay { line, reason };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hline, header) = lines.next().ok_or_else(|| malformed(1, "missing header".into()))?;
        let header = header.trim_start_matches('#').trim();
        let header = header
            .strip_prefix("axes")
            .ok_or_else(|| malformed(hline, "header must start with `axes`".into()))?
            .trim_start_matches(':');

        let mut axes = AxisConfig::new();
        let mut order = Vec::new();
        for token in header.split_whitespace() {
            let (sym, rad) = token
                .split_once('=')
                .ok_or_else(|| malformed(hline, format!("expected SYMBOL=RADIANS, got `{token}`")))?;
            let symbol: AxisSymbol = sym.parse().map_err(|e| malformed(hline, e))?;
            let rad: f64 = rad
                .parse()
                .map_err(|_| malformed(hline, format!("bad angle `{rad}`")))?;
            if axes.contains(symbol) {
                return Err(malformed(hline, format!("axis {symbol} declared twice")));
            }
            axes.set(symbol, Angle::new(rad));
            order.push(symbol);
        }
        if order.is_empty() {
            return Err(malformed(hline, "header declares no axes".into()));
        }

        let mut rows = Vec::new();
        for (lineno, line) in lines {
            if line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|v| match v {
                    "+1" | "1" => Ok(Outcome::Plus),
                    "-1" => Ok(Outcome::Minus),
                    other => Err(malformed(lineno, format!("value `{other}` is not ±1"))),
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != order.len() {
                return Err(malformed(
                    lineno,
                    format!("expected {} values, found {}", order.len(), row.len()),
                ));
            }
            rows.push(row);
        }
        Ok(Self { axes, order, rows })
    }

    /// Records a generated block so it can be replayed later.
    pub fn from_block(block: &AssignmentBlock) -> Self {
        let order: Vec<AxisSymbol> = block.sequences.keys().copied().collect();
        let rows = (0..block.block.count())
            .map(|i| order.iter().map(|s| block.sequences[s].values[i]).collect())
            .collect();
        Self {
            axes: block.block.axes,
            order,
            rows,
        }
    }
}

impl fmt::Display for ReplayTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "axes")?;
        for s in &self.order {
            let rad = self.axes.get(*s).map(Angle::radians).unwrap_or_default();
            write!(f, " {s}={rad}")?;
        }
        writeln!(f)?;
        for row in &self.rows {
            let cells: Vec<&str> = row
                .iter()
                .map(|v| match v {
                    Outcome::Plus => "+1",
                    Outcome::Minus => "-1",
                })
                .collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}
