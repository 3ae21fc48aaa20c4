//! Bell identities at finite N, the V3 and V4 (CHSH) inequalities, local
//! polytope membership and a grid search for falsifying configurations.
//!
//! Role conventions for mapping physical sequences onto the abstract ones:
//!
//! * V3: `x = E`, `y = P`, `z = E'`, so the inequality reads
//!   `|⟨E,P⟩ − ⟨E,E'⟩| ≤ 1 − ⟨P,E'⟩`.
//! * V4: `x = E`, `y = P`, `w = E'`, `z = P'`, so
//!   `|⟨E,P⟩ + ⟨E,P'⟩| + |⟨E',P⟩ − ⟨E',P'⟩| ≤ 2`.

use std::fmt;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primitives::{check_correlation, product_sum, Angle, AxisConfig, OutcomeSequence};
use crate::relativity::{status, undefined_under, CorrelationSymbol, HypothesisSet};

// ── Finite-N identities ─────────────────────────────────────────────────────

/// An exact margin `scaled / n` of a finite-N Bell identity.
///
/// `scaled` is an integer computed from the product sums; the identity holds
/// for any ±1 sequences, so it is never negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityMargin {
    pub scaled: i64,
    pub n: usize,
}

impl IdentityMargin {
    pub fn value(&self) -> f64 {
        self.scaled as f64 / self.n as f64
    }

    pub fn holds(&self) -> bool {
        self.scaled >= 0
    }
}

fn same_len(seqs: &[&OutcomeSequence]) -> Result<usize> {
    let n = seqs[0].len();
    for s in &seqs[1..] {
        if s.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: s.len(),
            });
        }
    }
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    Ok(n)
}

/// `(1 − Σy·z/N) − |Σx·y/N − Σx·z/N|`, computed as `N − Σyz − |Σxy − Σxz|`.
pub fn sica_v3_check(x: &OutcomeSequence, y: &OutcomeSequence, z: &OutcomeSequence) -> Result<IdentityMargin> {
    let n = same_len(&[x, y, z])?;
    let xy = product_sum(&x.values, &y.values)?;
    let xz = product_sum(&x.values, &z.values)?;
    let yz = product_sum(&y.values, &z.values)?;
    Ok(IdentityMargin {
        scaled: n as i64 - yz - (xy - xz).abs(),
        n,
    })
}

/// `2 − (|Σxy + Σxz| + |Σwy − Σwz|)/N`, computed on the integer sums.
pub fn sica_v4_check(
    w: &OutcomeSequence,
    x: &OutcomeSequence,
    y: &OutcomeSequence,
    z: &OutcomeSequence,
) -> Result<IdentityMargin> {
    let n = same_len(&[w, x, y, z])?;
    let xy = product_sum(&x.values, &y.values)?;
    let xz = product_sum(&x.values, &z.values)?;
    let wy = product_sum(&w.values, &y.values)?;
    let wz = product_sum(&w.values, &z.values)?;
    Ok(IdentityMargin {
        scaled: 2 * n as i64 - (xy + xz).abs() - (wy - wz).abs(),
        n,
    })
}

// ── Asymptotic inequalities ─────────────────────────────────────────────────

/// `|c_xy − c_xz| ≤ 1 − c_yz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct V3Report {
    pub c_xy: f64,
    pub c_xz: f64,
    pub c_yz: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub violated: bool,
    /// `lhs + c_yz`, to be compared with 1.
    pub reduced_lhs: f64,
}

impl V3Report {
    /// Violation amount `lhs − rhs` (positive when violated).
    pub fn excess(&self) -> f64 {
        -self.slack
    }

    /// The inequality after substituting the values, e.g. `1.414214 ≤ 1`.
    pub fn reduced_form(&self) -> String {
        format!("{:.6} ≤ 1", self.reduced_lhs)
    }
}

pub fn eval_v3(c_xy: f64, c_xz: f64, c_yz: f64) -> Result<V3Report> {
    check_correlation("c_xy", c_xy)?;
    check_correlation("c_xz", c_xz)?;
    check_correlation("c_yz", c_yz)?;
    let lhs = (c_xy - c_xz).abs();
    let rhs = 1.0 - c_yz;
    let slack = rhs - lhs;
    Ok(V3Report {
        c_xy,
        c_xz,
        c_yz,
        lhs,
        rhs,
        slack,
        violated: slack < 0.0,
        reduced_lhs: lhs + c_yz,
    })
}

/// `S = |c1 + c2| + |c3 − c4| ≤ 2`, with `c1 = ⟨x,y⟩`, `c2 = ⟨x,z⟩`,
/// `c3 = ⟨w,y⟩`, `c4 = ⟨w,z⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct V4Report {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub s: f64,
    pub violated: bool,
}

impl V4Report {
    pub fn excess(&self) -> f64 {
        self.s - 2.0
    }
}

pub fn eval_v4(c1: f64, c2: f64, c3: f64, c4: f64) -> Result<V4Report> {
    for (what, c) in [("c1", c1), ("c2", c2), ("c3", c3), ("c4", c4)] {
        check_correlation(what, c)?;
    }
    let s = (c1 + c2).abs() + (c3 - c4).abs();
    Ok(V4Report {
        c1,
        c2,
        c3,
        c4,
        s,
        violated: s > 2.0,
    })
}

/// A V3 evaluation under a relabelling of the three sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct V3RoleAssignment {
    /// Which input variable plays `x`, `y`, `z` (0, 1, 2 for the inputs'
    /// `x`, `y`, `z`).
    pub roles: [usize; 3],
    /// Input variable whose sequence is negated, if any.
    pub negated: Option<usize>,
    pub report: V3Report,
}

/// Tries every permutation of roles and every single-sequence negation and
/// returns the assignment with the smallest V3 slack.
pub fn worst_v3_assignment(c_xy: f64, c_xz: f64, c_yz: f64) -> Result<V3RoleAssignment> {
    let corr = |i: usize, j: usize| match (i.min(j), i.max(j)) {
        (0, 1) => c_xy,
        (0, 2) => c_xz,
        _ => c_yz,
    };
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut best: Option<V3RoleAssignment> = None;
    for roles in PERMS {
        for negated in [None, Some(0), Some(1), Some(2)] {
            let sign = |v: usize| if negated == Some(v) { -1.0 } else { 1.0 };
            let c = |i: usize, j: usize| sign(roles[i]) * sign(roles[j]) * corr(roles[i], roles[j]);
            let report = eval_v3(c(0, 1), c(0, 2), c(1, 2))?;
            if best.is_none_or(|b| report.slack < b.report.slack) {
                best = Some(V3RoleAssignment {
                    roles,
                    negated,
                    report,
                });
            }
        }
    }
    Ok(best.expect("at least one assignment"))
}

// ── Local polytope ──────────────────────────────────────────────────────────

pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

/// Outcome of fitting a joint distribution of ±1 variables to target
/// pairwise correlations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityResult {
    pub feasible: bool,
    /// Probability of each deterministic assignment. Atom `k` sets variable
    /// `j` to `−1` when bit `j` of `k` is 1, else `+1`.
    pub witness: Vec<f64>,
    /// Largest deviation of the witness's correlations from the targets,
    /// minimized over all distributions.
    pub max_violation: f64,
}

impl FeasibilityResult {
    /// Pairwise correlation `⟨v_i, v_j⟩` under the witness.
    pub fn witness_correlation(&self, i: usize, j: usize) -> f64 {
        self.witness
            .iter()
            .enumerate()
            .map(|(k, p)| p * atom_value(k, i) * atom_value(k, j))
            .sum()
    }
}

fn atom_value(atom: usize, var: usize) -> f64 {
    if atom >> var & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Minimizes `t` subject to `p ≥ 0`, `Σp = 1` and
/// `|Σ_k p_k·v_i(k)·v_j(k) − c| ≤ t` for every target `((i, j), c)`.
fn fit_distribution(vars: usize, targets: &[((usize, usize), f64)]) -> FeasibilityResult {
    let atoms = 1usize << vars;
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let p: Vec<_> = (0..atoms).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let t = lp.add_var(1.0, (0.0, f64::INFINITY));

    let total: Vec<_> = p.iter().map(|v| (*v, 1.0)).collect();
    lp.add_constraint(total.as_slice(), ComparisonOp::Eq, 1.0);
    for &((i, j), c) in targets {
        let mut row: Vec<_> = (0..atoms)
            .map(|k| (p[k], atom_value(k, i) * atom_value(k, j)))
            .collect();
        row.push((t, -1.0));
        lp.add_constraint(row.as_slice(), ComparisonOp::Le, c);
        row.last_mut().expect("t column").1 = 1.0;
        lp.add_constraint(row.as_slice(), ComparisonOp::Ge, c);
    }
    // t = 2 with any distribution satisfies every row, so the LP is feasible
    let solution = lp.solve().expect("correlation fit LP is always feasible");
    let witness: Vec<f64> = p.iter().map(|v| solution[*v].max(0.0)).collect();
    let max_violation = solution[t].max(0.0);
    FeasibilityResult {
        feasible: max_violation <= FEASIBILITY_TOLERANCE,
        witness,
        max_violation,
    }
}

/// Whether three ±1 variables `x, y, z` admit a joint distribution with
/// the given pairwise correlations.
pub fn feasible_triple(c_xy: f64, c_xz: f64, c_yz: f64) -> FeasibilityResult {
    fit_distribution(3, &[((0, 1), c_xy), ((0, 2), c_xz), ((1, 2), c_yz)])
}

/// Whether four ±1 variables `x, y, w, z` (indices 0..4) admit a joint
/// distribution with the CHSH correlations `⟨x,y⟩, ⟨x,z⟩, ⟨w,y⟩, ⟨w,z⟩`.
pub fn feasible_chsh(c1: f64, c2: f64, c3: f64, c4: f64) -> FeasibilityResult {
    fit_distribution(4, &[((0, 1), c1), ((0, 3), c2), ((2, 1), c3), ((2, 3), c4)])
}

// ── Falsification search ────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InequalityVersion {
    V3,
    V4,
}

impl fmt::Display for InequalityVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InequalityVersion::V3 => "V3",
            InequalityVersion::V4 => "V4",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchConstraint {
    None,
    /// Only configurations with `E ⊥ E'`.
    OrthogonalSameSide,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub grid_step: f64,
    /// Subdivisions of one grid step used by the local refinement pass.
    pub refine: u32,
    pub constraint: SearchConstraint,
}

impl SearchOptions {
    pub fn new(grid_step: f64) -> Self {
        Self {
            grid_step,
            refine: 10,
            constraint: SearchConstraint::None,
        }
    }

    pub fn orthogonal(mut self) -> Self {
        self.constraint = SearchConstraint::OrthogonalSameSide;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InequalityReport {
    V3(V3Report),
    V4(V4Report),
}

impl InequalityReport {
    pub fn excess(&self) -> f64 {
        match self {
            InequalityReport::V3(r) => r.excess(),
            InequalityReport::V4(r) => r.excess(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBest {
    pub axes: AxisConfig,
    /// V3: `−slack`; V4: `S − 2`.
    pub violation: f64,
    pub report: InequalityReport,
    pub evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SearchOutcome {
    Found(SearchBest),
    Empty { reason: String },
}

/// Values of the correlations an inequality needs, or the first symbol that
/// has no usable value.
fn usable(h: &HypothesisSet, axes: &AxisConfig, symbols: &[CorrelationSymbol]) -> std::result::Result<[f64; 4], CorrelationSymbol> {
    let mut out = [0.0; 4];
    for (slot, sym) in out.iter_mut().zip(symbols) {
        *slot = status(h, axes, *sym)
            .ok()
            .and_then(|s| s.status.usable_value())
            .ok_or(*sym)?;
    }
    Ok(out)
}

const V3_SYMBOLS: [CorrelationSymbol; 3] = [
    CorrelationSymbol::EP,
    CorrelationSymbol::EEPrime,
    CorrelationSymbol::EPrimeP,
];

const V4_SYMBOLS: [CorrelationSymbol; 4] = [
    CorrelationSymbol::EP,
    CorrelationSymbol::EPPrime,
    CorrelationSymbol::EPrimeP,
    CorrelationSymbol::EPrimePPrime,
];

/// Evaluates one inequality with values supplied by the definability engine.
pub fn evaluate_under(
    version: InequalityVersion,
    h: &HypothesisSet,
    axes: &AxisConfig,
) -> std::result::Result<InequalityReport, CorrelationSymbol> {
    let report = match version {
        InequalityVersion::V3 => {
            let [ep, ee, pe, _] = usable(h, axes, &V3_SYMBOLS)?;
            InequalityReport::V3(eval_v3(ep, ee, pe).expect("engine values lie in [-1, 1]"))
        }
        InequalityVersion::V4 => {
            let [c1, c2, c3, c4] = usable(h, axes, &V4_SYMBOLS)?;
            InequalityReport::V4(eval_v4(c1, c2, c3, c4).expect("engine values lie in [-1, 1]"))
        }
    };
    Ok(report)
}

/// Free angles of a candidate, before fixing the reference axis at zero.
fn config_from(version: InequalityVersion, free: &[f64], constraint: SearchConstraint) -> AxisConfig {
    match version {
        // P is the reference; free = [θE, θE' or branch sign]
        InequalityVersion::V3 => {
            let e_prime = match constraint {
                SearchConstraint::None => free[1],
                SearchConstraint::OrthogonalSameSide => free[0] + free[1] * std::f64::consts::FRAC_PI_2,
            };
            AxisConfig::v3(0.0, free[0], e_prime)
        }
        // P' is the reference; free = [θE, θE', θP]
        InequalityVersion::V4 => {
            let e_prime = match constraint {
                SearchConstraint::None => free[1],
                SearchConstraint::OrthogonalSameSide => free[0] + free[1] * std::f64::consts::FRAC_PI_2,
            };
            AxisConfig::v4(free[0], e_prime, free[2], 0.0)
        }
    }
}

/// Searches a grid of axis configurations for the largest violation of
/// `version`, using only correlation values the hypotheses make available.
///
/// Every value the engine produces depends on angle differences only, so
/// one axis (`P` for V3, `P'` for V4) is pinned at zero. The best grid
/// point is then refined on a grid `refine` times finer within one step.
/// Ties keep the first configuration in enumeration order.
pub fn falsification_search(version: InequalityVersion, h: &HypothesisSet, opts: &SearchOptions) -> SearchOutcome {
    let needed: &[CorrelationSymbol] = match version {
        InequalityVersion::V3 => &V3_SYMBOLS,
        InequalityVersion::V4 => &V4_SYMBOLS,
    };
    if let Some(sym) = needed.iter().find(|s| undefined_under(h, **s)) {
        return SearchOutcome::Empty {
            reason: format!("{sym} undefined under {h}"),
        };
    }

    let k = ((std::f64::consts::TAU / opts.grid_step).round() as usize).max(1);
    let grid = |i: usize| Angle::new(i as f64 * opts.grid_step).radians();
    let orth = opts.constraint == SearchConstraint::OrthogonalSameSide;
    // dimension sizes: θE, then θE' (or the ±π/2 branch), then θP for V4
    let second = if orth { 2 } else { k };
    let dims: Vec<usize> = match version {
        InequalityVersion::V3 => vec![k, second],
        InequalityVersion::V4 => vec![k, second, k],
    };
    let branch = |j: usize| if j == 0 { 1.0 } else { -1.0 };
    let point = |idx: &[usize]| -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(d, &i)| if d == 1 && orth { branch(i) } else { grid(i) })
            .collect()
    };

    type Best = Option<(f64, usize, InequalityReport)>;
    let better = |a: Best, b: Best| match (a, b) {
        (Some(x), Some(y)) => {
            if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
                Some(y)
            } else {
                Some(x)
            }
        }
        (x, None) => x,
        (None, y) => y,
    };

    let inner: usize = dims[1..].iter().product();
    let (best, first_undefined) = (0..dims[0])
        .into_par_iter()
        .map(|i0| {
            let mut best: Best = None;
            let mut undefined: Option<CorrelationSymbol> = None;
            let mut idx = vec![i0; dims.len()];
            for r in 0..inner {
                let mut rem = r;
                for d in (1..dims.len()).rev() {
                    idx[d] = rem % dims[d];
                    rem /= dims[d];
                }
                let axes = config_from(version, &point(&idx), opts.constraint);
                match evaluate_under(version, h, &axes) {
                    Ok(rep) => best = better(best, Some((rep.excess(), i0 * inner + r, rep))),
                    Err(sym) => {
                        undefined.get_or_insert(sym);
                    }
                }
            }
            (best, undefined)
        })
        .reduce(|| (None, None), |a, b| (better(a.0, b.0), a.1.or(b.1)));

    let Some((_, linear, _)) = best else {
        let reason = match first_undefined {
            Some(sym) => format!("{sym} undefined under {h}"),
            None => "empty search grid".to_string(),
        };
        return SearchOutcome::Empty { reason };
    };

    // decode the winning grid point and refine around its continuous angles
    let mut idx = vec![0; dims.len()];
    let mut rem = linear;
    for d in (0..dims.len()).rev() {
        idx[d] = rem % dims[d];
        rem /= dims[d];
    }
    let centre = point(&idx);
    let mut best_axes = config_from(version, &centre, opts.constraint);
    let mut best_report = evaluate_under(version, h, &best_axes).expect("grid winner is defined");
    let mut evaluated = dims.iter().product::<usize>();

    let fine = opts.grid_step / f64::from(opts.refine.max(1));
    let span = opts.refine as i64;
    let free_dims: Vec<usize> = (0..dims.len()).filter(|d| !(orth && *d == 1)).collect();
    let steps = (2 * span + 1) as usize;
    let total = steps.pow(free_dims.len() as u32);
    for r in 0..total {
        let mut rem = r;
        let mut cand = centre.clone();
        for &d in &free_dims {
            let off = (rem % steps) as i64 - span;
            rem /= steps;
            cand[d] += off as f64 * fine;
        }
        let axes = config_from(version, &cand, opts.constraint);
        evaluated += 1;
        if let Ok(rep) = evaluate_under(version, h, &axes) {
            if rep.excess() > best_report.excess() {
                best_report = rep;
                best_axes = axes;
            }
        }
    }

    SearchOutcome::Found(SearchBest {
        axes: best_axes,
        violation: best_report.excess(),
        report: best_report,
        evaluated,
    })
}
