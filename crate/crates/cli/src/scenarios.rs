use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::fmt;

use bellbench::inequalities::{
    eval_v3, eval_v4, falsification_search, feasible_chsh, feasible_triple, worst_v3_assignment, FeasibilityResult,
    InequalityVersion, SearchOptions, SearchOutcome, V3Report, V3RoleAssignment, V4Report,
};
use bellbench::primitives::{correlate, AxisConfig, AxisSymbol, Block, CorrelationEstimate};
use bellbench::quantum::estimate_pair_correlation;
use bellbench::realism::generate_block;
use bellbench::relativity::{
    boosted_order, find_observer, interval_type, no_correlation_check, status, CorrelationStatus, CorrelationSymbol,
    HypothesisSet, IntervalType, NoCorrelationReport, ObserverKind, Status, TimeOrder,
};
use serde::Serialize;

use crate::config::{ScenarioConfig, ScenarioName};
use crate::error::CliError;
use crate::sweep::{lhv_sweep, SweepReport};

pub const SCHEMA_VERSION: u32 = 1;

/// One output line. The CSV columns are exactly these fields.
///
/// * analytic rows: `status` is the definability status, `value` the value
///   when usable; `Bounded` rows carry their bounds in `lo`/`hi`.
/// * Monte Carlo rows: `status = "estimate"`, `lo`/`hi = mean ∓ 4/√n`.
/// * inequality rows: `status` is `violated` or `holds`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub scenario: ScenarioName,
    pub symbol: String,
    pub status: String,
    pub value: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub n: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub text: String,
    /// Names the argument the verdict rests on.
    pub tag: &'static str,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.text, self.tag)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObserverReport {
    pub interval: IntervalType,
    pub e_first_beta: Option<f64>,
    pub p_first_beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Report {
    V3 { source: &'static str, report: V3Report },
    V4 { source: &'static str, report: V4Report },
    Search { version: InequalityVersion, outcome: SearchOutcome },
    Feasibility { result: FeasibilityResult, worst_v3: Option<V3RoleAssignment> },
    NoCorrelation { report: NoCorrelationReport },
    Observer { report: ObserverReport },
    Sweep { report: SweepReport },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inputs {
    pub seed: u64,
    pub n_pairs: usize,
    pub angles: BTreeMap<AxisSymbol, f64>,
    pub model: String,
    pub hypotheses: HypothesisSet,
    pub grid_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub schema_version: u32,
    pub scenario: ScenarioName,
    pub inputs: Inputs,
    pub correlations: Vec<CorrelationStatus>,
    pub rows: Vec<Row>,
    pub reports: Vec<Report>,
    pub verdict: Verdict,
}

impl ScenarioResult {
    pub fn report<T>(&self, pick: impl Fn(&Report) -> Option<T>) -> Option<T> {
        self.reports.iter().find_map(pick)
    }
}

/// Writes `√2`, `2√2` and small integers symbolically, anything else to
/// four decimals.
pub fn pretty(x: f64) -> String {
    for (v, s) in [(SQRT_2, "√2"), (2.0 * SQRT_2, "2√2"), (1.0, "1"), (2.0, "2"), (0.0, "0")] {
        if (x - v).abs() < 1e-9 {
            return s.to_string();
        }
    }
    format!("{x:.4}")
}

struct Builder<'a> {
    cfg: &'a ScenarioConfig,
    correlations: Vec<CorrelationStatus>,
    rows: Vec<Row>,
    reports: Vec<Report>,
}

impl<'a> Builder<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Self {
        Builder {
            cfg,
            correlations: Vec::new(),
            rows: Vec::new(),
            reports: Vec::new(),
        }
    }

    fn row(&mut self, symbol: impl Into<String>, status: impl Into<String>) -> &mut Row {
        self.rows.push(Row {
            scenario: self.cfg.scenario,
            symbol: symbol.into(),
            status: status.into(),
            value: None,
            lo: None,
            hi: None,
            n: None,
            seed: None,
        });
        self.rows.last_mut().expect("just pushed")
    }

    /// Looks up each symbol in the definability engine and fails with exit
    /// code 3 if one has no usable value.
    fn usable(&mut self, symbols: &[CorrelationSymbol]) -> Result<Vec<f64>, CliError> {
        let mut values = Vec::with_capacity(symbols.len());
        for sym in symbols {
            let st = status(&self.cfg.hypotheses, &self.cfg.angles, *sym)?;
            let row = self.row(sym.to_string(), st.status.name());
            match st.status {
                Status::Bounded {
                    liminf_at_most,
                    limsup_at_least,
                } => {
                    row.lo = Some(liminf_at_most);
                    row.hi = Some(limsup_at_least);
                }
                s => row.value = s.usable_value(),
            }
            self.correlations.push(st);
            match st.status.usable_value() {
                Some(v) => values.push(v),
                None => {
                    return Err(CliError::Undefined {
                        scenario: self.cfg.scenario,
                        symbol: *sym,
                        status: st.status.name(),
                        hypotheses: self.cfg.hypotheses,
                    })
                }
            }
        }
        Ok(values)
    }

    fn estimate(&mut self, label: impl Into<String>, est: &CorrelationEstimate) {
        let seed = self.cfg.seed;
        let (mean, tol) = (est.mean(), est.tolerance());
        let row = self.row(label, "estimate");
        row.value = Some(mean);
        row.lo = Some(mean - tol);
        row.hi = Some(mean + tol);
        row.n = Some(est.n as u64);
        row.seed = Some(seed);
    }

    fn inequality(&mut self, label: &str, violated: bool, value: f64) {
        self.row(label, if violated { "violated" } else { "holds" }).value = Some(value);
    }

    fn search(&mut self, version: InequalityVersion, opts: SearchOptions) {
        let outcome = falsification_search(version, &self.cfg.hypotheses, &opts);
        match &outcome {
            SearchOutcome::Found(best) => {
                self.row(format!("{version} search"), "found").value = Some(best.violation);
                for sym in AxisSymbol::ALL {
                    if let Some(a) = best.axes.get(sym) {
                        self.row(format!("{version} search θ{sym}"), "angle").value = Some(a.radians());
                    }
                }
            }
            SearchOutcome::Empty { reason } => {
                self.row(format!("{version} search"), format!("empty: {reason}"));
            }
        }
        self.reports.push(Report::Search { version, outcome });
    }

    fn finish(self, verdict: Verdict) -> ScenarioResult {
        let cfg = self.cfg;
        ScenarioResult {
            schema_version: SCHEMA_VERSION,
            scenario: cfg.scenario,
            inputs: Inputs {
                seed: cfg.seed,
                n_pairs: cfg.n_pairs,
                angles: cfg.angles.symbols().map(|s| (s, cfg.angles.get(s).expect("listed").radians())).collect(),
                model: cfg.model_spec.clone(),
                hypotheses: cfg.hypotheses,
                grid_step: cfg.grid_step,
            },
            correlations: self.correlations,
            rows: self.rows,
            reports: self.reports,
            verdict,
        }
    }
}

fn falsified(lhs: f64, rhs: f64, violated: bool, tag: &'static str) -> Verdict {
    let text = if violated {
        format!("{} ≤ {} FALSE — inequality falsified", pretty(lhs), pretty(rhs))
    } else {
        format!("{} ≤ {} holds — no falsification", pretty(lhs), pretty(rhs))
    };
    Verdict { text, tag }
}

const V3_SYMBOLS: [CorrelationSymbol; 3] = [
    CorrelationSymbol::EP,
    CorrelationSymbol::EEPrime,
    CorrelationSymbol::EPrimeP,
];

fn v3_axes(cfg: &ScenarioConfig) -> Result<AxisConfig, CliError> {
    let mut axes = AxisConfig::new();
    for s in [AxisSymbol::P, AxisSymbol::E, AxisSymbol::EPrime] {
        axes.set(s, cfg.angles.require(s)?);
    }
    Ok(axes)
}

/// V3 on `(⟨E,P⟩, ⟨E,E'⟩, ⟨P,E'⟩)` from the engine, plus a Monte Carlo
/// cross-check. Under Locality the cross-side terms are measured singlet
/// pairs; otherwise the configured model supplies all three sequences.
fn run_v3(cfg: &ScenarioConfig, tag: &'static str, measured_pairs: bool) -> Result<ScenarioResult, CliError> {
    let axes = v3_axes(cfg)?;
    let mut b = Builder::new(cfg);
    let c = b.usable(&V3_SYMBOLS)?;
    let report = eval_v3(c[0], c[1], c[2])?;
    b.inequality("V3 reduced lhs (≤ 1)", report.violated, report.reduced_lhs);
    b.reports.push(Report::V3 {
        source: "definability-engine",
        report,
    });

    let (ep, epp) = if measured_pairs {
        let th = |s| axes.require(s);
        let ep = estimate_pair_correlation(cfg.seed, 0, th(AxisSymbol::E)?, th(AxisSymbol::P)?, cfg.n_pairs);
        let epp = estimate_pair_correlation(cfg.seed, 1, th(AxisSymbol::EPrime)?, th(AxisSymbol::P)?, cfg.n_pairs);
        b.estimate("⟨E,P⟩ singlet", &ep);
        b.estimate("⟨E',P⟩ singlet", &epp);
        (ep, epp)
    } else {
        let block = generate_block(&cfg.model, &Block::new(axes, cfg.n_pairs, 0)?, cfg.seed)?;
        let g = |s| block.get(s);
        let ep = correlate(g(AxisSymbol::E)?, g(AxisSymbol::P)?)?;
        let epp = correlate(g(AxisSymbol::EPrime)?, g(AxisSymbol::P)?)?;
        let ee = correlate(g(AxisSymbol::E)?, g(AxisSymbol::EPrime)?)?;
        let model = cfg.model.name();
        b.estimate(format!("⟨E,P⟩ {model}"), &ep);
        b.estimate(format!("⟨E',P⟩ {model}"), &epp);
        b.estimate(format!("⟨E,E'⟩ {model}"), &ee);
        (ep, epp)
    };
    // the same-side term cannot be measured; keep the engine's value
    let mc = eval_v3(ep.mean(), c[1], epp.mean())?;
    b.inequality("V3 reduced lhs estimated", mc.violated, mc.reduced_lhs);
    b.reports.push(Report::V3 {
        source: "monte-carlo-cross-side",
        report: mc,
    });

    if let Some(step) = cfg.grid_step {
        let mut opts = SearchOptions::new(step);
        if !measured_pairs {
            opts = opts.orthogonal();
        }
        b.search(InequalityVersion::V3, opts);
    }
    Ok(b.finish(falsified(report.reduced_lhs, 1.0, report.violated, tag)))
}

fn run_v4(cfg: &ScenarioConfig) -> Result<ScenarioResult, CliError> {
    use CorrelationSymbol::*;
    let mut b = Builder::new(cfg);
    let c = b.usable(&[EP, EPPrime, EPrimeP, EPrimePPrime])?;
    let report = eval_v4(c[0], c[1], c[2], c[3])?;
    b.inequality("V4 S", report.violated, report.s);
    b.reports.push(Report::V4 {
        source: "definability-engine",
        report,
    });

    let th = |s| cfg.angles.require(s);
    let pairs = [
        (AxisSymbol::E, AxisSymbol::P),
        (AxisSymbol::E, AxisSymbol::PPrime),
        (AxisSymbol::EPrime, AxisSymbol::P),
        (AxisSymbol::EPrime, AxisSymbol::PPrime),
    ];
    let mut est = Vec::with_capacity(4);
    for (i, (a, p)) in pairs.into_iter().enumerate() {
        let e = estimate_pair_correlation(cfg.seed, i as u32, th(a)?, th(p)?, cfg.n_pairs);
        let sym = CorrelationSymbol::between(a, p).expect("cross-side pair");
        b.estimate(format!("{sym} singlet"), &e);
        est.push(e);
    }
    let mc = eval_v4(est[0].mean(), est[1].mean(), est[2].mean(), est[3].mean())?;
    let tol: f64 = est.iter().map(CorrelationEstimate::tolerance).sum();
    let row = b.row("V4 S estimated", if mc.violated { "violated" } else { "holds" });
    row.value = Some(mc.s);
    row.lo = Some(mc.s - tol);
    row.hi = Some(mc.s + tol);
    row.n = Some(cfg.n_pairs as u64);
    row.seed = Some(cfg.seed);
    b.reports.push(Report::V4 {
        source: "monte-carlo",
        report: mc,
    });

    if let Some(step) = cfg.grid_step {
        b.search(InequalityVersion::V4, SearchOptions::new(step));
    }
    Ok(b.finish(falsified(report.s, 2.0, report.violated, "chsh-under-locality")))
}

fn run_no_correlation(cfg: &ScenarioConfig) -> Result<ScenarioResult, CliError> {
    let th = |s| cfg.angles.require(s);
    let report = no_correlation_check(
        &cfg.model,
        th(AxisSymbol::E)?,
        th(AxisSymbol::EPrime)?,
        th(AxisSymbol::P)?,
        cfg.n_pairs,
        cfg.seed,
    )?;
    let mut b = Builder::new(cfg);
    b.estimate(format!("⟨E,E'⟩ {}", cfg.model.name()), &report.estimate);
    let seed = cfg.seed;
    for (label, v) in [
        ("partial-mean minimum", report.estimate.running_min_mean()),
        ("partial-mean maximum", report.estimate.running_max_mean()),
    ] {
        let row = b.row(label, "extremum");
        row.value = v;
        row.n = Some(report.estimate.n as u64);
        row.seed = Some(seed);
    }
    b.row("E ⊥ E'", if report.orthogonal { "yes" } else { "no" });
    b.reports.push(Report::NoCorrelation { report });

    let mut text = format!(
        "{}: ⟨E,E'⟩ = {:.4} ± {:.4}",
        report.verdict,
        report.mean,
        report.tolerance
    );
    if !report.orthogonal {
        text.push_str(" (axes not orthogonal: outside the lemma's hypothesis)");
    }
    Ok(b.finish(Verdict {
        text,
        tag: "no-correlation-lemma",
    }))
}

fn order_label(o: TimeOrder) -> &'static str {
    match o {
        TimeOrder::FirstBeforeSecond => "E first",
        TimeOrder::Simultaneous => "simultaneous",
        TimeOrder::SecondBeforeFirst => "P first",
    }
}

fn run_observer(cfg: &ScenarioConfig) -> Result<ScenarioResult, CliError> {
    let (e, p) = cfg.events;
    let mut b = Builder::new(cfg);
    let interval = interval_type(&e, &p);
    b.row("interval", format!("{interval:?}").to_lowercase());

    let mut betas = [None, None];
    for (slot, kind) in betas.iter_mut().zip([ObserverKind::EP, ObserverKind::PE]) {
        let label = match kind {
            ObserverKind::EP => "E-P observer β",
            ObserverKind::PE => "P-E observer β",
        };
        match find_observer(&e, &p, kind) {
            Ok(boost) => {
                b.row(label, order_label(boosted_order(&e, &p, &boost))).value = Some(boost.beta());
                *slot = Some(boost.beta());
            }
            Err(err) => {
                b.row(label, err.to_string());
            }
        }
    }
    b.reports.push(Report::Observer {
        report: ObserverReport {
            interval,
            e_first_beta: betas[0],
            p_first_beta: betas[1],
        },
    });
    let text = match betas {
        [Some(ep), Some(pe)] => format!("both orders realized: E-P observer β = {ep}, P-E observer β = {pe}"),
        _ => format!("{interval:?} separation: every observer sees the same time order").to_lowercase(),
    };
    Ok(b.finish(Verdict {
        text,
        tag: "x-y-observer",
    }))
}

fn atom_label(atom: usize, vars: usize) -> String {
    let signs: Vec<&str> = (0..vars).map(|j| if atom >> j & 1 == 1 { "-" } else { "+" }).collect();
    format!("atom({})", signs.join(","))
}

fn run_polytope(cfg: &ScenarioConfig) -> Result<ScenarioResult, CliError> {
    let t = &cfg.target;
    if let Some(bad) = t.iter().find(|c| !(-1.0..=1.0).contains(*c)) {
        return Err(CliError::Config(format!("target correlation {bad} is outside [-1, 1]")));
    }
    let (result, worst) = match t.len() {
        3 => (feasible_triple(t[0], t[1], t[2]), Some(worst_v3_assignment(t[0], t[1], t[2])?)),
        4 => (feasible_chsh(t[0], t[1], t[2], t[3]), None),
        n => return Err(CliError::Config(format!("target needs 3 or 4 correlations, got {n}"))),
    };
    let mut b = Builder::new(cfg);
    let labels: &[&str] = if t.len() == 3 {
        &["c_xy", "c_xz", "c_yz"]
    } else {
        &["c1", "c2", "c3", "c4"]
    };
    for (l, v) in labels.iter().zip(t) {
        b.row(*l, "target").value = Some(*v);
    }
    b.row("feasible", if result.feasible { "yes" } else { "no" }).value = Some(result.max_violation);
    let kind = if result.feasible { "witness" } else { "closest-fit" };
    for (k, p) in result.witness.iter().enumerate() {
        b.row(atom_label(k, t.len()), kind).value = Some(*p);
    }
    if let Some(w) = worst {
        b.inequality("worst V3 relabelling", w.report.violated, w.report.slack);
    }
    let text = if result.feasible {
        "inside the local polytope: a joint distribution reproduces the target".to_string()
    } else {
        format!(
            "outside the local polytope: no joint distribution, deviation ≥ {:.4}",
            result.max_violation
        )
    };
    b.reports.push(Report::Feasibility { result, worst_v3: worst });
    Ok(b.finish(Verdict {
        text,
        tag: "local-polytope",
    }))
}

fn run_sweep(cfg: &ScenarioConfig) -> Result<ScenarioResult, CliError> {
    let step = cfg.grid_step.expect("sweep has a default grid step");
    let report = lhv_sweep(cfg.seed, cfg.sweep_seeds, step, cfg.sweep_pairs, cfg.n_pairs)?;
    let mut b = Builder::new(cfg);
    for s in &report.seeds {
        let n = report.pairs as f64;
        let row = b.row("V3 min margin", if s.v3_violations == 0 { "holds" } else { "violated" });
        row.value = Some(s.min_v3_margin as f64 / n);
        row.n = Some(report.pairs as u64);
        row.seed = Some(s.seed);
        let row = b.row("V4 min margin", if s.v4_violating_pp == 0 { "holds" } else { "violated" });
        row.value = Some(s.min_v4_margin as f64 / n);
        row.n = Some(report.pairs as u64);
        row.seed = Some(s.seed);
    }
    let tol = 4.0 / (report.pairs as f64).sqrt();
    for p in &report.curve {
        let row = b.row(format!("⟨E,P⟩ Δ={:.6}", p.delta), "estimate");
        row.value = Some(p.estimate);
        row.lo = Some(p.estimate - tol);
        row.hi = Some(p.estimate + tol);
        row.n = Some(report.pairs as u64);
        row.seed = Some(cfg.seed);
    }
    for c in &report.two_point {
        let label = if c.same_side { "⟨E,E'⟩" } else { "⟨E,P⟩" };
        let row = b.row(
            format!("{label} Δ={:.6} check", c.delta),
            if c.within_tolerance { "within-tolerance" } else { "outside-tolerance" },
        );
        row.value = Some(c.mean);
        row.lo = Some(c.mean - c.tolerance);
        row.hi = Some(c.mean + c.tolerance);
        row.n = Some(c.n as u64);
        row.seed = Some(cfg.seed);
    }
    let violations = report.violations();
    let text = format!(
        "{} violations across {} seeds × {} angles ({} V3 and {} V4 configurations per seed)",
        violations,
        report.seeds.len(),
        report.grid_points,
        report.v3_configurations,
        report.v4_configurations
    );
    b.reports.push(Report::Sweep { report });
    Ok(b.finish(Verdict {
        text,
        tag: "bell-identity",
    }))
}

/// Runs the configured scenario.
pub fn run(cfg: &ScenarioConfig) -> Result<ScenarioResult, CliError> {
    match cfg.scenario {
        ScenarioName::V3Local => run_v3(cfg, "v3-under-locality", true),
        ScenarioName::V3Eacp => run_v3(cfg, "new-bell-theorem-v3", false),
        ScenarioName::V4Chsh => run_v4(cfg),
        ScenarioName::NoCorrelation => run_no_correlation(cfg),
        ScenarioName::ObserverOrder => run_observer(cfg),
        ScenarioName::Polytope => run_polytope(cfg),
        ScenarioName::LhvSweep => run_sweep(cfg),
    }
}
