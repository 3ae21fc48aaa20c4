//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use bellbench::inequalities::{
    eval_v3, eval_v4, falsification_search, feasible_triple, sica_v3_check, sica_v4_check, InequalityVersion,
    SearchOptions, SearchOutcome,
};
use bellbench::primitives::{correlate, Angle, AxisConfig, AxisSymbol, Block, Outcome, OutcomeSequence};
use bellbench::quantum::estimate_pair_correlation;
use bellbench::realism::{generate_block, CounterfactualModel};
use bellbench::relativity::{
    boosted_order, definable_correlations, find_observer, no_correlation_check, status, CorrelationSymbol,
    HypothesisSet, NoCorrelationVerdict, ObserverKind, SpacetimeEvent, Status, TimeOrder,
};
use bellbench::Error;
use bellbench_cli::{run, ScenarioConfig, ScenarioName};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 1_000_000;
const H: f64 = SQRT_2 / 2.0;

type CheckResult = Result<String, String>;
type Criterion = (&'static str, fn() -> CheckResult);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || format!("{name} = {got}, expected {want} ± {tol}"))
}

fn value(h: &HypothesisSet, axes: &AxisConfig, sym: CorrelationSymbol) -> Result<f64, String> {
    let s = status(h, axes, sym).map_err(|e| e.to_string())?;
    s.status.usable_value().ok_or_else(|| format!("{sym} is {}", s.status.name()))
}

fn criterion_1() -> CheckResult {
    let start = Instant::now();
    let h = HypothesisSet::eacp_free_will();
    let axes = AxisConfig::v3(0.0, 3.0 * FRAC_PI_4, -3.0 * FRAC_PI_4);
    let pe = value(&h, &axes, CorrelationSymbol::EP)?;
    let epp = value(&h, &axes, CorrelationSymbol::EPrimeP)?;
    let ee = value(&h, &axes, CorrelationSymbol::EEPrime)?;
    // oracle: −cos(0 − 3π/4) = −cos(3π/4) = √2/2 and cos(3π/2) = 0
    close("⟨P,E⟩", pe, H, 1e-12)?;
    close("⟨E',P⟩", epp, H, 1e-12)?;
    close("⟨E,E'⟩", ee, 0.0, 1e-12)?;
    let r = eval_v3(pe, ee, epp).map_err(|e| e.to_string())?;
    ensure(r.violated, || "V3 not violated".into())?;
    close("reduced lhs", r.reduced_lhs, SQRT_2, 1e-12)?;
    close("excess", r.excess(), SQRT_2 - 1.0, 1e-12)?;

    let block = generate_block(&CounterfactualModel::CollapseSequential, &Block::new(axes, N, 0).unwrap(), 2024)
        .map_err(|e| e.to_string())?;
    let g = |s| block.get(s).unwrap();
    let mc_pe = correlate(g(AxisSymbol::P), g(AxisSymbol::E)).unwrap().mean();
    let mc_pep = correlate(g(AxisSymbol::P), g(AxisSymbol::EPrime)).unwrap().mean();
    close("MC ⟨P,E⟩", mc_pe, H, 0.01)?;
    close("MC ⟨P,E'⟩", mc_pep, H, 0.01)?;

    let cli = run(&ScenarioConfig::for_scenario(ScenarioName::V3Eacp)).map_err(|e| e.to_string())?;
    ensure(cli.verdict.text == "√2 ≤ 1 FALSE — inequality falsified", || {
        format!("verdict `{}`", cli.verdict.text)
    })?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!(
        "triple ({pe:.6}, {epp:.6}, {ee:.6}), √2 ≤ 1 violated by {:.4}; MC ⟨P,E⟩={mc_pe:.4} ⟨P,E'⟩={mc_pep:.4}; {secs:.2} s",
        r.excess()
    ))
}

fn criterion_2() -> CheckResult {
    let h = HypothesisSet::local_realism();
    let (e, ep, p, pp) = (FRAC_PI_4, 3.0 * FRAC_PI_4, FRAC_PI_2, 0.0);
    let axes = AxisConfig::v4(e, ep, p, pp);
    use CorrelationSymbol::*;
    let c: Vec<f64> = [EP, EPPrime, EPrimeP, EPrimePPrime]
        .into_iter()
        .map(|s| value(&h, &axes, s))
        .collect::<Result<_, _>>()?;
    // oracle: direct −cos of the differences
    let want = [-(e - p).cos(), -(e - pp).cos(), -(ep - p).cos(), -(ep - pp).cos()];
    for (i, (g, w)) in c.iter().zip(want).enumerate() {
        close(&format!("c{}", i + 1), *g, w, 1e-12)?;
    }
    let r = eval_v4(c[0], c[1], c[2], c[3]).map_err(|e| e.to_string())?;
    close("S", r.s, 2.0 * SQRT_2, 1e-12)?;
    ensure(r.violated, || "S not > 2".into())?;

    let th = |x: f64| Angle::new(x);
    let mc: Vec<f64> = [(e, p), (e, pp), (ep, p), (ep, pp)]
        .into_iter()
        .enumerate()
        .map(|(i, (a, b))| estimate_pair_correlation(77, i as u32, th(a), th(b), N).mean())
        .collect();
    let s_mc = (mc[0] + mc[1]).abs() + (mc[2] - mc[3]).abs();
    close("MC S", s_mc, 2.0 * SQRT_2, 0.01)?;

    let SearchOutcome::Found(best) =
        falsification_search(InequalityVersion::V4, &h, &SearchOptions::new(PI / 180.0))
    else {
        return Err("V4 search found nothing under local realism".into());
    };
    close("search S − 2", best.violation, 2.0 * SQRT_2 - 2.0, 1e-6)?;
    Ok(format!("S = {:.12} analytic, {s_mc:.4} at N = 10⁶, grid search max {:.8}", r.s, best.violation + 2.0))
}

fn random_seq(rng: &mut ChaCha8Rng, n: usize) -> OutcomeSequence {
    OutcomeSequence::abstract_from(
        (0..n)
            .map(|_| if rng.gen::<bool>() { Outcome::Plus } else { Outcome::Minus })
            .collect(),
    )
}

fn criterion_3() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cases = 10_000;
    let mut failures = 0;
    for _ in 0..cases {
        let n = rng.gen_range(1..=256);
        let s: Vec<_> = (0..4).map(|_| random_seq(&mut rng, n)).collect();
        if !sica_v3_check(&s[0], &s[1], &s[2]).unwrap().holds() {
            failures += 1;
        }
        if !sica_v4_check(&s[0], &s[1], &s[2], &s[3]).unwrap().holds() {
            failures += 1;
        }
    }
    ensure(failures == 0, || format!("{failures} failures"))?;
    Ok(format!("{cases} triples and {cases} quadruples (N ≤ 256), 0 failures"))
}

fn criterion_4() -> CheckResult {
    let report = bellbench_cli::sweep::lhv_sweep(0, 10, PI / 90.0, 10_000, N).map_err(|e| e.to_string())?;
    ensure(report.grid_points == 180, || format!("{} grid points", report.grid_points))?;
    ensure(report.seeds.len() == 10, || "seed count".into())?;
    ensure(report.violations() == 0, || format!("{} violations", report.violations()))?;
    for s in &report.seeds {
        ensure(s.min_v3_margin >= 0 && s.min_v4_margin >= 0, || format!("negative margin for seed {}", s.seed))?;
    }
    let mut worst = 0.0f64;
    for c in &report.two_point {
        let shape = 1.0 - 2.0 * c.delta / PI;
        let want = if c.same_side { shape } else { -shape };
        let tol = 4.0 / (c.n as f64).sqrt();
        ensure(c.n == N, || "two-point N".into())?;
        close(&format!("Δ={:.4} same_side={}", c.delta, c.same_side), c.mean, want, tol)?;
        worst = worst.max((c.mean - want).abs());
    }
    Ok(format!(
        "0 violations over 10 seeds × 180 angles ({} V3 + {} V4 configurations each); two-point max deviation {worst:.4} ≤ 0.004",
        report.v3_configurations, report.v4_configurations
    ))
}

fn criterion_5() -> CheckResult {
    let lhv = no_correlation_check(
        &CounterfactualModel::LhvSign,
        Angle::new(3.0 * FRAC_PI_4),
        Angle::new(-3.0 * FRAC_PI_4),
        Angle::ZERO,
        N,
        5,
    )
    .map_err(|e| e.to_string())?;
    ensure(lhv.orthogonal, || "axes not orthogonal".into())?;
    close("LHV ⟨E,E'⟩", lhv.mean, 0.0, 0.01)?;
    ensure(lhv.estimate.extrema_straddle_zero(), || {
        format!(
            "extrema {:?}..{:?} do not straddle 0",
            lhv.estimate.running_min_mean(),
            lhv.estimate.running_max_mean()
        )
    })?;
    ensure(lhv.verdict == NoCorrelationVerdict::Consistent, || format!("LHV verdict {}", lhv.verdict))?;

    let col = no_correlation_check(
        &CounterfactualModel::CollapseSequential,
        Angle::new(3.0 * FRAC_PI_4),
        Angle::new(-3.0 * FRAC_PI_4),
        Angle::ZERO,
        N,
        5,
    )
    .map_err(|e| e.to_string())?;
    // oracle: cos(3π/4)·cos(−3π/4)
    close("collapse ⟨E,E'⟩", col.mean, (3.0 * FRAC_PI_4).cos() * (-3.0 * FRAC_PI_4).cos(), 0.01)?;
    ensure(col.verdict == NoCorrelationVerdict::WitnessOfEacpViolation, || {
        format!("collapse verdict {}", col.verdict)
    })?;
    Ok(format!(
        "LHV ⟨E,E'⟩ = {:.4}, partial means [{:.4}, {:.4}] CONSISTENT; collapse ⟨E,E'⟩ = {:.4} {}",
        lhv.mean,
        lhv.estimate.running_min_mean().unwrap(),
        lhv.estimate.running_max_mean().unwrap(),
        col.mean,
        col.verdict
    ))
}

fn in_tetrahedron(a: f64, b: f64, c: f64) -> Option<bool> {
    let l = [(1.0 + a + b + c), (1.0 + a - b - c), (1.0 - a + b - c), (1.0 - a - b + c)].map(|x| x / 4.0);
    let min = l.iter().copied().fold(f64::INFINITY, f64::min);
    (min.abs() > 1e-7).then_some(min > 0.0)
}

fn criterion_6() -> CheckResult {
    ensure(!feasible_triple(H, H, 0.0).feasible, || "(√2/2, √2/2, 0) reported feasible".into())?;
    let ok = feasible_triple(0.5, 0.5, 0.0);
    ensure(ok.feasible, || "(0.5, 0.5, 0) reported infeasible".into())?;
    ensure(ok.witness.iter().all(|p| *p >= 0.0), || "negative atom".into())?;
    close("Σ atoms", ok.witness.iter().sum(), 1.0, 1e-9)?;
    // recompute the witness correlations from the atoms directly
    let corr = |i: usize, j: usize| -> f64 {
        ok.witness
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let v = |b: usize| if k >> b & 1 == 1 { -1.0 } else { 1.0 };
                p * v(i) * v(j)
            })
            .sum()
    };
    close("witness ⟨x,y⟩", corr(0, 1), 0.5, 1e-9)?;
    close("witness ⟨x,z⟩", corr(0, 2), 0.5, 1e-9)?;
    close("witness ⟨y,z⟩", corr(1, 2), 0.0, 1e-9)?;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut compared, mut disagreements) = (0, 0);
    while compared < 1000 {
        let (a, b, c) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
        let Some(inside) = in_tetrahedron(a, b, c) else { continue };
        if feasible_triple(a, b, c).feasible != inside {
            disagreements += 1;
        }
        compared += 1;
    }
    ensure(disagreements == 0, || format!("{disagreements} disagreements with the hull oracle"))?;
    Ok("√2 triple infeasible, (0.5, 0.5, 0) feasible with valid witness, 1000/1000 hull-oracle agreements".into())
}

fn criterion_7() -> CheckResult {
    use CorrelationSymbol::*;
    let regimes = [
        ("QM", HypothesisSet::quantum_only()),
        ("WR+Locality", HypothesisSet::local_realism()),
        ("WR+EACP", HypothesisSet::eacp_realism()),
        ("WR+EACP+FWP", HypothesisSet::eacp_free_will()),
    ];
    let mut checked = 0;
    for i in 0..10 {
        for j in 0..10 {
            let e = -PI + (i as f64 + 0.5) * PI / 5.0;
            let off = if j == 0 { FRAC_PI_2 } else { j as f64 * 0.6 - 3.0 };
            let axes = AxisConfig::v4(e, e + off, 0.2 * e - 0.4, 0.2 * e - 0.4 + off);
            let orth = off.cos().abs() <= 1e-9;
            for (name, h) in &regimes {
                let defined: Vec<CorrelationSymbol> = definable_correlations(h, &axes)
                    .into_iter()
                    .filter(|s| matches!(s.status, Status::Defined { .. }))
                    .map(|s| s.symbol)
                    .collect();
                let undefined: Vec<CorrelationSymbol> = definable_correlations(h, &axes)
                    .into_iter()
                    .filter(|s| s.status == Status::Undefined)
                    .map(|s| s.symbol)
                    .collect();
                let (want_def, want_undef): (Vec<_>, Vec<_>) = match *name {
                    "QM" => (vec![EP], vec![EPPrime, EPrimeP, EPrimePPrime, EEPrime, PPPrime]),
                    "WR+Locality" => (CorrelationSymbol::ALL.to_vec(), vec![]),
                    _ => (vec![EP, EPPrime, EPrimeP], vec![EPrimePPrime]),
                };
                let mut d = defined.clone();
                let mut wd = want_def.clone();
                d.sort();
                wd.sort();
                let mut u = undefined.clone();
                let mut wu = want_undef.clone();
                u.sort();
                wu.sort();
                ensure(d == wd && u == wu, || format!("{name} at θE={e:.3} offset={off:.3}: defined {d:?} undefined {u:?}"))?;
                if *name == "WR+EACP+FWP" {
                    let ee = status(h, &axes, EEPrime).unwrap().status;
                    let want = if orth { Status::ZeroByNoCorrelation } else { ee };
                    ensure(ee == want && (orth || matches!(ee, Status::Bounded { .. })), || format!("⟨E,E'⟩ {ee:?}"))?;
                }
                checked += 1;
            }
        }
    }
    let out = falsification_search(InequalityVersion::V4, &HypothesisSet::eacp_realism(), &SearchOptions::new(PI / 180.0));
    let reason = match out {
        SearchOutcome::Empty { reason } => reason,
        SearchOutcome::Found(_) => return Err("V4 search found a configuration under EACP-only".into()),
    };
    ensure(reason.starts_with("⟨E',P'⟩ undefined"), || format!("reason `{reason}`"))?;
    Ok(format!("{checked} regime×grid cases match; V4 search empty: {reason}"))
}

fn criterion_8() -> CheckResult {
    let e = SpacetimeEvent::new(-1.0, 0.0);
    let p = SpacetimeEvent::new(1.0, 0.0);
    let ep = find_observer(&e, &p, ObserverKind::EP).map_err(|e| e.to_string())?;
    let pe = find_observer(&e, &p, ObserverKind::PE).map_err(|e| e.to_string())?;
    ensure(boosted_order(&e, &p, &ep) == TimeOrder::FirstBeforeSecond, || "E-P observer order".into())?;
    ensure(boosted_order(&e, &p, &pe) == TimeOrder::SecondBeforeFirst, || "P-E observer order".into())?;
    // oracle: t′ = γ(t − βx)
    let tprime = |ev: &SpacetimeEvent, beta: f64| (ev.t - beta * ev.x) / (1.0 - beta * beta).sqrt();
    ensure(tprime(&e, ep.beta()) < tprime(&p, ep.beta()), || "E-P arithmetic".into())?;
    ensure(tprime(&p, pe.beta()) < tprime(&e, pe.beta()), || "P-E arithmetic".into())?;
    close("E-P β", ep.beta(), -0.5, 1e-12)?;
    close("P-E β", pe.beta(), 0.5, 1e-12)?;
    let a = SpacetimeEvent::new(0.0, 0.0);
    let b = SpacetimeEvent::new(0.0, 1.0);
    ensure(find_observer(&a, &b, ObserverKind::EP) == Err(Error::NotSpacelike), || "timelike accepted".into())?;
    ensure(find_observer(&a, &b, ObserverKind::PE) == Err(Error::NotSpacelike), || "timelike accepted".into())?;
    Ok(format!("E-P observer β = {}, P-E observer β = {}; timelike pair rejected", ep.beta(), pe.beta()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("V3 falsification under {WR, EACP, FWP}", criterion_1),
        ("V4/CHSH falsification under {WR, Locality}", criterion_2),
        ("finite-N identity guarantee", criterion_3),
        ("LHV model never violates", criterion_4),
        ("no-correlation lemma check", criterion_5),
        ("feasibility solver", criterion_6),
        ("definability engine", criterion_7),
        ("observer construction", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {} PASS [{secs:.2} s] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL [{secs:.2} s] {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
