use bellbench::inequalities::{falsification_search, InequalityVersion, SearchOptions, SearchOutcome};
use bellbench::primitives::AxisConfig;
use bellbench::relativity::{
    definable_correlations, undefined_under, CorrelationSymbol, Hypothesis, HypothesisSet, Status,
};
use std::f64::consts::{FRAC_PI_2, PI};

use CorrelationSymbol::*;

fn all_sets() -> impl Iterator<Item = HypothesisSet> {
    let optional = [Hypothesis::WeakRealism, Hypothesis::Locality, Hypothesis::Eacp, Hypothesis::FreeWill];
    (0..16u32).map(move |mask| {
        let flags: Vec<_> = (0..4).filter(|i| mask >> i & 1 == 1).map(|i| optional[i]).collect();
        HypothesisSet::from_flags(&flags)
    })
}

/// 10 × 10 grid over (θE, offset of E' from E); P and P' follow with the
/// same offset so both same-side pairs hit orthogonality at ±π/2.
fn grid() -> impl Iterator<Item = AxisConfig> {
    const OFFSETS: [f64; 10] = [-3.0, -2.2, -FRAC_PI_2, -1.0, -0.3, 0.0, 0.4, FRAC_PI_2, 1.3, PI];
    (0..10).flat_map(|i| {
        OFFSETS.into_iter().map(move |off| {
            let e = -PI + (i as f64 + 0.5) * PI / 5.0;
            let p = 0.3 - e / 3.0;
            AxisConfig::v4(e, e + off, p, p + off)
        })
    })
}

/// Expected status kind per symbol, written from the rules directly.
fn expected(h: &HypothesisSet, axes: &AxisConfig, sym: CorrelationSymbol) -> (&'static str, Option<f64>) {
    let (a, b) = sym.axes();
    let delta = axes.get(a).unwrap().radians() - axes.get(b).unwrap().radians();
    let cross = if sym.is_same_side() { delta.cos() } else { -delta.cos() };
    let wr = h.contains(Hypothesis::WeakRealism);
    let loc = h.contains(Hypothesis::Locality);
    let eacp = loc || h.contains(Hypothesis::Eacp);
    let fwp = h.contains(Hypothesis::FreeWill);
    match sym {
        EP => ("defined", Some(cross)),
        _ if !wr => ("undefined", None),
        _ if loc => ("defined", Some(cross)),
        _ if !eacp => ("undefined", None),
        EPPrime | EPrimeP => ("defined", Some(cross)),
        EPrimePPrime => ("undefined", None),
        EEPrime | PPPrime => {
            if fwp && delta.cos().abs() <= 1e-9 {
                ("zero-by-no-correlation", Some(0.0))
            } else {
                ("bounded", None)
            }
        }
    }
}

#[test]
fn statuses_match_the_rule_table_on_the_grid() {
    let mut zero_seen = 0;
    for h in all_sets() {
        for axes in grid() {
            let got = definable_correlations(&h, &axes);
            assert_eq!(got.len(), 6);
            for s in got {
                let (kind, value) = expected(&h, &axes, s.symbol);
                assert_eq!(s.status.name(), kind, "{h} {} at {axes:?}", s.symbol);
                if let Some(v) = value {
                    assert!((s.status.usable_value().unwrap() - v).abs() < 1e-12);
                }
                if kind == "zero-by-no-correlation" {
                    zero_seen += 1;
                }
            }
        }
    }
    assert!(zero_seen > 0, "grid never exercised the orthogonal gate");
}

#[test]
fn e_prime_p_prime_undefined_without_locality() {
    for h in all_sets().filter(|h| !h.contains(Hypothesis::Locality)) {
        for axes in grid() {
            let s = definable_correlations(&h, &axes);
            let epp = s.iter().find(|s| s.symbol == EPrimePPrime).unwrap();
            assert_eq!(epp.status, Status::Undefined, "{h}");
        }
    }
}

#[test]
fn adding_locality_never_shrinks_the_defined_set() {
    for h in all_sets() {
        let with = h.with(Hypothesis::Locality);
        for axes in grid() {
            let before = definable_correlations(&h, &axes);
            let after = definable_correlations(&with, &axes);
            for (b, a) in before.iter().zip(&after) {
                if b.status.usable_value().is_some() {
                    assert!(a.status.usable_value().is_some(), "{h} → {with}: {}", b.symbol);
                }
            }
        }
    }
}

#[test]
fn v4_search_empty_whenever_locality_is_absent() {
    for h in all_sets().filter(|h| !h.contains(Hypothesis::Locality)) {
        let out = falsification_search(InequalityVersion::V4, &h, &SearchOptions::new(PI / 9.0));
        assert!(matches!(out, SearchOutcome::Empty { .. }), "{h}: {out:?}");
    }
}

#[test]
fn undefinedness_is_angle_independent() {
    for h in all_sets() {
        for sym in CorrelationSymbol::ALL {
            let everywhere = grid().all(|axes| {
                let s = definable_correlations(&h, &axes);
                s.iter().find(|s| s.symbol == sym).unwrap().status == Status::Undefined
            });
            assert_eq!(undefined_under(&h, sym), everywhere, "{h} {sym}");
        }
    }
}
