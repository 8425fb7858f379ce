use bcclace::bootstrap::{g1_bound, g2_bound, g3_bound};
use bcclace::checks::{check_green_lower, GridAxis, GridSpec, MinMargin};
use bcclace::diagrams::{
    bubble_bound, triangle_bound, weighted_bubble_bound, DiagramBoundSet, DiagramIndex, DiagramKind, BUBBLE_INDICES,
    TRIANGLE_INDICES, WEIGHTED_INDICES,
};
use bcclace::lace::{totals, LaceBoundReport};
use bcclace::rw::{eps1, eps2, return_prob};
use bcclace::sim::{run_trial, simulate, simulate_range, SimConfig, SimCounts, Trial};
use bcclace::{build_table, verify, BootstrapConstants, Dimension, Mode, Policy, RwTable, Verdict};
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::OnceLock;

fn dim(d: u32) -> Dimension {
    Dimension::new(d).unwrap()
}

fn tables() -> &'static [RwTable] {
    static T: OnceLock<Vec<RwTable>> = OnceLock::new();
    T.get_or_init(|| (5..=12).map(|d| build_table(dim(d), 2, 500, Policy::Fast).unwrap()).collect())
}

fn table(d: u32) -> &'static RwTable {
    &tables()[(d - 5) as usize]
}

fn constants() -> impl Strategy<Value = BootstrapConstants> {
    (1.0001f64..1.5, 1.0001f64..1.5, 1.0001f64..1.5).prop_map(|(a, b, c)| BootstrapConstants::new(a, b, c).unwrap())
}

#[test]
fn eps_monotone_in_dimension_and_truncation() {
    for policy in [Policy::Fast, Policy::Certified] {
        for nu in 1..=3 {
            let mut prev: Option<(f64, f64)> = None;
            for d in 5..=12 {
                let e1 = eps1(dim(d), nu, 500, policy).unwrap().value();
                let e2 = eps2(dim(d), nu, 500, policy).unwrap().value();
                assert!(e2 >= e1, "d={d} nu={nu}");
                if let Some((p1, p2)) = prev {
                    assert!(e1 <= p1 && e2 <= p2, "d={d} nu={nu}");
                }
                prev = Some((e1, e2));
            }
        }
        for d in [3, 5, 9] {
            let vals: Vec<f64> = [100, 200, 500, 1000].iter().map(|&n| eps1(dim(d), 1, n, policy).unwrap().value()).collect();
            assert!(vals.windows(2).all(|w| w[1] <= w[0]), "d={d}: {vals:?}");
        }
    }
}

#[test]
fn certified_partial_sums_stay_below_eps1() {
    for d in [3, 5, 9] {
        for nu in [1, 2, 7] {
            let bound = eps1(dim(d), nu, 500, Policy::Certified).unwrap().value();
            let mut s = 0.0;
            for n in nu as u64..nu as u64 + 499 {
                s += return_prob(dim(d), n, Policy::Fast).value();
                assert!(s <= bound, "d={d} nu={nu} n={n}");
            }
        }
    }
}

#[test]
fn weighted_tables_are_nonincreasing_in_nu() {
    for d in 5..=12 {
        let t = build_table(dim(d), 6, 500, Policy::Certified).unwrap();
        for nu in 1..6 {
            assert!(t.eps1(nu + 1).unwrap().value() <= t.eps1(nu).unwrap().value());
            assert!(t.eps2(nu + 1).unwrap().value() <= t.eps2(nu).unwrap().value());
        }
    }
}

#[test]
fn diagram_bounds_shrink_with_dimension() {
    let k = BootstrapConstants::reference();
    for d in 5..12 {
        let lo = DiagramBoundSet::evaluate(&k, table(d + 1)).unwrap();
        let hi = DiagramBoundSet::evaluate(&k, table(d)).unwrap();
        for ((kind, idx, a), (_, _, b)) in lo.entries().zip(hi.entries()) {
            assert!(a.value() <= b.value(), "d={d} {kind:?} {idx}");
        }
    }
}

#[test]
fn pass_is_inherited_by_larger_dimensions() {
    let k = BootstrapConstants::reference();
    for d in 9..12 {
        let here = verify(dim(d), &k, Mode::Chained, Policy::Certified).unwrap();
        let next = verify(dim(d + 1), &k, Mode::Chained, Policy::Certified).unwrap();
        assert_eq!(here.verdict, Verdict::Pass);
        assert_eq!(next.verdict, Verdict::Pass);
        for (a, b) in here.g().iter().zip(next.g()) {
            assert!(b.value() <= a.value());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn return_prob_below_stirling(d in 3u32..=12, n in 1u64..=2000) {
        let p = return_prob(dim(d), n, Policy::Certified).value();
        prop_assert!(p <= (PI * n as f64).powf(-(d as f64) / 2.0));
    }

    #[test]
    fn bubble_and_triangle_depend_on_order_only(k in constants(), d in 5u32..=12) {
        let rw = table(d);
        let at = |l, r| (
            bubble_bound(DiagramIndex::new(l, r), &k, rw).unwrap().value(),
            triangle_bound(DiagramIndex::new(l, r), &k, rw).unwrap().value(),
        );
        let (b13, t13) = at(1, 3);
        prop_assert_eq!(at(2, 2), (b13, t13));
        prop_assert_eq!(at(3, 1).1, t13);
        prop_assert_eq!(at(1, 2).0, at(2, 1).0);
    }

    #[test]
    fn bounds_increase_in_each_constant(k in constants(), which in 0usize..3, bump in 1.001f64..1.1) {
        let rw = table(9);
        let mut arr = k.as_array();
        arr[which] *= bump;
        let up = BootstrapConstants::new(arr[0], arr[1], arr[2]).unwrap();
        for &idx in &BUBBLE_INDICES {
            let (a, b) = (bubble_bound(idx, &k, rw).unwrap().value(), bubble_bound(idx, &up, rw).unwrap().value());
            if which == 2 { prop_assert_eq!(a, b) } else { prop_assert!(b > a) }
        }
        for &idx in &TRIANGLE_INDICES {
            let (a, b) = (triangle_bound(idx, &k, rw).unwrap().value(), triangle_bound(idx, &up, rw).unwrap().value());
            if which == 2 { prop_assert_eq!(a, b) } else { prop_assert!(b > a) }
        }
        for &idx in &WEIGHTED_INDICES {
            let a = weighted_bubble_bound(idx, &k, rw).unwrap().value();
            let b = weighted_bubble_bound(idx, &up, rw).unwrap().value();
            prop_assert!(b > a);
        }
    }

    #[test]
    fn lace_totals_monotone_in_inputs(k in constants(), slot in 0usize..19, bump in 1.0f64..1.5) {
        let base = DiagramBoundSet::evaluate(&k, table(9)).unwrap();
        let mut i = 0;
        let bumped = DiagramBoundSet::from_fn(base.d, base.constants, base.policy, |kind, idx| {
            let v = base.value(kind, idx).unwrap();
            i += 1;
            if i - 1 == slot { v * bump } else { v }
        });
        let (a, b) = (totals(&base), totals(&bumped));
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!(b.pi_even.value() >= a.pi_even.value());
            prop_assert!(b.pi_odd.value() >= a.pi_odd.value());
            prop_assert!(b.pi_t.value() >= a.pi_t.value());
            prop_assert!(b.pi_cos.value() >= a.pi_cos.value());
        }
    }

    #[test]
    fn zero_inputs_give_the_unperturbed_bounds(k in constants()) {
        let r = LaceBoundReport::from_totals(0.0, 0.0, 0.0, 0.0, 0.0, Policy::Certified);
        let g2 = g2_bound(&r, &k);
        prop_assert_eq!(g1_bound(&r).value(), 1.0);
        prop_assert_eq!(g2.value(), 1.0);
        let g3 = g3_bound(&r, g2, &k).value();
        let k1sq = bcclace::Interval::point(k.k1) * bcclace::Interval::point(k.k1);
        prop_assert!(g3 >= k.k1 * k.k1 && g3 <= k1sq.hi);
    }

    #[test]
    fn verdict_matches_strict_comparison(k in constants(), d in 8u32..=11) {
        let r = verify(dim(d), &k, Mode::Chained, Policy::Certified).unwrap();
        let again = verify(dim(d), &k, Mode::Chained, Policy::Certified).unwrap();
        prop_assert_eq!(&r, &again);
        let g = r.g();
        let strict = g[0].value() < k.k1 && g[1].value() < k.k2 && g[2].value() < k.k3;
        prop_assert_eq!(r.verdict == Verdict::Pass, strict);
        let fast = verify(dim(d), &k, Mode::Chained, Policy::Fast).unwrap();
        for (f, c) in fast.g().iter().zip(g) {
            prop_assert!(f.value() <= c.value());
        }
    }

    #[test]
    fn check_pass_iff_margin_within_tolerance(n in 2u32..12, tol in 0.0f64..1e-3) {
        let axes = vec![
            GridAxis { lo: 0.0, hi: 1.0, n },
            GridAxis { lo: 0.0, hi: 1.0, n },
            GridAxis { lo: 0.0, hi: PI, n },
        ];
        let r = check_green_lower(GridSpec::new(axes, tol).unwrap()).unwrap();
        prop_assert_eq!(r.points_checked, (n as u64).pow(3));
        prop_assert_eq!(r.pass, r.min_margin >= -tol);
    }

    #[test]
    fn min_margin_merge_is_order_independent(ms in proptest::collection::vec(-1.0f64..1.0, 1..60), cut in 0usize..60) {
        let cut = cut.min(ms.len());
        let mut whole = MinMargin::EMPTY;
        for (i, &m) in ms.iter().enumerate() {
            whole.observe(i as u64, m);
        }
        let (mut a, mut b) = (MinMargin::EMPTY, MinMargin::EMPTY);
        for (i, &m) in ms.iter().enumerate() {
            if i < cut { a.observe(i as u64, m) } else { b.observe(i as u64, m) }
        }
        prop_assert_eq!(a.merge(b), whole);
        prop_assert_eq!(b.merge(a), whole);
    }

    #[test]
    fn simulation_estimates_are_probabilities(d in 1u32..=3, q in 0.0f64..=1.0, seed in any::<u64>()) {
        let cfg = SimConfig::from_bond_probability(dim(d), q, 4, 64, seed).unwrap();
        let st = simulate(&cfg).unwrap();
        for (_, _, e) in st.two_point_entries() {
            prop_assert!((0.0..=1.0).contains(&e.mean));
        }
        for t in 0..=4 {
            prop_assert!((0.0..=1.0).contains(&st.survival(t).unwrap().mean));
        }
        prop_assert!(st.chi_trunc().mean >= 1.0);
    }

    #[test]
    fn coupled_clusters_are_nested(q in 0.0f64..0.9, dq in 0.0f64..0.1, seed in any::<u64>(), trial in any::<u32>()) {
        let lo = SimConfig::from_bond_probability(dim(2), q, 5, 1, seed).unwrap();
        let hi = SimConfig::from_bond_probability(dim(2), q + dq, 5, 1, seed).unwrap();
        let (Trial::Complete(a), Trial::Complete(b)) = (run_trial(&lo, trial as u64).unwrap(), run_trial(&hi, trial as u64).unwrap()) else {
            unreachable!()
        };
        for (la, lb) in a.iter().zip(&b) {
            prop_assert!(la.iter().all(|i| lb.binary_search(i).is_ok()));
        }
    }

    #[test]
    fn counts_merge_in_any_split(cuts in proptest::collection::vec(0u64..200, 0..5), seed in any::<u64>()) {
        let cfg = SimConfig::from_bond_probability(dim(2), 0.45, 4, 200, seed).unwrap();
        let mut cuts = cuts;
        cuts.push(0);
        cuts.push(200);
        cuts.sort_unstable();
        let whole = simulate_range(&cfg, 0..200).unwrap();
        let merged = cuts
            .windows(2)
            .rev()
            .map(|w| simulate_range(&cfg, w[0]..w[1]).unwrap())
            .fold(SimCounts::empty(2, 4), |acc, c| acc.merge(&c));
        prop_assert_eq!(whole, merged);
    }
}

#[test]
fn every_kind_is_covered_by_the_set() {
    let set = DiagramBoundSet::evaluate(&BootstrapConstants::reference(), table(9)).unwrap();
    assert_eq!(set.entries().count(), 19);
    assert!(set.value(DiagramKind::Bubble, DiagramIndex::new(3, 1)).is_none());
}
