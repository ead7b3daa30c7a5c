mod common;

use common::{random_constraint_set, random_event, random_system};
use iqp_core::credal::{
    cross_time_pairs, feasibility, lower_upper, qtr_constraints, sample_vertices, sset_family,
    BoundsStatus, FeasibilityCertificate, RuleTag,
};
use iqp_core::events::{combine, EventOp};
use iqp_core::typicality::{branch_stats, branch_stats_given, cross_time_bound, mutual_typicality, relative_distance};
use iqp_core::{
    born_constraints, parse_event, parse_expr, sset_event, Branch, Event, EventExpr, QuantumSystem,
    Region, SSet, TrajectoryMeasure, TrajectorySpace,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small_system(seed: u64) -> QuantumSystem {
    let mut r = rng(seed);
    let m = r.random_range(2..=3);
    let n = r.random_range(1..=3);
    random_system(m, n, &mut r)
}

fn expr(m: usize, n: usize) -> impl Strategy<Value = EventExpr> {
    let atom = (0..n, proptest::collection::btree_set(0..m, 0..=m))
        .prop_map(|(time, labels)| EventExpr::Atom { time, labels: labels.into_iter().collect() });
    atom.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(EventExpr::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| EventExpr::and(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| EventExpr::or(a, b)),
        ]
    })
}

fn random_measure(space: &TrajectorySpace, r: &mut ChaCha8Rng) -> TrajectoryMeasure {
    let raw: Vec<f64> = (0..space.size()).map(|_| r.random_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    TrajectoryMeasure::new(raw.into_iter().map(|x| x / total).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn de_morgan_holds_bitwise(seed: u64) {
        let mut r = rng(seed);
        let sp = TrajectorySpace::new(3, 3, 1000).unwrap();
        let a = random_event(&sp, &mut r);
        let b = random_event(&sp, &mut r);
        let lhs = combine(&combine(&a, &b, EventOp::Or).unwrap(), &a, EventOp::Not).unwrap();
        let rhs = a.complement().intersection(&b.complement()).unwrap();
        prop_assert_eq!(&lhs, &rhs);
        let lhs = a.intersection(&b).unwrap().complement();
        prop_assert_eq!(lhs, a.complement().union(&b.complement()).unwrap());
    }

    #[test]
    fn sset_event_cardinality(m in 1usize..4, n in 1usize..4, seed: u64) {
        let mut r = rng(seed);
        let sp = TrajectorySpace::new(m, n, 1000).unwrap();
        let t = r.random_range(0..n);
        let mask: Vec<bool> = (0..m).map(|_| r.random_bool(0.5)).collect();
        let region = Region::from_mask(mask);
        let e = sset_event(&sp, &SSet::new(t, region.clone())).unwrap();
        prop_assert_eq!(e.cardinality(), region.cardinality() * m.pow(n as u32 - 1));
    }

    #[test]
    fn printed_expressions_parse_back(e in expr(3, 3)) {
        let sp = TrajectorySpace::new(3, 3, 1000).unwrap();
        let text = e.to_string();
        let back = parse_expr(&text).unwrap();
        prop_assert_eq!(back.to_string(), text.clone());
        prop_assert_eq!(parse_event(&text, &sp).unwrap(), e.evaluate(&sp).unwrap());
    }

    #[test]
    fn probability_is_additive_on_disjoint_events(seed: u64) {
        let mut r = rng(seed);
        let sp = TrajectorySpace::new(2, 4, 1000).unwrap();
        let p = random_measure(&sp, &mut r);
        let a = random_event(&sp, &mut r);
        let b = random_event(&sp, &mut r).intersection(&a.complement()).unwrap();
        let lhs = p.probability(&a.union(&b).unwrap()).unwrap();
        let rhs = p.probability(&a).unwrap() + p.probability(&b).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
        prop_assert!((p.probability(&Event::full(&sp)).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn evolution_is_unitary_and_weights_partition(seed: u64) {
        let sys = small_system(seed);
        let m = sys.m();
        for t in 0..sys.n_times() {
            prop_assert!((sys.evolve(t).unwrap().norm() - 1.0).abs() <= 1e-9);
            let singletons: f64 = (0..m)
                .map(|l| sys.weight(&SSet::new(t, Region::singleton(m, l).unwrap())).unwrap())
                .sum();
            prop_assert!((singletons - 1.0).abs() <= 1e-9);
            for region in Region::proper_regions(m, m) {
                let s = SSet::new(t, region);
                let w = sys.weight(&s).unwrap() + sys.weight(&s.complement()).unwrap();
                prop_assert!((w - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn distance_identities(seed: u64) {
        let sys = small_system(seed);
        let m = sys.m();
        let all: Vec<SSet> = (0..sys.n_times())
            .flat_map(|t| Region::proper_regions(m, m).into_iter().map(move |r| SSet::new(t, r)))
            .collect();
        for s1 in &all {
            prop_assert_eq!(sys.sset_distance(s1, s1).unwrap(), 0.0);
            prop_assert!((sys.sequential_probability(std::slice::from_ref(s1)).unwrap() - sys.weight(s1).unwrap()).abs() <= 1e-12);
            for s2 in &all {
                let d12 = sys.sset_distance(s1, s2).unwrap();
                prop_assert_eq!(d12, sys.sset_distance(s2, s1).unwrap());
                let a = sys.sset_state(s1).unwrap();
                let b = sys.sset_state(s2).unwrap();
                let inner = a.amplitudes.dotc(&b.amplitudes);
                let expanded = a.weight + b.weight - 2.0 * inner.re;
                prop_assert!((d12 - expanded).abs() <= 1e-12, "{} vs {}", d12, expanded);
            }
        }
    }

    #[test]
    fn lower_upper_axioms(seed: u64) {
        let mut r = rng(seed);
        let sys = small_system(seed ^ 0x5eed);
        let cs = random_constraint_set(&sys, &mut r);
        let full = Event::full(&cs.space);
        let whole = lower_upper(&cs, &full).unwrap();
        prop_assume!(whole.status == BoundsStatus::Solved);
        prop_assert!((whole.lower - 1.0).abs() <= 1e-9 && (whole.upper - 1.0).abs() <= 1e-9);
        let none = lower_upper(&cs, &Event::empty(&cs.space)).unwrap();
        prop_assert!(none.lower.abs() <= 1e-9 && none.upper.abs() <= 1e-9);

        let a = random_event(&cs.space, &mut r);
        let b = random_event(&cs.space, &mut r).intersection(&a.complement()).unwrap();
        let ab = a.union(&b).unwrap();
        let ba = lower_upper(&cs, &a).unwrap();
        let bb = lower_upper(&cs, &b).unwrap();
        let bab = lower_upper(&cs, &ab).unwrap();
        let bac = lower_upper(&cs, &a.complement()).unwrap();
        prop_assert!(-1e-9 <= ba.lower && ba.lower <= ba.upper + 1e-9 && ba.upper <= 1.0 + 1e-9);
        prop_assert!((ba.lower + bac.upper - 1.0).abs() <= 1e-8);
        prop_assert!(bab.lower >= ba.lower + bb.lower - 1e-8);
        prop_assert!(bab.upper <= ba.upper + bb.upper + 1e-8);
        prop_assert!(ba.lower <= bab.lower + 1e-8 && ba.upper <= bab.upper + 1e-8);
    }

    #[test]
    fn witnesses_satisfy_the_typicality_chain(seed: u64) {
        let mut r = rng(seed);
        let sys = small_system(seed ^ 0xc4a1);
        let cs = random_constraint_set(&sys, &mut r);
        let Ok(FeasibilityCertificate::Witness(p)) = feasibility(&cs) else {
            return Ok(());
        };
        let has_born = cs.rules.contains(&RuleTag::Born);
        prop_assert!(cs.max_violation(&p) <= 1e-9);
        for c in cs.constraints.iter().filter(|c| c.ssets.len() == 2) {
            let (s1, s2) = (&c.ssets[0], &c.ssets[1]);
            let e1 = sset_event(&cs.space, s1).unwrap();
            let e2 = sset_event(&cs.space, s2).unwrap();
            let p12 = p.probability(&e1.intersection(&e2).unwrap()).unwrap();
            let p1 = p.probability(&e1).unwrap();
            let pu = p.probability(&e1.union(&e2).unwrap()).unwrap();
            prop_assert!(c.rhs <= p12 + 1e-9 && p12 <= p1 + 1e-12 && p1 <= pu + 1e-12);
            let rel = relative_distance(&sys, s1, s2).unwrap();
            if has_born && c.tag == RuleTag::Qtr {
                if let Ok((_, ratio)) = mutual_typicality(&p, &e1, &e2, rel) {
                    prop_assert!(ratio >= 1.0 - rel - 1e-8, "ratio {} rel {}", ratio, rel);
                }
            }
        }
    }

    #[test]
    fn born_witnesses_meet_same_time_typicality(seed: u64) {
        let sys = small_system(seed);
        let sp = TrajectorySpace::of(&sys);
        let (m, n) = (sp.m(), sp.n());
        let cs = born_constraints(&sys, &sp, &sset_family(m, n, m - 1)).unwrap();
        let samples = sample_vertices(&cs, 4, seed).unwrap();
        let regions = Region::proper_regions(m, m);
        for p in &samples {
            for t in 0..n {
                for r1 in &regions {
                    for r2 in &regions {
                        let (s1, s2) = (SSet::new(t, r1.clone()), SSet::new(t, r2.clone()));
                        let (w1, w2) = (sys.weight(&s1).unwrap(), sys.weight(&s2).unwrap());
                        if (w1 - w2).abs() > 1e-9 {
                            continue;
                        }
                        let rhs = w1 - sys.sset_distance(&s1, &s2).unwrap();
                        let meet = sset_event(&sp, &s1).unwrap().intersection(&sset_event(&sp, &s2).unwrap()).unwrap();
                        prop_assert!(p.probability(&meet).unwrap() >= rhs - 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn cross_time_sandwich_on_witnesses(seed: u64) {
        let sys = small_system(seed ^ 0xabc);
        prop_assume!(sys.n_times() >= 2);
        let sp = TrajectorySpace::of(&sys);
        let (m, n) = (sp.m(), sp.n());
        let mut cs = born_constraints(&sys, &sp, &sset_family(m, n, m - 1)).unwrap();
        cs.extend(qtr_constraints(&sys, &sp, &cross_time_pairs(m, n, m - 1, None), 1e-9).unwrap()).unwrap();
        let Ok(samples) = sample_vertices(&cs, 3, seed) else { return Ok(()); };
        for c in cs.constraints.iter().filter(|c| c.tag == RuleTag::Qtr) {
            let (s1, s2) = (&c.ssets[0], &c.ssets[1]);
            for region in Region::proper_regions(m, m) {
                let s2p = SSet::new(s2.time, region);
                let (lo, hi) = cross_time_bound(&sys, s1, s2, &s2p, cs.tau_norm).unwrap();
                let e = sset_event(&sp, s1).unwrap().intersection(&sset_event(&sp, &s2p).unwrap()).unwrap();
                for p in &samples {
                    let v = p.probability(&e).unwrap();
                    prop_assert!(lo - 1e-8 <= v && v <= hi + 1e-8, "P = {} outside [{}, {}]", v, lo, hi);
                }
            }
        }
    }

    #[test]
    fn branch_statistics_invariants(seed: u64) {
        let mut r = rng(seed);
        let m = r.random_range(2..=3);
        let n = r.random_range(2..=4);
        let sp = TrajectorySpace::new(m, n, 1000).unwrap();
        let p = random_measure(&sp, &mut r);
        let ssets: Vec<SSet> = (0..n)
            .map(|t| SSet::new(t, Region::singleton(m, r.random_range(0..m)).unwrap()))
            .collect();
        let branch = Branch { ssets, epsilon: 0.0 };
        for i in 0..sp.size() {
            let y = branch.y(&sp, i);
            prop_assert!((0.0..=1.0).contains(&y));
            prop_assert_eq!(y * n as f64, branch.hits(&sp, i) as f64);
        }
        let delta = r.random_range(0.01..1.0);
        let st = branch_stats(&p, &branch, &sp, delta).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&st.expectation) && (0.0..=1.0 + 1e-12).contains(&st.tail));
        prop_assert!(st.expectation <= 1.0 - st.tail * delta + 1e-12);

        let full = branch_stats_given(&p, &branch, &sp, delta, &Event::full(&sp)).unwrap();
        let direct: f64 = (0..sp.size()).map(|i| p.probs()[i] * branch.y(&sp, i)).sum();
        prop_assert!((full.expectation - direct).abs() <= 1e-12);
    }
}
