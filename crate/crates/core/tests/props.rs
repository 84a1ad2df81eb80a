//! Property-based invariants for the pipeline, classes, learners, and the
//! orientation solver.

use monotone_adversary::adversary::{run_adaptive, Adversary, Distribution, LabeledExample};
use monotone_adversary::domain::{
    build_class_majority_lb, build_class_majority_lb_rand, build_class_oig_lb, Domain, Hypothesis,
    HypothesisClass, Point,
};
use monotone_adversary::experiments::{pair_class_predict_prob, pair_counts};
use monotone_adversary::learners::{
    consistent_set, is_consistent, scheme_hanneke, scheme_majority_of_three,
};
use monotone_adversary::oig::{
    min_max_out_degree_orientation, optimal_orientation_stats, predict_prob_one, Edge,
    OneInclusionGraph, OrientationRule,
};
use monotone_adversary::pattern::BitPattern;
use monotone_adversary::transcript;
use proptest::prelude::*;

fn arb_class() -> impl Strategy<Value = HypothesisClass> {
    prop_oneof![
        (1usize..8).prop_map(|p| build_class_oig_lb(p).unwrap()),
        (1usize..3, 0usize..4)
            .prop_map(|(d, extra)| build_class_majority_lb(d + 1 + extra, d).unwrap()),
        (1usize..2, 0usize..3, 1usize..4).prop_map(|(d, extra, k)| {
            build_class_majority_lb_rand(d + 1 + extra, d, k).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projections_are_realized_and_bounded(class in arb_class(), ids in proptest::collection::vec(0usize..100, 1..7), seed in 0u64..1000) {
        let _ = seed;
        let domain = class.domain();
        let points: Vec<Point> = ids.iter().map(|&i| domain.point(i % domain.len())).collect();
        let patterns = class.project(&points).unwrap();
        prop_assert!(patterns.len() <= class.len());
        // the target's pattern is present, and every pattern is realized
        let target = class.target();
        let target_pattern = BitPattern::from_bits(
            &points.iter().map(|p| target.eval(p)).collect::<Vec<_>>(),
        );
        prop_assert!(patterns.binary_search(&target_pattern).is_ok());
        for pat in &patterns {
            let realized = class.iter().any(|h| {
                points.iter().enumerate().all(|(i, p)| h.eval(p) == pat.get(i))
            });
            prop_assert!(realized);
        }
    }

    #[test]
    fn pipeline_labels_are_monotone_and_shuffle_is_a_permutation(
        pairs in 2usize..10, n in 1usize..12, seed in 0u64..10_000, trial in 0u64..4
    ) {
        let class = build_class_oig_lb(pairs).unwrap();
        let dist = Distribution::uniform_x(class.domain());
        let t = run_adaptive(&dist, &class, &Adversary::Pairing, n, n, seed, trial).unwrap();
        let target = class.target();
        for ex in t.clean.iter().chain(&t.corrupted).chain(&t.shuffled) {
            prop_assert_eq!(ex.label, target.eval(&ex.point));
        }
        let mut sorted = t.permutation.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..2 * n).collect::<Vec<_>>());
        let combined: Vec<LabeledExample> =
            t.clean.iter().chain(&t.corrupted).copied().collect();
        for (i, &j) in t.permutation.iter().enumerate() {
            prop_assert_eq!(t.shuffled[i], combined[j]);
        }
    }

    #[test]
    fn transcript_roundtrips_and_audits_clean(
        pairs in 2usize..8, n in 1usize..8, seed in 0u64..1000
    ) {
        let class = build_class_oig_lb(pairs).unwrap();
        let dist = Distribution::uniform_x(class.domain());
        let t = run_adaptive(&dist, &class, &Adversary::Pairing, n, n, seed, 0).unwrap();
        let text = transcript::to_text(&t);
        let file = transcript::parse(&text).unwrap();
        prop_assert_eq!(file.n, n);
        prop_assert_eq!(file.m, n);
        prop_assert_eq!(file.seed, seed);
        prop_assert!(transcript::audit(&file).is_empty());
        prop_assert_eq!(transcript::to_text(&t), text);
    }

    #[test]
    fn consistent_set_equals_filtered_enumeration(
        class in arb_class(), ids in proptest::collection::vec(0usize..100, 0..6)
    ) {
        let domain = class.domain();
        // pipeline-shaped data: points labeled by the target
        let target = class.target();
        let data: Vec<LabeledExample> = ids
            .iter()
            .map(|&i| {
                let point = domain.point(i % domain.len());
                LabeledExample { point, label: target.eval(&point) }
            })
            .collect();
        let cs = consistent_set(&class, &data).unwrap();
        let brute: Vec<Hypothesis> =
            class.iter().filter(|h| is_consistent(h, &data)).collect();
        prop_assert_eq!(cs.count() as usize, brute.len());
        prop_assert_eq!(cs.iter().collect::<Vec<_>>(), brute);
    }

    #[test]
    fn schemes_partition_or_cover_valid_indices(n in 3usize..80) {
        for scheme in [scheme_majority_of_three(n).unwrap(), scheme_hanneke(n).unwrap()] {
            for list in &scheme.lists {
                prop_assert!(!list.is_empty());
                prop_assert!(list.iter().all(|&i| i < n));
                let mut v = list.clone();
                v.sort_unstable();
                v.dedup();
                prop_assert!(v.len() >= scheme.min_distinct);
            }
        }
        // the three contiguous blocks partition the index range
        let mot = scheme_majority_of_three(n).unwrap();
        let mut all: Vec<usize> = mot.lists.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn solver_matches_enumeration(
        nv in 2usize..7,
        picks in proptest::collection::vec(any::<bool>(), 21)
    ) {
        let possible: Vec<(usize, usize)> = (0..nv)
            .flat_map(|a| (a + 1..nv).map(move |b| (a, b)))
            .collect();
        let chosen: Vec<(usize, usize)> = possible
            .iter()
            .zip(&picks)
            .filter(|(_, &keep)| keep)
            .map(|(&e, _)| e)
            .collect();
        prop_assume!(!chosen.is_empty() && chosen.len() <= 10);
        let graph = abstract_graph(&chosen, nv);
        let solved = min_max_out_degree_orientation(&graph);
        let stats = optimal_orientation_stats(&graph).unwrap();
        prop_assert_eq!(solved.max_out_degree, stats.tau);
    }

    #[test]
    fn pair_fast_path_agrees_with_graph_predictor(
        pairs in 2usize..6,
        ids in proptest::collection::vec(0usize..100, 0..8)
    ) {
        let class = build_class_oig_lb(pairs).unwrap();
        let domain = class.domain();
        let train: Vec<LabeledExample> = ids
            .iter()
            .map(|&i| LabeledExample { point: domain.point(i % domain.len()), label: false })
            .collect();
        let pc = pair_counts(pairs, &train).unwrap();
        for i in 0..pairs {
            for rule in [OrientationRule::MinMax, OrientationRule::UniformOptimal] {
                let fast = pair_class_predict_prob(&pc, i, rule);
                let generic = predict_prob_one(&class, &train, &domain.point(i), rule).unwrap();
                prop_assert!((fast - generic).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn orientation_respects_vc_bound_on_random_explicit_classes(
        n in 2usize..7,
        masks in proptest::collection::vec(0usize..128, 1..10),
        ids in proptest::collection::vec(0usize..100, 1..6)
    ) {
        let domain = Domain::new(n, 0, 0);
        let mut hyps = vec![Hypothesis::AllZero];
        let mut seen = std::collections::HashSet::new();
        seen.insert(0usize);
        for &m in &masks {
            let m = m & ((1 << n) - 1);
            if seen.insert(m) {
                let bits: Vec<bool> = (0..n).map(|i| m >> i & 1 == 1).collect();
                hyps.push(Hypothesis::Explicit { labels: BitPattern::from_bits(&bits) });
            }
        }
        let class = HypothesisClass::from_explicit(domain, hyps, 0).unwrap();
        let vc = class.vc_dimension(n).value();
        let points: Vec<Point> = ids.iter().map(|&i| domain.point(i % n)).collect();
        let graph = monotone_adversary::oig::build_oig(&class, &points).unwrap();
        let o = min_max_out_degree_orientation(&graph);
        prop_assert!(o.max_out_degree <= vc, "tau {} > vc {}", o.max_out_degree, vc);
    }
}

fn abstract_graph(edges_in: &[(usize, usize)], nv: usize) -> OneInclusionGraph {
    let mut edges: Vec<Edge> = edges_in
        .iter()
        .map(|&(a, b)| Edge { a, b, coord: 0 })
        .collect();
    edges.sort_by_key(|e| (e.a, e.b));
    let mut adjacency = vec![Vec::new(); nv];
    for (i, e) in edges.iter().enumerate() {
        adjacency[e.a].push(i);
        adjacency[e.b].push(i);
    }
    OneInclusionGraph {
        vertices: (0..nv)
            .map(|i| {
                let bits: Vec<bool> = (0..nv).map(|j| j == i).collect();
                BitPattern::from_bits(&bits)
            })
            .collect(),
        edges,
        adjacency,
    }
}
