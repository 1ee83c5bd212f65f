use proptest::prelude::*;

use probmethod::derandomize::{decode_conditional, DecodeObjective};
use probmethod::distribution::{expected_cut, expected_volume, rescale_to_target, CliqueLossParams};
use probmethod::graph::{cut_weight, volume};
use probmethod::solver::{solve_max_clique, CliqueConfig};
use probmethod::{Graph, NodeSet};

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        proptest::collection::vec(proptest::option::weighted(0.4, 0.05f64..=1.0), pairs).prop_map(move |ws| {
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if let Some(w) = ws[k] {
                        edges.push((i, j, w));
                    }
                    k += 1;
                }
            }
            Graph::from_edges(n, &edges).unwrap()
        })
    })
}

fn graph_and_p(max_n: usize) -> impl Strategy<Value = (Graph, Vec<f64>)> {
    graph_strategy(max_n).prop_flat_map(|g| {
        let n = g.node_count();
        (Just(g), proptest::collection::vec(0.0f64..=1.0, n))
    })
}

fn graph_and_mask(max_n: usize) -> impl Strategy<Value = (Graph, Vec<bool>)> {
    graph_strategy(max_n).prop_flat_map(|g| {
        let n = g.node_count();
        (Just(g), proptest::collection::vec(any::<bool>(), n))
    })
}

proptest! {
    #[test]
    fn cut_is_symmetric_under_complement((g, mask) in graph_and_mask(25)) {
        let s = NodeSet::from_mask(&g, mask);
        let c = s.complement(&g);
        prop_assert!((cut_weight(&g, &s) - cut_weight(&g, &c)).abs() < 1e-9);
    }

    #[test]
    fn volumes_of_complements_add_up((g, mask) in graph_and_mask(25)) {
        let s = NodeSet::from_mask(&g, mask);
        let total: f64 = g.degrees().iter().sum();
        prop_assert!((volume(&g, &s) + volume(&g, &s.complement(&g)) - total).abs() < 1e-9);
        prop_assert!((total - 2.0 * g.total_weight()).abs() < 1e-9);
    }

    #[test]
    fn expected_cut_is_symmetric_under_flip((g, p) in graph_and_p(25)) {
        let flipped: Vec<f64> = p.iter().map(|q| 1.0 - q).collect();
        prop_assert!((expected_cut(&g, &p) - expected_cut(&g, &flipped)).abs() < 1e-9);
    }

    #[test]
    fn rescale_reaches_reachable_targets(
        (p0, a, frac) in (1usize..40).prop_flat_map(|n| (
            proptest::collection::vec(0.001f64..=1.0, n),
            proptest::collection::vec(0.0f64..5.0, n),
            0.001f64..=1.0,
        ))
    ) {
        let total: f64 = a.iter().sum();
        prop_assume!(total > 1e-6);
        let b = frac * total;
        let r = rescale_to_target(&p0, &a, b).unwrap();
        let reached: f64 = a.iter().zip(r.p.iter()).map(|(x, q)| x * q).sum();
        prop_assert!(r.reached);
        prop_assert!((reached - b).abs() <= 1e-9 * b);
        prop_assert!(r.iterations <= p0.len());
        for w in r.saturated.windows(2) {
            prop_assert!(w[0].iter().all(|i| w[1].contains(i)));
        }
    }

    #[test]
    fn rescaled_volume_matches_degree_target((g, p) in graph_and_p(20), frac in 0.05f64..0.95) {
        let total: f64 = g.degrees().iter().sum();
        prop_assume!(total > 0.0 && p.iter().zip(g.degrees()).any(|(q, d)| *q > 0.0 && *d > 0.0));
        let r = rescale_to_target(&p, g.degrees(), frac * total).unwrap();
        prop_assume!(r.reached);
        prop_assert!((expected_volume(&g, &r.p) - frac * total).abs() <= 1e-9 * total);
    }

    #[test]
    fn conditional_trace_never_increases(
        (g, p) in graph_and_p(20),
        beta in 0.1f64..10.0,
        gamma_frac in 0.05f64..=1.0,
        cut in any::<bool>(),
    ) {
        let objective = if cut {
            DecodeObjective::Cut
        } else {
            DecodeObjective::clique(&CliqueLossParams::new(beta, gamma_frac * beta).unwrap())
        };
        let (set, trace) = decode_conditional(&g, &p, objective).unwrap();
        let mut prev = trace.initial;
        for &v in &trace.expectation_path {
            prop_assert!(v <= prev + 1e-9);
            prev = v;
        }
        prop_assert!(objective.value_on(&g, &set) <= trace.initial + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn more_restarts_never_hurt(g in graph_strategy(18), restarts in 1usize..4, extra in 1usize..4, seed in any::<u64>()) {
        let base = CliqueConfig { restarts, steps: 40, seed, ..CliqueConfig::default() };
        let more = CliqueConfig { restarts: restarts + extra, ..base };
        let a = solve_max_clique(&g, &base, None).unwrap();
        let b = solve_max_clique(&g, &more, None).unwrap();
        prop_assert!(b.objective >= a.objective - 1e-12);
    }
}
