mod common;

use common::*;
use examm::codec;
use examm::data::{Normalization, TimeSeries};
use examm::experiment::{rank_experiments, ExperimentRecord, RankStatistic};
use examm::innovation::InnovationRegistry;
use examm::ops::{self, OpContext, OpsConfig};
use examm::trainer::{l2_norm, rescale_gradient};
use examm::CellKind;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn evolved(seed: u64, steps: usize) -> (examm::Genome, InnovationRegistry, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = OpsConfig { cell_kinds: CellKind::ALL.to_vec(), ..OpsConfig::default() };
    let inputs = names("x", 2);
    let mut reg = InnovationRegistry::new(2, 1);
    let s = ops::seed_genome(&inputs, &["y".to_string()], &mut reg, &mut rng);
    let mut g = evolve(&s, steps, 14, &mut rng, &mut reg, &config);
    jitter(&mut g, &mut rng);
    (g, reg, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn binary_round_trip_is_exact(seed in any::<u64>(), steps in 0usize..40, fitness in prop_oneof![Just(f64::INFINITY), 0.0f64..10.0]) {
        let (mut g, _, _) = evolved(seed, steps);
        g.fitness = fitness;
        let back = codec::deserialize(&codec::serialize(&g)).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(codec::serialize(&back), codec::serialize(&g));
    }

    #[test]
    fn json_round_trip_is_exact(seed in any::<u64>(), steps in 0usize..40) {
        let (g, _, _) = evolved(seed, steps);
        let back = codec::from_json(&codec::to_json(&g).unwrap()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn reachable_set_matches_closure(seed in any::<u64>(), kind in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_genome(&mut rng, CellKind::ALL[kind], 8, &[1, 3, 10]);
        let fast = g.reachable_set();
        let slow = brute_reach(&g);
        prop_assert_eq!(fast.nodes, slow.nodes);
        prop_assert_eq!(fast.edges, slow.edges);
        prop_assert_eq!(fast.rec_edges, slow.rec_edges);
    }

    #[test]
    fn evolved_genomes_stay_valid(seed in any::<u64>(), steps in 0usize..60) {
        let (g, _, _) = evolved(seed, steps);
        prop_assert!(g.validate().is_ok(), "{:?}", g.validate());
        prop_assert!(g.outputs_reachable());
    }

    #[test]
    fn crossover_child_is_valid_and_matches_oracle(seed in any::<u64>(), r in -0.5f64..1.5) {
        let (base, mut reg, mut rng) = evolved(seed, 10);
        let config = OpsConfig { cell_kinds: CellKind::ALL.to_vec(), ..OpsConfig::default() };
        let mut a = evolve(&base, 15, 14, &mut rng, &mut reg, &config);
        let mut b = evolve(&base, 15, 14, &mut rng, &mut reg, &config);
        jitter(&mut a, &mut rng);
        jitter(&mut b, &mut rng);
        let child = ops::crossover_with(&a, &b, |x, y| r * (y - x) + x);
        prop_assert!(child.validate().is_ok(), "{:?}", child.validate());
        prop_assert!(child.outputs_reachable());
        prop_assert_eq!(child, crossover_oracle(&a, &b, r));
    }

    #[test]
    fn crossover_weight_stays_on_the_extended_segment(seed in any::<u64>(), better in -5.0f64..5.0, worse in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = ops::crossover_weight(better, worse, &mut rng);
        let d = worse - better;
        let (lo, hi) = if d >= 0.0 { (better - 0.5 * d, better + 1.5 * d) } else { (better + 1.5 * d, better - 0.5 * d) };
        prop_assert!(w >= lo - 1e-12 && w <= hi + 1e-12);
    }

    #[test]
    fn mutation_never_touches_its_parent(seed in any::<u64>(), steps in 0usize..30) {
        let (g, mut reg, mut rng) = evolved(seed, steps);
        let before = g.clone();
        let config = OpsConfig { cell_kinds: CellKind::ALL.to_vec(), ..OpsConfig::default() };
        for kind in MUTATIONS {
            let mut ctx = OpContext { rng: &mut rng, registry: &mut reg, config: &config };
            let _ = ops::apply_mutation(kind, &g, &mut ctx);
        }
        prop_assert_eq!(g, before);
    }

    #[test]
    fn rescaled_norm_lands_in_band(v in prop::collection::vec(-100.0f64..100.0, 1..50), scale in -6i32..3) {
        let mut g: Vec<f64> = v.iter().map(|x| x * 10f64.powi(scale)).collect();
        prop_assume!(l2_norm(&g) > 0.0);
        rescale_gradient(&mut g, 1.0, 0.05);
        let n = l2_norm(&g);
        prop_assert!((0.05 - 1e-9..=1.0 + 1e-9).contains(&n));
    }

    #[test]
    fn normalization_inverts(rows in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 2), 2..30)) {
        let s = TimeSeries::new("s", vec!["a".into(), "b".into()], rows).unwrap();
        let norm = Normalization::fit([&s]).unwrap();
        let back = norm.invert(&norm.apply(&s).unwrap()).unwrap();
        for t in 0..s.len() {
            for c in 0..2 {
                prop_assert!((back.value(t, c) - s.value(t, c)).abs() <= 1e-9 * (1.0 + s.value(t, c).abs()));
            }
        }
    }

    #[test]
    fn ranking_ignores_per_fold_affine_rescaling(
        values in prop::collection::vec(0.01f64..10.0, 8),
        shift in -5.0f64..5.0,
        scale in 0.1f64..10.0,
    ) {
        let rec = |label: usize, fold: usize, v: f64| ExperimentRecord {
            label: format!("e{label}"),
            fold,
            repeat: 0,
            best_fitness: v,
            mean_island_best: v,
            genomes_trained: 0,
        };
        let base: Vec<_> = (0..8).map(|i| rec(i % 4, i / 4, values[i])).collect();
        let moved: Vec<_> = (0..8)
            .map(|i| rec(i % 4, i / 4, if i / 4 == 1 { values[i] * scale + shift } else { values[i] }))
            .collect();
        let mut a = rank_experiments(&base, RankStatistic::Best).unwrap();
        let mut b = rank_experiments(&moved, RankStatistic::Best).unwrap();
        a.sort_by(|x, y| x.label.cmp(&y.label));
        b.sort_by(|x, y| x.label.cmp(&y.label));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.score - y.score).abs() < 1e-6);
        }
        let total: f64 = a.iter().map(|r| r.score).sum();
        prop_assert!(total.abs() < 1e-9);
    }
}
