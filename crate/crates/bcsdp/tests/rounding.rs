use std::collections::BTreeSet;

use bcsdp::graph::{gen_gnp, validate_partition, ConflictGraph, TimetablingInstance};
use bcsdp::oracle::exact_bounded_chromatic;
use bcsdp::relax::{build_bounded, build_laminar, build_precoloured, build_weighted, LaminarOptions};
use bcsdp::rounding::{colouring_block, greedy_colouring, iterative_round, kms_round, RoundingConfig};
use bcsdp::solver::{solve, SolverConfig};

fn kms(
    inst: &TimetablingInstance,
    pair: (bcsdp::relax::SdpModel, bcsdp::relax::BoundSemantics),
) -> bcsdp::graph::Partition {
    let res = solve(&pair.0, &pair.1, &SolverConfig::default()).unwrap();
    let block = colouring_block(&res.x, &pair.1, inst.n()).unwrap();
    kms_round(&block, inst, &RoundingConfig::default()).unwrap()
}

#[test]
fn kms_is_valid_and_near_optimal_on_random_graphs() {
    for seed in 0..10 {
        let g = gen_gnp(14, 0.5, seed).unwrap();
        for m in [2, 3, 5] {
            let inst = TimetablingInstance::bounded(g.clone(), m);
            let part = kms(&inst, build_bounded(&g, m).unwrap());
            assert!(validate_partition(&inst, &part).ok(), "seed {seed} m={m}");
            let chi = exact_bounded_chromatic(&inst, None).unwrap().chi_m.unwrap();
            assert!(part.len() <= chi + 1, "seed {seed} m={m}: {} vs {chi}", part.len());
        }
    }
}

#[test]
fn kms_handles_weights_and_precolouring() {
    for seed in 0..5 {
        let g = gen_gnp(10, 0.3, seed).unwrap();
        let weights: Vec<u64> = (0..10).map(|v| 1 + (v % 3) as u64).collect();
        let mut inst = TimetablingInstance::bounded(g.clone(), 4);
        inst.weights = Some(weights.clone());
        let part = kms(&inst, build_weighted(&g, 4, &weights).unwrap());
        assert!(validate_partition(&inst, &part).ok(), "weighted seed {seed}");

        let partner = (1..10).find(|&v| !g.has_edge(0, v)).unwrap();
        let other = (1..10).find(|&v| v != partner).unwrap();
        let pre = vec![vec![0, partner], vec![other]];
        let mut inst = TimetablingInstance::bounded(g.clone(), 3);
        inst.precolouring = pre.clone();
        let part = kms(&inst, build_precoloured(&g, 3, &pre).unwrap());
        assert!(validate_partition(&inst, &part).ok(), "precoloured seed {seed}");
    }
}

#[test]
fn kms_respects_rooms_and_features() {
    let g = ConflictGraph::from_edges(8, [(0, 1), (2, 3), (4, 5), (6, 7), (1, 2)]).unwrap();
    let mut inst = TimetablingInstance::bounded(g, 3);
    inst.event_sizes = vec![60, 20, 60, 20, 15, 60, 20, 10];
    inst.room_capacities = vec![80, 30, 30];
    inst.feature_count = 1;
    inst.event_features = BTreeSet::from([(1, 0), (6, 0)]);
    inst.room_features = BTreeSet::from([(1, 0)]);
    inst.validate().unwrap();
    let opts = LaminarOptions {
        counting: true,
        features: true,
        ..LaminarOptions::default()
    };
    let part = kms(&inst, build_laminar(&inst, opts).unwrap());
    assert!(
        validate_partition(&inst, &part).ok(),
        "{:?}",
        validate_partition(&inst, &part)
    );
}

#[test]
fn iterative_rounding_is_valid() {
    let solver = SolverConfig::default();
    for seed in 0..4 {
        let g = gen_gnp(10, 0.5, seed).unwrap();
        let inst = TimetablingInstance::bounded(g, 3);
        let cfg = RoundingConfig {
            seed,
            ..RoundingConfig::default()
        };
        let (part, diag) = iterative_round(&inst, &cfg, &solver).unwrap();
        assert!(validate_partition(&inst, &part).ok(), "seed {seed}: {diag:?}");
    }
}

#[test]
fn greedy_is_valid_everywhere() {
    for seed in 0..20 {
        let g = gen_gnp(25, 0.4, seed).unwrap();
        for m in [1, 4, 25] {
            let inst = TimetablingInstance::bounded(g.clone(), m);
            let part = greedy_colouring(&inst, seed).unwrap();
            assert!(validate_partition(&inst, &part).ok());
        }
    }
}

#[test]
fn rounding_is_deterministic_per_seed() {
    let g = gen_gnp(12, 0.5, 1).unwrap();
    let inst = TimetablingInstance::bounded(g.clone(), 3);
    let a = kms(&inst, build_bounded(&g, 3).unwrap());
    let b = kms(&inst, build_bounded(&g, 3).unwrap());
    assert_eq!(a, b);
}
