mod common;

use std::collections::BTreeSet;

use bcsdp::graph::{gen_gnp, validate_partition, ConflictGraph, Partition, TimetablingInstance};
use bcsdp::oracle::{clique_number, exact_bounded_chromatic, sandwich_check, unbounded_class_size};
use bcsdp::solver::SolverConfig;
use common::{brute_force_chi, for_each_partition, named_small_graphs};

/// Fewest classes over every partition accepted by the validator.
fn brute_force_instance(inst: &TimetablingInstance) -> Option<usize> {
    let mut best = None;
    for_each_partition(inst.n(), |assign, blocks| {
        if best.is_some_and(|b| b <= blocks) {
            return;
        }
        let mut classes = vec![Vec::new(); blocks];
        for (v, &b) in assign.iter().enumerate() {
            classes[b].push(v);
        }
        if validate_partition(inst, &Partition::new(classes)).ok() {
            best = Some(blocks);
        }
    });
    best
}

#[test]
fn matches_brute_force_on_named_graphs() {
    for (name, g) in named_small_graphs() {
        let chi = brute_force_chi(&g);
        for m in 1..=g.n() {
            let res = exact_bounded_chromatic(&TimetablingInstance::bounded(g.clone(), m), None).unwrap();
            assert_eq!(res.chi_m, Some(chi[m]), "{name} m={m}");
            let witness = res.witness.unwrap();
            assert_eq!(witness.len(), chi[m]);
            assert!(validate_partition(&TimetablingInstance::bounded(g.clone(), m), &witness).ok());
        }
    }
}

#[test]
fn matches_brute_force_on_random_graphs() {
    for seed in 0..30 {
        let g = gen_gnp(8, [0.2, 0.5, 0.8][seed as usize % 3], seed).unwrap();
        let chi = brute_force_chi(&g);
        for m in 1..=8 {
            let got = exact_bounded_chromatic(&TimetablingInstance::bounded(g.clone(), m), None).unwrap();
            assert_eq!(got.chi_m, Some(chi[m]), "seed {seed} m={m}");
        }
    }
}

#[test]
fn weighted_and_precoloured_instances() {
    for seed in 0..10 {
        let g = gen_gnp(7, 0.3, seed).unwrap();
        let mut inst = TimetablingInstance::bounded(g.clone(), 3);
        inst.weights = Some((0..7).map(|v| 1 + (v as u64 + seed) % 2).collect());
        inst.room_capacities = vec![1; 3];
        assert_eq!(
            exact_bounded_chromatic(&inst, None).unwrap().chi_m,
            brute_force_instance(&inst),
            "weighted seed {seed}"
        );

        let mut inst = TimetablingInstance::bounded(g, 3);
        inst.precolouring = vec![vec![0], vec![1]];
        let got = exact_bounded_chromatic(&inst, None).unwrap();
        assert_eq!(got.chi_m, brute_force_instance(&inst), "precoloured seed {seed}");
        assert!(validate_partition(&inst, &got.witness.unwrap()).ok());
    }
}

#[test]
fn rooms_and_features() {
    let g = ConflictGraph::from_edges(6, [(0, 1), (2, 3)]).unwrap();
    let mut inst = TimetablingInstance::bounded(g, 2);
    inst.event_sizes = vec![30, 10, 30, 10, 5, 30];
    inst.room_capacities = vec![40, 20];
    inst.feature_count = 1;
    inst.event_features = BTreeSet::from([(1, 0), (3, 0)]);
    inst.room_features = BTreeSet::from([(1, 0)]);
    inst.validate().unwrap();
    let got = exact_bounded_chromatic(&inst, None).unwrap();
    assert_eq!(got.chi_m, brute_force_instance(&inst));
    assert!(validate_partition(&inst, &got.witness.unwrap()).ok());
}

#[test]
fn clique_numbers() {
    assert_eq!(clique_number(&ConflictGraph::complete(6)), 6);
    assert_eq!(clique_number(&ConflictGraph::cycle(5).unwrap()), 2);
    assert_eq!(clique_number(&ConflictGraph::empty(4)), 1);
    for seed in 0..10 {
        let g = gen_gnp(9, 0.5, seed).unwrap();
        let mut best = 0;
        for mask in 0u32..1 << 9 {
            let set: Vec<usize> = (0..9).filter(|&v| mask >> v & 1 == 1).collect();
            if set
                .iter()
                .enumerate()
                .all(|(i, &u)| set[i + 1..].iter().all(|&v| g.has_edge(u, v)))
            {
                best = best.max(set.len());
            }
        }
        assert_eq!(clique_number(&g), best);
    }
}

#[test]
fn unbounded_witness_class() {
    let (chi, c) = unbounded_class_size(&ConflictGraph::complete(4), None).unwrap();
    assert_eq!((chi, c), (4, 1));
    let g = gen_gnp(8, 0.5, 4).unwrap();
    let (chi, c) = unbounded_class_size(&g, None).unwrap();
    assert_eq!(chi, brute_force_chi(&g)[8]);
    assert!(c >= 8usize.div_ceil(chi));
}

#[test]
fn sandwich_on_small_graphs() {
    let cfg = SolverConfig::default();
    for seed in 0..5 {
        let g = gen_gnp(10, 0.5, seed).unwrap();
        for m in [2, 3, 4] {
            let rep = sandwich_check(&g, m, &cfg, None).unwrap();
            assert!(rep.passed, "seed {seed} m={m}: {rep:?}");
        }
    }
}
