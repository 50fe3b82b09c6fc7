//! A small timetabling instance with room capacities and a projector
//! feature. The capacity rows and the feature rows each see a shortage that
//! the plain bounded relaxation misses; the room-assignment relaxation
//! models rooms explicitly.

use bcsdp::graph::{validate_partition, ConflictGraph, Partition, TimetablingInstance};
use bcsdp::relax::{build_bounded, build_laminar, build_room_assignment, LaminarOptions, RoomOptions};
use bcsdp::solver::{extract_bound, solve, SolverConfig};

fn main() -> bcsdp::Result<()> {
    // seven lectures with conflicts 0-1-2; one large room and two small
    // ones, only one of which has a projector
    let g = ConflictGraph::from_edges(7, [(0, 1), (1, 2)])?;
    let mut inst = TimetablingInstance::bounded(g.clone(), 3);
    inst.event_sizes = vec![80, 20, 90, 20, 70, 20, 20];
    inst.room_capacities = vec![100, 40, 40];
    inst.feature_count = 1;
    inst.event_features = [(1, 0), (3, 0), (5, 0), (6, 0)].into_iter().collect();
    inst.room_features = [(1, 0)].into_iter().collect();
    inst.validate()?;

    let cfg = SolverConfig::default();
    let report = |label: &str, (model, sem)| -> bcsdp::Result<()> {
        let (value, certified) = extract_bound(&solve(&model, &sem, &cfg)?)?;
        println!("{label:<28} {value:>7.3}  -> at least {certified} periods");
        Ok(())
    };
    report("bounded (rooms ignored)", build_bounded(&g, 3)?)?;
    report(
        "laminar capacities",
        build_laminar(
            &inst,
            LaminarOptions {
                counting: true,
                ..Default::default()
            },
        )?,
    )?;
    report(
        "laminar capacities+features",
        build_laminar(
            &inst,
            LaminarOptions {
                counting: true,
                features: true,
                ..Default::default()
            },
        )?,
    )?;
    report(
        "room assignment",
        build_room_assignment(&inst, &RoomOptions::default())?,
    )?;

    // two projector lectures in one period cannot both get the projector
    let three = Partition::new(vec![vec![0, 3], vec![2, 5], vec![4, 6, 1]]);
    let check = validate_partition(&inst, &three);
    println!("three-period timetable valid: {}", check.ok());
    for v in &check.violations {
        println!("  {v:?}");
    }
    let four = Partition::new(vec![vec![0, 3], vec![2, 5], vec![4, 6], vec![1]]);
    println!("four-period timetable valid: {}", validate_partition(&inst, &four).ok());
    Ok(())
}
