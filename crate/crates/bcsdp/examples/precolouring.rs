//! Pre-assigned events and weighted vertices. A pre-colouring class is
//! contracted to one vertex whose weight is the class size; the weighted
//! relaxation of the contraction bounds the pre-coloured problem.

use bcsdp::graph::{ConflictGraph, TimetablingInstance};
use bcsdp::oracle::exact_bounded_chromatic;
use bcsdp::relax::{build_precoloured, build_weighted, reduce_precolouring};
use bcsdp::solver::{extract_bound, solve, SolverConfig};

fn main() -> bcsdp::Result<()> {
    let g = ConflictGraph::cycle(6)?;
    let m = 3;
    let pre = vec![vec![0, 3], vec![1]];
    let cfg = SolverConfig::default();

    let (model, sem) = build_precoloured(&g, m, &pre)?;
    let (direct, certified) = extract_bound(&solve(&model, &sem, &cfg)?)?;
    println!("pre-coloured relaxation: {direct:.4} (certified {certified})");

    let red = reduce_precolouring(&g, m, &pre)?;
    println!(
        "contracted to {} vertices with weights {:?}, map {:?}",
        red.graph.n(),
        red.weights,
        red.vertex_map
    );
    let (model, sem) = build_weighted(&red.graph, m, &red.weights)?;
    let (weighted, _) = extract_bound(&solve(&model, &sem, &cfg)?)?;
    println!("weighted relaxation of the contraction: {weighted:.4}");

    let mut inst = TimetablingInstance::bounded(g, m);
    inst.precolouring = pre;
    let exact = exact_bounded_chromatic(&inst, None)?;
    println!("exact: {:?} with {:?}", exact.chi_m, exact.witness.map(|w| w.classes));
    Ok(())
}
