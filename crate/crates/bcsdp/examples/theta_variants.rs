//! The three theta-type bounds and the unbounded colouring relaxation on a
//! few classic graphs. On C5 the Lovász value is √5.

use bcsdp::graph::{gen_kneser, ConflictGraph};
use bcsdp::oracle::clique_number;
use bcsdp::relax::{build_theta, build_unbounded, BoundedOptions, ThetaVariant};
use bcsdp::solver::{extract_bound, solve, SolverConfig};

fn main() -> bcsdp::Result<()> {
    let cfg = SolverConfig {
        eps: 1e-7,
        ..SolverConfig::default()
    };
    let graphs = [
        ("C5", ConflictGraph::cycle(5)?),
        ("C7", ConflictGraph::cycle(7)?),
        ("Petersen", gen_kneser(5, 2)?),
        ("K4", ConflictGraph::complete(4)),
    ];
    println!(
        "{:<9} {:>6} {:>8} {:>8} {:>8} {:>9}",
        "graph", "clique", "strict", "lovasz", "strong", "unbounded"
    );
    for (name, g) in graphs {
        let mut row = Vec::new();
        for variant in [ThetaVariant::Strict, ThetaVariant::Lovasz, ThetaVariant::Strong] {
            let (model, sem) = build_theta(&g, variant)?;
            row.push(extract_bound(&solve(&model, &sem, &cfg)?)?.0);
        }
        let (model, sem) = build_unbounded(&g, BoundedOptions::default())?;
        let unbounded = extract_bound(&solve(&model, &sem, &cfg)?)?.0;
        println!(
            "{name:<9} {:>6} {:>8.4} {:>8.4} {:>8.4} {unbounded:>9.4}",
            clique_number(&g),
            row[0],
            row[1],
            row[2]
        );
    }
    Ok(())
}
