//! The exact branch-and-bound oracle and the sandwich chain
//! clique <= theta <= bounded SDP <= chi^m <= greedy.

use std::time::Duration;

use bcsdp::graph::{gen_gnp, gen_kneser, TimetablingInstance};
use bcsdp::oracle::{exact_bounded_chromatic, max_clique, sandwich_check, unbounded_class_size};
use bcsdp::solver::SolverConfig;

fn main() -> bcsdp::Result<()> {
    let petersen = gen_kneser(5, 2)?;
    println!("Petersen maximum clique: {:?}", max_clique(&petersen));
    for m in 1..=4 {
        let res = exact_bounded_chromatic(&TimetablingInstance::bounded(petersen.clone(), m), None)?;
        println!(
            "  chi^{m} = {:?} after {} nodes, witness {:?}",
            res.chi_m,
            res.nodes_explored,
            res.witness.map(|w| w.classes)
        );
    }
    let (chi, c) = unbounded_class_size(&petersen, None)?;
    println!("  chromatic number {chi}, largest class of the optimum found {c}");

    let cfg = SolverConfig::default();
    println!("sandwich on G(12, 0.5):");
    for seed in 0..4 {
        let g = gen_gnp(12, 0.5, seed)?;
        let s = sandwich_check(&g, 3, &cfg, Some(Duration::from_secs(10)))?;
        println!(
            "  seed {seed}: {} <= {:.3} <= {:.3} <= {} <= {}   counting {} certified {}   {}",
            s.clique,
            s.theta,
            s.bounded_sdp,
            s.chi_m,
            s.greedy,
            s.counting,
            s.certified,
            if s.passed { "ok" } else { "VIOLATED" }
        );
    }
    Ok(())
}
