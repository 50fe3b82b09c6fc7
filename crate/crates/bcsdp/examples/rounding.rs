//! Upper bounds from the relaxation: KMS hyperplane rounding, iterative
//! eigenvalue rounding and a DSATUR baseline on seeded random graphs, with
//! the certified lower bound and the exact value for comparison.

use bcsdp::graph::{gen_gnp, validate_partition, TimetablingInstance};
use bcsdp::oracle::exact_bounded_chromatic;
use bcsdp::relax::build_bounded;
use bcsdp::rounding::{colouring_block, greedy_colouring, iterative_round, kms_round, RoundingConfig};
use bcsdp::solver::{extract_bound, solve, SolverConfig};

fn main() -> bcsdp::Result<()> {
    let solver = SolverConfig::default();
    let rounding = RoundingConfig::default();
    let (n, m) = (16, 3);
    println!("G({n}, 0.5), m = {m}");
    println!(
        "{:>4} {:>9} {:>5} {:>4} {:>9} {:>6}",
        "seed", "certified", "exact", "kms", "iterative", "greedy"
    );
    for seed in 0..5 {
        let g = gen_gnp(n, 0.5, seed)?;
        let inst = TimetablingInstance::bounded(g.clone(), m);
        let (model, sem) = build_bounded(&g, m)?;
        let result = solve(&model, &sem, &solver)?;
        let (_, certified) = extract_bound(&result)?;

        let kms = kms_round(&colouring_block(&result.x, &sem, n)?, &inst, &rounding)?;
        let (iterative, diag) = iterative_round(&inst, &rounding, &solver)?;
        let greedy = greedy_colouring(&inst, seed)?;
        for part in [&kms, &iterative, &greedy] {
            assert!(validate_partition(&inst, part).ok());
        }
        let exact = exact_bounded_chromatic(&inst, None)?.chi_m.expect("small instance");
        println!(
            "{seed:>4} {certified:>9} {exact:>5} {:>4} {:>9} {:>6}   ({} rounds, {} forced)",
            kms.len(),
            iterative.len(),
            greedy.len(),
            diag.rounds,
            diag.forced
        );
    }
    Ok(())
}
