//! Bounded-colouring lower bounds on Kneser graphs as the class-size cap
//! tightens, next to the counting bound and the exact value.
//!
//!     cargo run --release --example kneser_bounds

use bcsdp::graph::{counting_bound, gen_kneser, TimetablingInstance};
use bcsdp::oracle::exact_bounded_chromatic;
use bcsdp::relax::build_bounded;
use bcsdp::solver::{extract_bound, solve, SolverConfig};

fn main() -> bcsdp::Result<()> {
    let cfg = SolverConfig::default();
    println!(
        "{:<8} {:>3} {:>9} {:>9} {:>8} {:>5}",
        "graph", "m", "sdp", "certified", "counting", "exact"
    );
    for (n, largest) in [(5usize, 4usize), (6, 5), (7, 6)] {
        let g = gen_kneser(n, 2)?;
        for m in (largest.saturating_sub(3).max(1)..=largest).rev() {
            let (model, sem) = build_bounded(&g, m)?;
            let (bound, certified) = extract_bound(&solve(&model, &sem, &cfg)?)?;
            let exact = exact_bounded_chromatic(&TimetablingInstance::bounded(g.clone(), m), None)?;
            println!(
                "{:<8} {m:>3} {bound:>9.3} {certified:>9} {:>8} {:>5}",
                format!("K({n},2)"),
                counting_bound(g.n(), m),
                exact.chi_m.map_or("?".into(), |c| c.to_string()),
            );
        }
    }
    Ok(())
}
