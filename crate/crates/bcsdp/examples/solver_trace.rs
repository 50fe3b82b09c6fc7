//! Inside the solver: model size, structure tags that enable the closed-form
//! updates, residual history with a tight tolerance, and a warm start from an
//! optimal colouring.

use bcsdp::graph::{gen_kneser, TimetablingInstance};
use bcsdp::oracle::exact_bounded_chromatic;
use bcsdp::relax::{build_bounded, build_bounded_with, BoundedOptions, Transform};
use bcsdp::solver::{solve, SolverConfig};

fn main() -> bcsdp::Result<()> {
    let g = gen_kneser(6, 2)?;
    let m = 3;
    for transform in [Transform::Scaled, Transform::Rewritten] {
        let (model, sem) = build_bounded_with(
            &g,
            m,
            BoundedOptions {
                transform,
                nonneg: true,
            },
        )?;
        println!(
            "{transform:?}: order {}, {} equalities, {} inequalities, tags {:?}",
            model.dim,
            model.eq_count(),
            model.ineq_count(),
            model.structure
        );
        let res = solve(&model, &sem, &SolverConfig::default())?;
        println!(
            "  bound {:.5} in {} iterations ({}), residuals p {:.1e} d {:.1e} gap {:.1e}",
            res.value,
            res.iterations,
            res.status.as_str(),
            res.residuals.primal,
            res.residuals.dual,
            res.residuals.gap
        );
    }

    let (model, sem) = build_bounded(&g, m)?;
    for eps in [1e-3, 1e-5, 1e-7] {
        let res = solve(
            &model,
            &sem,
            &SolverConfig {
                eps,
                ..SolverConfig::default()
            },
        )?;
        println!("eps {eps:.0e}: {:.8} after {} iterations", res.value, res.iterations);
    }

    let warm = exact_bounded_chromatic(&TimetablingInstance::bounded(g.clone(), m), None)?
        .witness
        .expect("optimal colouring");
    let cold = solve(&model, &sem, &SolverConfig::default())?;
    let hot = solve(
        &model,
        &sem,
        &SolverConfig {
            warm_start: Some(warm),
            ..SolverConfig::default()
        },
    )?;
    println!(
        "cold start {} iterations, warm start {} iterations",
        cold.iterations, hot.iterations
    );
    Ok(())
}
