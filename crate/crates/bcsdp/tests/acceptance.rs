//! Acceptance suite. Prints one line per criterion and exits nonzero when a
//! hard criterion fails. Dataset-backed criteria report BLOCKED when the
//! files are absent from `$BCSDP_DATA`.
mod common;

use std::process::Command;
use std::time::Instant;

use bcsdp::cli::KNESER_FI_ROWS;
use bcsdp::graph::{counting_bound, gen_gnp, validate_partition, ConflictGraph, TimetablingInstance};
use bcsdp::oracle::{exact_bounded_chromatic, sandwich_check, unbounded_class_size};
use bcsdp::relax::{build_bounded, build_bounded_with, build_theta, BoundedOptions, ThetaVariant, Transform};
use bcsdp::rounding::{colouring_block, iterative_round, kms_round, RoundingConfig};
use bcsdp::solver::{extract_bound, solve, SolverConfig};
use common::{brute_force_chi, graphs_up_to_isomorphism, kernel_discrepancy, named_small_graphs};
use rayon::prelude::*;

enum Outcome {
    Pass(String),
    Fail(String),
    Blocked(String),
}

use Outcome::{Blocked, Fail, Pass};

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn bound(g: &ConflictGraph, m: usize, cfg: &SolverConfig) -> (f64, i64) {
    let (model, sem) = build_bounded(g, m).unwrap();
    extract_bound(&solve(&model, &sem, cfg).unwrap()).unwrap()
}

fn bench_csv(suite: &str) -> Option<Vec<csv::StringRecord>> {
    let dir = std::env::var("BCSDP_DATA").ok()?;
    let out = Command::new(env!("CARGO_BIN_EXE_bcsdp"))
        .args(["bench", suite, "--data-dir", &dir, "--output-format", "csv"])
        .output()
        .expect("binary runs");
    let rows: Vec<_> = csv::Reader::from_reader(out.stdout.as_slice())
        .records()
        .map(Result::unwrap)
        .collect();
    let missing = rows.is_empty() || rows.iter().all(|r| r.iter().next_back() == Some("missing-data"));
    (!missing).then_some(rows)
}

fn table1() -> Outcome {
    const WANT: [i64; 11] = [47, 26, 20, 16, 14, 13, 12, 11, 11, 11, 11];
    let Some(rows) = bench_csv("toronto-sta83") else {
        return Blocked("sta-f-83.crs/.stu not found under $BCSDP_DATA".into());
    };
    let mut bad = Vec::new();
    for (row, want) in rows.iter().zip(WANT) {
        let m = if row[1].is_empty() { "unbounded" } else { &row[1] };
        let certified: Option<i64> = row[5].parse().ok();
        let chi: Option<i64> = row[2].parse().ok();
        let real: f64 = row[4].parse().unwrap_or(f64::NAN);
        let secs: f64 = row[6].parse().unwrap_or(f64::INFINITY);
        // the real value must round up to the table entry with 0.1 to spare
        let near = real > want as f64 - 1.0 + 0.1 - 1e-9 || (real - want as f64).abs() <= 0.1;
        if certified != Some(want) || chi != Some(want) || !near || secs > 120.0 {
            bad.push(format!(
                "m={m}: bound {real:.3} cert {certified:?} chi {chi:?} ({secs:.1}s)"
            ));
        }
    }
    let n = rows[0][0].to_string();
    check(
        rows.len() == WANT.len() && bad.is_empty(),
        format!("{n}: {} rows, mismatches {bad:?}", rows.len()),
    )
}

fn table3() -> Outcome {
    // (Y^0..Y^-3, chi^0..chi^-3); None marks entries outside the comparison
    type Row = ([Option<f64>; 4], [Option<usize>; 4]);
    let want: [Row; 8] = [
        (
            [Some(2.50), Some(3.33), Some(5.00), Some(10.00)],
            [Some(3), Some(4), Some(5), None],
        ),
        (
            [Some(3.00), Some(3.75), Some(5.00), Some(7.50)],
            [Some(4), Some(4), Some(5), Some(8)],
        ),
        (
            [Some(3.50), Some(4.20), Some(5.25), Some(7.00)],
            [Some(5), Some(5), Some(6), Some(7)],
        ),
        (
            [Some(4.67), Some(5.60), Some(7.00), Some(9.33)],
            [Some(6), Some(6), Some(7), Some(10)],
        ),
        ([None; 4], [Some(2), Some(3), Some(3), Some(3)]),
        (
            [Some(6.40), Some(7.11), Some(8.00), Some(9.14)],
            [Some(7), Some(8), Some(8), Some(10)],
        ),
        ([None; 4], [Some(2), Some(3), Some(3), Some(3)]),
        ([None; 4], [None; 4]),
    ];
    let cfg = SolverConfig::default();
    let results: Vec<Vec<String>> = KNESER_FI_ROWS
        .par_iter()
        .zip(&want)
        .map(|(&(label, spec, c), (ys, chis))| {
            let g = bcsdp::cli::parse_gen_spec(spec).unwrap();
            let mut bad = Vec::new();
            for off in 0..4 {
                let m = c - off;
                if let Some(y) = ys[off] {
                    let (got, _) = bound(&g, m, &cfg);
                    if (got - y).abs() > 0.05 {
                        bad.push(format!("{label} Y^-{off} {got:.3} vs {y}"));
                    }
                }
                if let Some(chi) = chis[off] {
                    let got = exact_bounded_chromatic(&TimetablingInstance::bounded(g.clone(), m), None)
                        .unwrap()
                        .chi_m;
                    if got != Some(chi) {
                        bad.push(format!("{label} chi^-{off} {got:?} vs {chi}"));
                    }
                }
            }
            bad
        })
        .collect();
    let bad: Vec<String> = results.into_iter().flatten().collect();
    check(
        bad.is_empty(),
        format!("16 Kneser and 4 FI(6,0.67) values within 0.05, 26 optima; mismatches {bad:?}"),
    )
}

fn analytic() -> Outcome {
    let cfg = SolverConfig {
        eps: 1e-7,
        ..SolverConfig::default()
    };
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 1..=20usize {
        let mut ms = vec![1, n.div_ceil(2), n];
        ms.dedup();
        for m in ms {
            worst = worst.max((bound(&ConflictGraph::complete(n), m, &cfg).0 - n as f64).abs());
            cases += 1;
        }
    }
    for n in [2usize, 4, 6, 9, 12, 20] {
        for m in (1..=n).filter(|m| n % m == 0) {
            worst = worst.max((bound(&ConflictGraph::empty(n), m, &cfg).0 - (n / m) as f64).abs());
            cases += 1;
        }
    }
    let (model, sem) = build_theta(&ConflictGraph::cycle(5).unwrap(), ThetaVariant::Lovasz).unwrap();
    let c5 = extract_bound(&solve(&model, &sem, &cfg).unwrap()).unwrap().0;
    worst = worst.max((c5 - 2.2361).abs());
    check(
        worst <= 1e-3,
        format!("{} cases, C5 {c5:.5}, worst deviation {worst:.2e}", cases + 1),
    )
}

fn sandwich() -> Outcome {
    // the real link is tight on most graphs, so the solve must be accurate
    // well below its 1e-6 tolerance
    let cfg = SolverConfig {
        eps: 1e-8,
        max_iter: 200_000,
        ..SolverConfig::default()
    };
    let cases: Vec<(u64, usize)> = (0..100).flat_map(|s| [2, 3, 4].map(|m| (s, m))).collect();
    let reports: Vec<_> = cases
        .par_iter()
        .map(|&(seed, m)| {
            (
                seed,
                m,
                sandwich_check(&gen_gnp(12, 0.5, seed).unwrap(), m, &cfg, None).unwrap(),
            )
        })
        .collect();
    let overshoot = reports
        .iter()
        .map(|(_, _, r)| r.bounded_sdp - r.chi_m as f64)
        .fold(f64::MIN, f64::max);
    let failures: Vec<String> = reports
        .iter()
        .filter_map(|(seed, m, r)| {
            let ok = r.counting as i64 <= r.certified
                && r.certified <= r.chi_m as i64
                && r.chi_m <= r.greedy
                && r.bounded_sdp <= r.chi_m as f64 + 1e-6;
            (!ok).then(|| format!("seed {seed} m={m}: sdp {:.9} chi {}", r.bounded_sdp, r.chi_m))
        })
        .collect();
    check(
        failures.is_empty(),
        format!(
            "300 cases, {} violations {:?}, largest sdp - chi {overshoot:.1e}",
            failures.len(),
            &failures[..failures.len().min(5)]
        ),
    )
}

fn rounding_quality() -> Outcome {
    let solver = SolverConfig::default();
    let rows: Vec<(bool, bool, bool)> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let g = gen_gnp(20, 0.5, seed).unwrap();
            let (_, c) = unbounded_class_size(&g, None).unwrap();
            let m = c.saturating_sub(3).max(1);
            let inst = TimetablingInstance::bounded(g.clone(), m);
            let (model, sem) = build_bounded(&g, m).unwrap();
            let res = solve(&model, &sem, &solver).unwrap();
            let block = colouring_block(&res.x, &sem, 20).unwrap();
            let cfg = RoundingConfig {
                seed,
                ..RoundingConfig::default()
            };
            let kms = kms_round(&block, &inst, &cfg).unwrap();
            let chi = exact_bounded_chromatic(&inst, None).unwrap().chi_m.unwrap();
            let (iter, _) = iterative_round(&inst, &cfg, &solver).unwrap();
            (
                validate_partition(&inst, &kms).ok(),
                kms.len() == chi,
                validate_partition(&inst, &iter).ok(),
            )
        })
        .collect();
    let valid = rows.iter().filter(|r| r.0).count();
    let optimal = rows.iter().filter(|r| r.0 && r.1).count();
    let iter_valid = rows.iter().filter(|r| r.2).count();
    check(
        valid == 100 && optimal >= 90 && iter_valid == 100,
        format!("kms valid {valid}/100, optimal {optimal}/100; iterative valid {iter_valid}/100"),
    )
}

fn kernels() -> Outcome {
    let mut models = Vec::new();
    for n in 1..=5 {
        for g in graphs_up_to_isomorphism(n) {
            models.push(g);
        }
    }
    let small = models.len();
    models.extend((0..50).map(|s| gen_gnp(8, 0.5, s).unwrap()));
    let results: Vec<Option<f64>> = models
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, g)| {
            (1..=g.n()).flat_map(move |m| {
                [Transform::Scaled, Transform::Rewritten].map(|transform| {
                    let (model, _) = build_bounded_with(
                        g,
                        m,
                        BoundedOptions {
                            transform,
                            nonneg: true,
                        },
                    )
                    .unwrap();
                    kernel_discrepancy(&model, (i * 16 + m) as u64)
                })
            })
        })
        .collect();
    let worst = results.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    let singular = results.iter().filter(|r| r.is_none()).count();
    check(
        worst <= 1e-10,
        format!(
            "{} models ({small} graphs with n <= 5, 50 G(8,0.5)), worst relative difference {worst:.1e}, {singular} rank-deficient n=2,m=1 models skipped",
            results.len()
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut graphs: Vec<(String, ConflictGraph)> = named_small_graphs();
    for p in [0.2, 0.5, 0.8] {
        graphs.extend((0..200).map(|s| (format!("G(8,{p}) seed {s}"), gen_gnp(8, p, s).unwrap())));
    }
    let failures: Vec<String> = graphs
        .par_iter()
        .flat_map_iter(|(name, g)| {
            let chi = brute_force_chi(g);
            (1..=8usize).filter_map(move |m| {
                let inst = TimetablingInstance::bounded(g.clone(), m);
                let got = exact_bounded_chromatic(&inst, None).unwrap().chi_m;
                let want = chi
                    .get(m)
                    .copied()
                    .unwrap_or_else(|| counting_bound(g.n(), m).max(chi[g.n()]));
                (got != Some(want)).then(|| format!("{name} m={m}: {got:?} vs {want}"))
            })
        })
        .collect();
    check(
        failures.is_empty(),
        format!("{} graphs x m in 1..8, mismatches {failures:?}", graphs.len()),
    )
}

fn table2() -> Outcome {
    let Some(rows) = bench_csv("itc2007") else {
        return Blocked("comp01 not found under $BCSDP_DATA".into());
    };
    let Some(row) = rows.iter().find(|r| &r[0] == "comp01") else {
        return Blocked("comp01 row absent from the itc2007 bench".into());
    };
    let num = |i: usize| row[i].parse::<f64>().unwrap_or(f64::NAN);
    let (unbounded, bounded, rounded) = (num(4), num(6), num(8));
    check(
        (unbounded - 4.0).abs() <= 0.1 && (bounded - 5.0).abs() <= 0.1 && rounded <= 7.0,
        format!("comp01: unbounded {unbounded:.2}, bounded {bounded:.2}, rounded {rounded}"),
    )
}

fn scaling() -> Outcome {
    let cfg = SolverConfig::default();
    let ns = [20usize, 40, 80];
    let times: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let g = gen_gnp(n, 0.5, 1).unwrap();
            let start = Instant::now();
            bound(&g, n / 5, &cfg);
            start.elapsed().as_secs_f64()
        })
        .collect();
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    check(slope < 3.0, format!("log-log slope {slope:.2}, times {times:.3?} s"))
}

type Criterion = (usize, &'static str, bool, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "sta-f-83 bounded bounds", true, table1),
        (2, "Kneser and forbidden-intersection table", true, table3),
        (3, "analytic values", true, analytic),
        (4, "sandwich chain on G(12, 0.5)", true, sandwich),
        (5, "rounding quality on G(20, 0.5)", true, rounding_quality),
        (6, "structured kernels vs dense reference", true, kernels),
        (7, "oracle vs partition enumeration", true, oracle_equivalence),
        (8, "ITC comp01 (soft)", false, table2),
        (9, "solver scaling smoke test (soft)", false, scaling),
    ];
    let mut hard_failures = 0;
    for (id, name, hard, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                hard_failures += usize::from(hard);
                ("FAIL", d)
            }
            Blocked(d) => ("BLOCKED", d),
        };
        println!("criterion {id} [{tag}] {name}: {detail} ({secs:.1}s)");
    }
    if hard_failures > 0 {
        std::process::exit(1);
    }
}
