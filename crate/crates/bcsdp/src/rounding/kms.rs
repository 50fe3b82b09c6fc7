use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{seeded_rng, Partition, TimetablingInstance};
use crate::linalg::{gram_vectors, SymMatrix};
use crate::units::{Class, Units};

use super::greedy::to_partition;
use super::RoundingConfig;

/// Fruitless draws in a row before the best-scoring unit is admitted anyway.
const EMPTY_DRAWS: usize = 16;

fn threshold(k: f64, max_degree: usize) -> f64 {
    if max_degree <= 1 || k <= 2.0 {
        return 0.0;
    }
    (2.0 * (k - 2.0) / (k * (max_degree as f64).ln())).sqrt()
}

fn attempt(units: &Units, vectors: &[Vec<f64>], k: f64, seed: u64) -> Vec<Class> {
    let mut rng = seeded_rng(seed);
    let dim = vectors.first().map_or(0, Vec::len);
    let mut remaining: Vec<usize> = (0..units.len()).collect();
    let mut classes = Vec::new();
    while !remaining.is_empty() {
        let mut class = units.empty_class();
        let mut fruitless = 0;
        loop {
            let joinable: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&u| !class.units[u] && units.can_join(&class, u))
                .collect();
            if joinable.is_empty() {
                break;
            }
            let residual: Vec<usize> = remaining.iter().copied().filter(|&u| !class.units[u]).collect();
            let max_degree = residual
                .iter()
                .map(|&u| residual.iter().filter(|&&v| units.conflicts[u][v]).count())
                .max()
                .unwrap_or(0);
            let c = threshold(k, max_degree);
            let r: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let mut scored: Vec<(f64, usize)> = joinable
                .iter()
                .map(|&u| (vectors[u].iter().zip(&r).map(|(a, b)| a * b).sum(), u))
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let before = class.weight;
            for &(_, u) in scored.iter().take_while(|(s, _)| *s >= c) {
                if units.can_join(&class, u) {
                    units.join(&mut class, u);
                }
            }
            if class.weight > before {
                fruitless = 0;
                continue;
            }
            fruitless += 1;
            if fruitless >= EMPTY_DRAWS {
                units.join(&mut class, scored[0].1);
                fruitless = 0;
            }
        }
        remaining.retain(|&u| !class.units[u]);
        classes.push(class);
    }
    classes
}

/// Randomised threshold rounding of a vector colouring.
///
/// `x` is the `Y - J` block of a bounded-colouring solution (see
/// [`super::colouring_block`]). Its Gram vectors are normalised. Each class
/// is grown over repeated Gaussian directions `r`: the units whose score
/// `⟨v, r⟩` is at least `c = sqrt(2(k-2) / (k ln Δ))` are scanned in
/// decreasing score, and each is admitted when it keeps the class
/// admissible. The class closes once no uncoloured unit can join it.
/// Here `k` is the ceiling of the relaxation value and `Δ` the largest
/// degree among the uncoloured units. Attempt `a` uses seed `cfg.seed + a`,
/// and the attempt with the fewest classes wins, ties going to the earlier
/// attempt.
pub fn kms_round(x: &SymMatrix, inst: &TimetablingInstance, cfg: &RoundingConfig) -> Result<Partition> {
    cfg.validate()?;
    let n = inst.n();
    if x.order() != n {
        return Err(Error::InvalidArgument(format!(
            "matrix of order {} for {n} events",
            x.order()
        )));
    }
    let units = Units::new(inst)?;
    if n == 0 {
        return Ok(Partition::default());
    }
    let raw = gram_vectors(x);
    let vertex_vectors: Vec<Vec<f64>> = raw
        .into_iter()
        .map(|v| {
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-12 {
                v.iter().map(|a| a / norm).collect()
            } else {
                v
            }
        })
        .collect();
    let vectors: Vec<Vec<f64>> = units
        .members
        .iter()
        .map(|members| {
            let mut mean = vec![0.0; n];
            for &v in members {
                for (m, a) in mean.iter_mut().zip(&vertex_vectors[v]) {
                    *m += a / members.len() as f64;
                }
            }
            mean
        })
        .collect();
    let mean_diag = (0..n).map(|v| x.get(v, v)).sum::<f64>() / n as f64;
    let k = (mean_diag + 1.0 - 1e-6).ceil().max(1.0);
    let best = (0..cfg.attempts)
        .into_par_iter()
        .map(|a| (attempt(&units, &vectors, k, cfg.seed.wrapping_add(a as u64)), a))
        .min_by_key(|(classes, a)| (classes.len(), *a))
        .expect("at least one attempt");
    Ok(to_partition(&best.0))
}
