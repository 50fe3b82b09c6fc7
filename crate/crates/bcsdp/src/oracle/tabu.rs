use std::time::Instant;

use rand::Rng;

use crate::graph::{seeded_rng, SeededRng};
use crate::units::{Class, Units};

/// Tabu search for a conflict-free assignment of the units to `k` classes of
/// weight at most `m`, moving single units or swapping two. Only valid for
/// plain unit sets, where admissibility is conflicts plus weight.
pub(crate) fn tabu_search(
    units: &Units,
    k: usize,
    iterations: u64,
    seed: u64,
    deadline: Option<Instant>,
) -> Option<Vec<Class>> {
    let count = units.len();
    let m = units.inst.m;
    let w = &units.weight;
    let adj: Vec<Vec<usize>> = units.conflicts.iter().map(|c| c.ones().collect()).collect();
    let mut rng = seeded_rng(seed);

    // heaviest first into the fitting class with fewest conflicts
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by_key(|&u| (std::cmp::Reverse(w[u]), u));
    let mut class_of = vec![usize::MAX; count];
    let mut load = vec![0; k];
    let mut gamma = vec![vec![0i64; k]; count];
    for &u in &order {
        let c = (0..k)
            .filter(|&c| load[c] + w[u] <= m)
            .min_by_key(|&c| (gamma[u][c], load[c], c))?;
        class_of[u] = c;
        load[c] += w[u];
        for &x in &adj[u] {
            gamma[x][c] += 1;
        }
    }
    let mut total: i64 = (0..count).map(|u| gamma[u][class_of[u]]).sum::<i64>() / 2;
    let mut best_total = total;
    let mut tabu = vec![vec![0u64; k]; count];

    let relocate =
        |u: usize, to: usize, class_of: &mut Vec<usize>, load: &mut Vec<usize>, gamma: &mut Vec<Vec<i64>>| {
            let from = class_of[u];
            class_of[u] = to;
            load[from] -= w[u];
            load[to] += w[u];
            for &x in &adj[u] {
                gamma[x][from] -= 1;
                gamma[x][to] += 1;
            }
        };

    for iter in 1..=iterations {
        if total == 0 {
            let mut classes: Vec<Class> = (0..k).map(|_| units.empty_class()).collect();
            for u in 0..count {
                units.join(&mut classes[class_of[u]], u);
            }
            classes.retain(|c| !c.units.is_clear());
            return Some(classes);
        }
        if iter % 64 == 0 && deadline.is_some_and(|d| Instant::now() > d) {
            return None;
        }
        // (delta, tie, u, target class, swap partner)
        let mut best: Option<(i64, u32, usize, usize, Option<usize>)> = None;
        let mut consider = |delta: i64, u: usize, c: usize, v: Option<usize>, is_tabu: bool, rng: &mut SeededRng| {
            if is_tabu && total + delta >= best_total {
                return;
            }
            let tie = rng.random::<u32>();
            if best.is_none_or(|(d, t, ..)| (delta, tie) < (d, t)) {
                best = Some((delta, tie, u, c, v));
            }
        };
        for u in (0..count).filter(|&u| gamma[u][class_of[u]] > 0) {
            let a = class_of[u];
            for c in (0..k).filter(|&c| c != a) {
                if load[c] + w[u] <= m {
                    consider(gamma[u][c] - gamma[u][a], u, c, None, tabu[u][c] > iter, &mut rng);
                }
            }
            for v in (0..count).filter(|&v| class_of[v] != a) {
                let c = class_of[v];
                if load[c] + w[u] - w[v] > m || load[a] + w[v] - w[u] > m {
                    continue;
                }
                let link = units.conflicts[u][v] as i64;
                let delta = (gamma[u][c] - link) - gamma[u][a] + (gamma[v][a] - link) - gamma[v][c];
                consider(delta, u, c, Some(v), tabu[u][c] > iter || tabu[v][a] > iter, &mut rng);
            }
        }
        let Some((delta, _, u, c, v)) = best else { continue };
        let a = class_of[u];
        let conflicted = (0..count).filter(|&x| gamma[x][class_of[x]] > 0).count() as u64;
        let tenure = rng.random_range(0..10) + (6 * conflicted) / 10;
        relocate(u, c, &mut class_of, &mut load, &mut gamma);
        tabu[u][a] = iter + tenure;
        if let Some(v) = v {
            relocate(v, a, &mut class_of, &mut load, &mut gamma);
            tabu[v][c] = iter + tenure;
        }
        total += delta;
        best_total = best_total.min(total);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_hamming, validate_partition, ConflictGraph, TimetablingInstance};
    use crate::rounding::greedy::to_partition;

    #[test]
    fn finds_exact_packing() {
        let inst = TimetablingInstance::bounded(gen_hamming(6, 4).unwrap(), 8);
        let units = Units::new(&inst).unwrap();
        let classes = tabu_search(&units, 8, 100_000, 0, None).expect("packing exists");
        assert!(validate_partition(&inst, &to_partition(&classes)).ok());
    }

    #[test]
    fn impossible_target_fails() {
        let inst = TimetablingInstance::bounded(ConflictGraph::complete(4), 4);
        let units = Units::new(&inst).unwrap();
        assert!(tabu_search(&units, 3, 1000, 0, None).is_none());
    }
}
