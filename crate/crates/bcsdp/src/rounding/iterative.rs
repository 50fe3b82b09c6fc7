use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;

use crate::error::Result;
use crate::graph::{seeded_rng, Partition, TimetablingInstance};
use crate::linalg::{eigh, SymMatrix};
use crate::relax::{
    capacity_thresholds, BoundSemantics, Constraint, ConstraintBlock, SdpModel, Sense, SparseSym, StructureTags,
    Transform,
};
use crate::solver::{solve, SolveStatus, SolverConfig};
use crate::units::Units;

use super::greedy::{greedy_units, to_partition};
use super::{RoundingConfig, RoundingDiagnostics};

/// Random subsets sampled for the violation bound, beyond the singletons and
/// the full set.
const BOUND_SAMPLES: usize = 64;
/// Size of the random tilt added to the trace objective.
const PERTURBATION: f64 = 1e-2;

/// `⟨A, Q⟩ = rhs` or `⟨A, Q⟩ >= rhs` with `A` of unit Frobenius norm.
struct BoxRow {
    a: DMatrix<f64>,
    rhs: f64,
    equality: bool,
}

/// Coefficient `c` on `Q_ij` as an entry of a symmetric matrix.
fn coef(i: usize, j: usize, c: f64) -> (usize, usize, f64) {
    if i == j {
        (i, i, c)
    } else {
        (i.min(j), i.max(j), c / 2.0)
    }
}

fn push(rows: &mut Vec<BoxRow>, n: usize, entries: Vec<(usize, usize, f64)>, rhs: f64, equality: bool) {
    let a = SparseSym::from_entries(entries).to_dense(n).into_matrix();
    let norm = a.norm();
    if norm > 0.0 {
        rows.push(BoxRow {
            a: a / norm,
            rhs: rhs / norm,
            equality,
        });
    }
}

/// The box program over the class projection `Q = Σ_S 1_S 1_Sᵀ / |S|`,
/// which satisfies `0 ⪯ Q ⪯ I` and has trace equal to the class count:
/// zero on conflicts, unit row sums, nonnegative entries bounded by the
/// diagonal, weighted class size at most `m`, and the capacity, feature and
/// pre-colouring counts written against `Q_uu`.
fn box_rows(inst: &TimetablingInstance) -> Vec<BoxRow> {
    let n = inst.n();
    let m = inst.m as f64;
    let g = &inst.graph;
    let mut rows = Vec::new();
    for &(u, v) in g.edges() {
        push(&mut rows, n, vec![coef(u, v, 1.0)], 0.0, true);
    }
    for u in 0..n {
        push(&mut rows, n, (0..n).map(|v| coef(u, v, 1.0)).collect(), 1.0, true);
        let mut size: Vec<_> = (0..n).map(|v| coef(u, v, -(inst.weight(v) as f64))).collect();
        size.push(coef(u, u, m));
        push(&mut rows, n, size, 0.0, false);
    }
    for u in 0..n {
        for v in u + 1..n {
            if !g.has_edge(u, v) {
                push(&mut rows, n, vec![coef(u, v, 1.0)], 0.0, false);
                push(&mut rows, n, vec![coef(u, u, 1.0), coef(u, v, -1.0)], 0.0, false);
                push(&mut rows, n, vec![coef(v, v, 1.0), coef(u, v, -1.0)], 0.0, false);
            }
        }
    }
    let mut counted = |events: &[usize], rooms: usize| {
        for &u in events {
            let mut entries: Vec<_> = events.iter().map(|&v| coef(u, v, -1.0)).collect();
            entries.push(coef(u, u, rooms as f64));
            push(&mut rows, n, entries, 0.0, false);
        }
    };
    for (_, events, rooms) in capacity_thresholds(inst) {
        if rooms < inst.m {
            counted(&events, rooms);
        }
    }
    for f in 0..inst.feature_count {
        let rooms = inst.rooms_with_feature(f);
        if rooms < inst.m {
            counted(&inst.events_with_feature(f), rooms);
        }
    }
    let mut owner = vec![usize::MAX; n];
    for (i, class) in inst.precolouring.iter().enumerate() {
        for &v in class {
            owner[v] = i;
        }
    }
    for u in 0..n {
        for v in u + 1..n {
            if owner[u] == usize::MAX || owner[v] == usize::MAX {
                continue;
            }
            if owner[u] == owner[v] {
                push(&mut rows, n, vec![coef(u, v, 1.0), coef(u, u, -1.0)], 0.0, true);
                push(&mut rows, n, vec![coef(u, u, 1.0), coef(v, v, -1.0)], 0.0, true);
            } else if !g.has_edge(u, v) {
                push(&mut rows, n, vec![coef(u, v, 1.0)], 0.0, true);
            }
        }
    }
    rows
}

fn dense_to_sparse(a: &DMatrix<f64>, offset: usize) -> SparseSym {
    let r = a.nrows();
    SparseSym::from_entries(
        (0..r)
            .flat_map(|i| (i..r).map(move |j| (i, j)))
            .filter(|&(i, j)| a[(i, j)].abs() > 1e-14)
            .map(|(i, j)| (i + offset, j + offset, a[(i, j)])),
    )
}

/// Reduced program in `W` of order `r`, written over `diag(W, I - W)`:
///
/// ```text
/// min ⟨Fᵀ C F, W⟩  s.t.  ⟨Fᵀ A_i F, W⟩ (=, >=) b_i - ⟨A_i, F₁F₁ᵀ⟩,  tr W <= budget,  0 ⪯ W ⪯ I
/// ```
///
/// After the first round the right-hand sides are moved to keep `previous`,
/// the fractional part of the last solution, feasible: equalities take its
/// value and inequalities the smaller of the target and its value.
fn reduced_model(
    rows: &[BoxRow],
    active: &[bool],
    f: &DMatrix<f64>,
    p1: &DMatrix<f64>,
    cost: &DMatrix<f64>,
    previous: Option<&DMatrix<f64>>,
    budget: f64,
) -> (SdpModel, BoundSemantics) {
    let r = f.ncols();
    let link = (0..r)
        .flat_map(|i| (i..r).map(move |j| (i, j)))
        .map(|(i, j)| {
            let a = if i == j { 1.0 } else { 0.5 };
            let matrix = SparseSym::from_entries([(i, j, a), (i + r, j + r, a)]);
            Constraint::new(matrix, (i == j) as u8 as f64).normalized()
        })
        .collect();
    let mut equalities = Vec::new();
    let mut inequalities = Vec::new();
    for (row, _) in rows.iter().zip(active).filter(|(_, &on)| on) {
        let reduced = f.transpose() * &row.a * f;
        if reduced.norm() < 1e-12 {
            continue;
        }
        let target = row.rhs - row.a.dot(p1);
        let rhs = match previous.map(|x| row.a.dot(x)) {
            Some(at) if row.equality => at,
            Some(at) => target.min(at),
            None => target,
        };
        let c = Constraint::new(dense_to_sparse(&reduced, 0), rhs).normalized();
        if row.equality {
            equalities.push(c);
        } else {
            inequalities.push(c);
        }
    }
    let budget = budget.max(previous.map_or(0.0, |x| x.trace()));
    if budget > 0.0 {
        let trace = SparseSym::from_entries((0..r).map(|i| (i, i, -1.0)));
        inequalities.push(Constraint::new(trace, -budget).normalized());
    }
    let mut eq_other = vec![
        ConstraintBlock::new("link", link),
        ConstraintBlock::new("equality", equalities),
    ];
    eq_other.retain(|b| !b.is_empty());
    let mut ineq = vec![ConstraintBlock::new("inequality", inequalities)];
    ineq.retain(|b| !b.is_empty());
    let model = SdpModel {
        dim: 2 * r,
        objective: dense_to_sparse(&(f.transpose() * cost * f), 0),
        sense: Sense::Minimize,
        eq_graph: Vec::new(),
        eq_other,
        ineq,
        structure: StructureTags::default(),
    };
    let sem = BoundSemantics {
        transform: Transform::Direct,
        anchor_vertex: 0,
        scale: 1.0,
        offset: 0.0,
        original_sense: Sense::Minimize,
        value_map: "tr W".into(),
    };
    (model, sem)
}

/// Largest sampled value of `Σ_{i <= ⌊sqrt(2|S|) + 1⌋} σ_i(S)`, where
/// `σ_i(S)` is the i-th singular value of the mean of the matrices indexed
/// by `S`. The singletons, the full set and `samples` random subsets are
/// evaluated.
pub fn violation_bound(matrices: &[SymMatrix], samples: usize, seed: u64) -> f64 {
    let count = matrices.len();
    if count == 0 {
        return 0.0;
    }
    let value = |subset: &[usize]| {
        let mut mean = SymMatrix::zeros(matrices[0].order());
        for &i in subset {
            mean.axpy(1.0 / subset.len() as f64, &matrices[i]);
        }
        let Ok(dec) = eigh(&mean) else { return f64::INFINITY };
        let mut sigma: Vec<f64> = dec.eigenvalues.iter().map(|l| l.abs()).collect();
        sigma.sort_by(|a, b| b.total_cmp(a));
        let terms = ((2.0 * subset.len() as f64).sqrt() + 1.0).floor() as usize;
        sigma.iter().take(terms).sum::<f64>()
    };
    let mut rng = seeded_rng(seed);
    let mut best = value(&(0..count).collect::<Vec<_>>());
    for i in 0..count {
        best = best.max(value(&[i]));
    }
    for _ in 0..samples {
        let size = rng.random_range(1..=count);
        best = best.max(value(&sample(&mut rng, count, size).into_vec()));
    }
    best
}

/// Rebuilds classes from the rounded projection `xt`. A group of units
/// whose rows all equal `1_S / |S|` to within `tol` becomes a class when
/// admissible. The remaining units are grouped greedily: the one with the
/// largest diagonal seeds a class, and others join in decreasing `xt` entry
/// with the seed while the class stays admissible. Returns the partition
/// and the number of units placed greedily.
fn reconstruct(units: &Units, xt: &DMatrix<f64>, tol: f64) -> (Partition, usize) {
    let n = xt.nrows();
    let mut placed = vec![false; units.len()];
    let mut unit_of = vec![0; n];
    for (u, members) in units.members.iter().enumerate() {
        for &v in members {
            unit_of[v] = u;
        }
    }
    let mut classes = Vec::new();
    let mut seen = vec![false; n];
    for v in 0..n {
        if seen[v] {
            continue;
        }
        let group: Vec<usize> = (0..n).filter(|&w| xt[(v, w)] > tol).collect();
        let value = 1.0 / group.len().max(1) as f64;
        let exact = group.contains(&v)
            && group.iter().all(|&u| {
                (0..n).all(|w| {
                    let expected = if group.contains(&w) { value } else { 0.0 };
                    (xt[(u, w)] - expected).abs() <= tol
                })
            });
        if !exact {
            continue;
        }
        let mut group_units: Vec<usize> = group.iter().map(|&w| unit_of[w]).collect();
        group_units.dedup();
        let whole = group_units
            .iter()
            .all(|&u| units.members[u].iter().all(|w| group.contains(w)));
        let mut class = units.empty_class();
        let admissible = whole
            && group_units.iter().all(|&u| {
                let ok = !placed[u] && units.can_join(&class, u);
                if ok {
                    units.join(&mut class, u);
                }
                ok
            });
        if admissible {
            for &w in &group {
                seen[w] = true;
            }
            for &u in &group_units {
                placed[u] = true;
            }
            classes.push(class);
        }
    }
    let score = |u: usize, seed: usize| {
        let (a, b) = (units.members[u][0], units.members[seed][0]);
        xt[(a, b)]
    };
    let mut greedy = 0;
    loop {
        let left: Vec<usize> = (0..units.len()).filter(|&u| !placed[u]).collect();
        let Some(&seed) = left
            .iter()
            .max_by(|&&a, &&b| score(a, a).total_cmp(&score(b, b)).then(b.cmp(&a)))
        else {
            break;
        };
        let mut order: Vec<usize> = left.into_iter().filter(|&u| u != seed).collect();
        order.sort_by(|&a, &b| score(b, seed).total_cmp(&score(a, seed)).then(a.cmp(&b)));
        let mut class = units.empty_class();
        units.join(&mut class, seed);
        placed[seed] = true;
        greedy += 1;
        for u in order {
            if units.can_join(&class, u) {
                units.join(&mut class, u);
                placed[u] = true;
                greedy += 1;
            }
        }
        classes.push(class);
    }
    (to_partition(&classes), greedy)
}

/// Iterative eigenvalue rounding of the box program over the class
/// projection `Q`, with the trace bounded by a greedy colouring's class
/// count and the objective tilted slightly at random.
///
/// Each round solves the reduced program on the free subspace `F`.
/// Eigenvectors with eigenvalue above `1 - δ` join `F₁` and those below `δ`
/// join `F₀`. The constraint whose inner product with the fractional part is
/// smallest in magnitude is dropped if that product is below `δ`. When no
/// eigenvalue meets the threshold, the most nearly integral one is rounded.
/// Classes are read off `F₁F₁ᵀ` (see [`RoundingDiagnostics::regrouped`]).
///
/// `δ` is `cfg.delta`, raised to `10 * solver.eps` since the reduced
/// programs are solved only to that accuracy.
pub fn iterative_round(
    inst: &TimetablingInstance,
    cfg: &RoundingConfig,
    solver: &SolverConfig,
) -> Result<(Partition, RoundingDiagnostics)> {
    cfg.validate()?;
    solver.validate()?;
    let units = Units::new(inst)?;
    let n = inst.n();
    let mut diag = RoundingDiagnostics::default();
    if n == 0 {
        return Ok((Partition::default(), diag));
    }
    let rows = box_rows(inst);
    let d = greedy_units(&units, cfg.seed).len() as f64;
    let delta = cfg.delta.max(10.0 * solver.eps);
    // a generic tilt of the trace objective makes the optimum an extreme point
    let mut rng = seeded_rng(cfg.seed);
    let mut cost = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in i..n {
            let tilt = PERTURBATION * rng.random_range(-1.0..1.0);
            cost[(i, j)] += tilt;
            cost[(j, i)] = cost[(i, j)];
        }
    }
    let mut f = DMatrix::<f64>::identity(n, n);
    let mut previous: Option<DMatrix<f64>> = None;
    let mut f1: Vec<DVector<f64>> = Vec::new();
    let mut active = vec![true; rows.len()];
    let projection = |vs: &[DVector<f64>]| {
        let mut p = DMatrix::<f64>::zeros(n, n);
        for v in vs {
            p += v * v.transpose();
        }
        p
    };
    while f.ncols() > 0 {
        diag.rounds += 1;
        let p1 = projection(&f1);
        let budget = d - f1.len() as f64;
        let (model, sem) = reduced_model(&rows, &active, &f, &p1, &cost, previous.as_ref(), budget);
        let res = match solve(&model, &sem, solver) {
            Ok(res) if res.status != SolveStatus::Diverged => res,
            Ok(res) => {
                diag.aborted = Some(format!("reduced program diverged after {} iterations", res.iterations));
                break;
            }
            Err(e) => {
                diag.aborted = Some(e.to_string());
                break;
            }
        };
        let r = f.ncols();
        let w = res.x.submatrix(&(0..r).collect::<Vec<_>>());
        let dec = eigh(&w)?;
        let mut keep = Vec::new();
        for (j, &lambda) in dec.eigenvalues.iter().enumerate() {
            if lambda > 1.0 - delta {
                f1.push(&f * dec.eigenvector(j));
            } else if lambda >= delta {
                keep.push(j);
            }
        }
        let fixed = keep.len() < r;
        let mut xf = DMatrix::<f64>::zeros(r, r);
        for &j in &keep {
            let v = dec.eigenvector(j);
            xf += dec.eigenvalues[j] * &v * v.transpose();
        }
        let lifted = &f * xf * f.transpose();
        let weakest = rows
            .iter()
            .enumerate()
            .filter(|&(i, row)| active[i] && (f.transpose() * &row.a * &f).norm() >= 1e-12)
            .map(|(i, row)| (row.a.dot(&lifted).abs(), i))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        if let Some((_, i)) = weakest.filter(|&(value, _)| value < delta) {
            active[i] = false;
            diag.dropped.push(i);
        }
        if !fixed {
            let (pos, &j) = keep
                .iter()
                .enumerate()
                .min_by(|(_, &a), (_, &b)| {
                    let dist = |l: f64| l.min(1.0 - l);
                    dist(dec.eigenvalues[a]).total_cmp(&dist(dec.eigenvalues[b]))
                })
                .expect("a fractional eigenvalue remains");
            if dec.eigenvalues[j] >= 0.5 {
                f1.push(&f * dec.eigenvector(j));
            }
            keep.remove(pos);
            diag.forced += 1;
        }
        let columns: Vec<DVector<f64>> = keep.iter().map(|&j| &f * dec.eigenvector(j)).collect();
        let mut kept = DMatrix::<f64>::zeros(n, n);
        for (&j, v) in keep.iter().zip(&columns) {
            kept += dec.eigenvalues[j] * v * v.transpose();
        }
        previous = Some(kept);
        f = if columns.is_empty() {
            DMatrix::zeros(n, 0)
        } else {
            DMatrix::from_columns(&columns)
        };
    }
    let xt = projection(&f1);
    diag.violations = rows
        .iter()
        .map(|row| {
            let gap = row.rhs - row.a.dot(&xt);
            if row.equality {
                gap.abs()
            } else {
                gap.max(0.0)
            }
        })
        .collect();
    let matrices: Vec<SymMatrix> = rows.iter().map(|row| SymMatrix::from_dense(row.a.clone())).collect();
    diag.violation_bound = violation_bound(&matrices, BOUND_SAMPLES, cfg.seed);
    let (part, regrouped) = reconstruct(&units, &xt, delta.sqrt().max(1e-6));
    diag.regrouped = regrouped;
    Ok((part, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{validate_partition, ConflictGraph};

    #[test]
    fn projection_of_a_partition_satisfies_the_rows() {
        let g = ConflictGraph::path(4);
        let inst = TimetablingInstance::bounded(g, 2);
        let mut q = DMatrix::<f64>::zeros(4, 4);
        for class in [[0usize, 2], [1, 3]] {
            for &u in &class {
                for &v in &class {
                    q[(u, v)] = 0.5;
                }
            }
        }
        for row in box_rows(&inst) {
            let value = row.a.dot(&q);
            if row.equality {
                assert!((value - row.rhs).abs() < 1e-12);
            } else {
                assert!(value >= row.rhs - 1e-12);
            }
        }
    }

    #[test]
    fn exact_projection_is_reconstructed() {
        let inst = TimetablingInstance::bounded(ConflictGraph::path(4), 2);
        let units = Units::new(&inst).unwrap();
        let mut q = DMatrix::<f64>::zeros(4, 4);
        for class in [[0usize, 3], [1, 2]] {
            for &u in &class {
                for &v in &class {
                    q[(u, v)] = 0.5;
                }
            }
        }
        // {1, 2} is an edge, so that group is regrouped greedily
        let (part, greedy) = reconstruct(&units, &q, 1e-6);
        assert!(validate_partition(&inst, &part).ok());
        assert_eq!(greedy, 2);
        assert_eq!(part.classes[0], vec![0, 3]);
    }

    #[test]
    fn empty_graph_rounds_to_pairs() {
        let inst = TimetablingInstance::bounded(ConflictGraph::empty(4), 2);
        let (part, diag) = iterative_round(&inst, &RoundingConfig::default(), &SolverConfig::default()).unwrap();
        assert!(validate_partition(&inst, &part).ok());
        assert_eq!(part.len(), 2);
        assert!(diag.violations.iter().all(|&v| v <= diag.violation_bound + 1e-9));
    }

    #[test]
    fn singleton_bound() {
        let a = SymMatrix::from_diagonal(&[1.0, 0.0]);
        assert!((violation_bound(&[a], 0, 0) - 1.0).abs() < 1e-12);
    }
}
