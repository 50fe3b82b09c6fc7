//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use bcsdp::graph::{gen_hamming, gen_kneser, ConflictGraph};
use bcsdp::linalg::SymMatrix;
use bcsdp::solver::{PreparedBlock, PreparedModel, SolverState};
use nalgebra::{DMatrix, DVector};

/// Calls `f` with every set partition of `0..n` as a per-vertex block index
/// (restricted growth strings).
pub fn for_each_partition(n: usize, mut f: impl FnMut(&[usize], usize)) {
    fn rec(v: usize, n: usize, blocks: usize, assign: &mut Vec<usize>, f: &mut dyn FnMut(&[usize], usize)) {
        if v == n {
            f(assign, blocks);
            return;
        }
        for b in 0..=blocks {
            assign[v] = b;
            rec(v + 1, n, blocks.max(b + 1), assign, f);
        }
    }
    let mut assign = vec![0; n];
    rec(0, n, 0, &mut assign, &mut f);
}

/// `chi[m]` for m in 0..=n by enumerating every partition; `chi[0]` is
/// unused.
pub fn brute_force_chi(g: &ConflictGraph) -> Vec<usize> {
    let n = g.n();
    let mut best = vec![usize::MAX; n + 1];
    for_each_partition(n, |assign, blocks| {
        if g.edges().iter().any(|&(u, v)| assign[u] == assign[v]) {
            return;
        }
        let mut sizes = vec![0; blocks];
        for &b in assign {
            sizes[b] += 1;
        }
        let largest = sizes.iter().copied().max().unwrap_or(0);
        for m in largest.max(1)..=n {
            best[m] = best[m].min(blocks);
        }
    });
    best
}

/// One representative per isomorphism class of graphs on `n` vertices.
pub fn graphs_up_to_isomorphism(n: usize) -> Vec<ConflictGraph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let perms = permutations(n);
    let canonical = |mask: u32| -> u32 {
        perms
            .iter()
            .map(|p| {
                pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .fold(0u32, |acc, (_, &(u, v))| {
                        let (a, b) = (p[u].min(p[v]), p[u].max(p[v]));
                        acc | 1 << pairs.iter().position(|&q| q == (a, b)).unwrap()
                    })
            })
            .min()
            .unwrap()
    };
    let mut seen = std::collections::BTreeSet::new();
    for mask in 0..(1u32 << pairs.len()) {
        seen.insert(canonical(mask));
    }
    seen.into_iter()
        .map(|mask| {
            let edges = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &e)| e);
            ConflictGraph::from_edges(n, edges).unwrap()
        })
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Named graphs on at most 8 vertices.
pub fn named_small_graphs() -> Vec<(String, ConflictGraph)> {
    let mut out = Vec::new();
    for n in 1..=8 {
        out.push((format!("K{n}"), ConflictGraph::complete(n)));
        out.push((format!("E{n}"), ConflictGraph::empty(n)));
        out.push((format!("P{n}"), ConflictGraph::path(n)));
        if n >= 3 {
            out.push((format!("C{n}"), ConflictGraph::cycle(n).unwrap()));
        }
        if n >= 2 {
            let star = ConflictGraph::from_edges(n, (1..n).map(|v| (0, v))).unwrap();
            out.push((format!("star{n}"), star));
        }
        if n >= 4 {
            let rim = (1..n).map(|v| (v, if v + 1 < n { v + 1 } else { 1 }));
            let wheel = ConflictGraph::from_edges(n, (1..n).map(|v| (0, v)).chain(rim)).unwrap();
            out.push((format!("wheel{n}"), wheel));
        }
    }
    let k33 = ConflictGraph::from_edges(6, (0..3).flat_map(|u| (3..6).map(move |v| (u, v)))).unwrap();
    out.push(("K3,3".into(), k33));
    out.push(("cube".into(), gen_hamming(3, 1).unwrap()));
    out.push(("K(4,2)".into(), gen_kneser(4, 2).unwrap()));
    // K6 minus a perfect matching
    let octahedron = (0..6usize)
        .flat_map(|u| (u + 1..6).map(move |v| (u, v)))
        .filter(|&(u, v)| !(v == u + 1 && u % 2 == 0));
    out.push(("octahedron".into(), ConflictGraph::from_edges(6, octahedron).unwrap()));
    out
}

/// Dense `n × n` copy of a constraint matrix.
fn dense_rows(block: &PreparedBlock, n: usize) -> Vec<DMatrix<f64>> {
    block
        .rows
        .iter()
        .map(|c| {
            let mut a = DMatrix::zeros(n, n);
            for &(i, j, v) in c.matrix.entries() {
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
            a
        })
        .collect()
}

fn frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

/// Dense dual residual `S - C + Σ y A + Σ v B`.
pub fn dense_residual(state: &SolverState, prep: &PreparedModel) -> DMatrix<f64> {
    let n = prep.dim;
    let mut r = state.s.as_matrix() - prep.c.as_matrix();
    let mut add = |block: &PreparedBlock, mult: &[f64]| {
        for (a, &y) in dense_rows(block, n).iter().zip(mult) {
            r += a * y;
        }
    };
    if let Some(b) = &prep.edge_block {
        add(b, &state.y1);
    }
    for b in &prep.eq_blocks {
        add(b, &state.y2[b.offset..b.offset + b.len()]);
    }
    for b in &prep.ineq_blocks {
        add(b, &state.v[b.offset..b.offset + b.len()]);
    }
    r
}

/// Gram matrix and gradient `μ⟨A_i, X⟩ + ⟨A_i, R⟩ - μ b_i` of a block.
fn gram_and_gradient(block: &PreparedBlock, x: &SymMatrix, r: &DMatrix<f64>, mu: f64) -> (DMatrix<f64>, DVector<f64>) {
    let rows = dense_rows(block, x.order());
    let k = rows.len();
    let gram = DMatrix::from_fn(k, k, |i, j| frob(&rows[i], &rows[j]));
    let grad = DVector::from_fn(k, |i, _| {
        mu * frob(&rows[i], x.as_matrix()) + frob(&rows[i], r) - mu * block.rows[i].rhs
    });
    (gram, grad)
}

/// Exact minimizer of the augmented Lagrangian over one equality block by a
/// dense LU solve; returns the new multipliers.
pub fn reference_equality(block: &PreparedBlock, y: &[f64], x: &SymMatrix, r: &DMatrix<f64>, mu: f64) -> Vec<f64> {
    let (gram, grad) = gram_and_gradient(block, x, r, mu);
    let delta = gram.lu().solve(&(-grad)).expect("block Gram matrix is nonsingular");
    y.iter().zip(delta.iter()).map(|(a, d)| a + d).collect()
}

/// Exact minimizer over `v >= 0` for one inequality block: separable when
/// the Gram matrix is diagonal, otherwise by enumerating active sets.
pub fn reference_inequality(block: &PreparedBlock, v: &[f64], x: &SymMatrix, r: &DMatrix<f64>, mu: f64) -> Vec<f64> {
    let (gram, grad) = gram_and_gradient(block, x, r, mu);
    let k = v.len();
    let old = DVector::from_column_slice(v);
    // minimize ½ wᵀ G w + qᵀ w over w >= 0
    let q = &grad - &gram * &old;
    let off_diagonal = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j);
    if off_diagonal.clone().all(|(i, j)| gram[(i, j)].abs() < 1e-14) {
        return (0..k).map(|i| (-q[i] / gram[(i, i)]).max(0.0)).collect();
    }
    assert!(k <= 14, "active-set enumeration needs a small block, got {k}");
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << k) {
        let active: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
        let mut w = vec![0.0; k];
        if !active.is_empty() {
            let sub = DMatrix::from_fn(active.len(), active.len(), |a, b| gram[(active[a], active[b])]);
            let rhs = DVector::from_fn(active.len(), |a, _| -q[active[a]]);
            let Some(sol) = sub.lu().solve(&rhs) else { continue };
            if sol.iter().any(|&s| s < -1e-12) {
                continue;
            }
            for (a, &i) in active.iter().enumerate() {
                w[i] = sol[a].max(0.0);
            }
        }
        let wv = DVector::from_column_slice(&w);
        let value = 0.5 * wv.dot(&(&gram * &wv)) + q.dot(&wv);
        if best.as_ref().is_none_or(|(b, _)| value < *b - 1e-15) {
            best = Some((value, w));
        }
    }
    best.expect("w = 0 is always feasible").1
}

/// Largest absolute difference relative to the scale of the reference.
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

/// Runs `update_y` then `update_v` from a seeded random state and replays
/// both block by block with the dense references. Returns the largest
/// relative difference over all multipliers, or `None` when some block has
/// a singular Gram matrix and is handled by coordinate descent instead.
pub fn kernel_discrepancy(model: &bcsdp::relax::SdpModel, seed: u64) -> Option<f64> {
    use bcsdp::solver::{update_v, update_y, KernelKind};
    use rand::{Rng, SeedableRng};

    let prep = PreparedModel::new(model);
    let blocks = prep.edge_block.iter().chain(&prep.eq_blocks).chain(&prep.ineq_blocks);
    if blocks.clone().any(|b| b.kind() == KernelKind::Coordinate) {
        return None;
    }
    let n = prep.dim;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut sym = |scale: f64| {
        let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-scale..scale));
        SymMatrix::from_dense((&a + a.transpose()) * 0.5)
    };
    let x = sym(1.0);
    let b = sym(1.0);
    let s = SymMatrix::from_dense(b.as_matrix() * b.as_matrix());
    let mut state = SolverState::new(&prep, x, 0.5 + seed as f64 % 3.0);
    state.s = s;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    state.y1.iter_mut().for_each(|y| *y = rng.random_range(-1.0..1.0));
    state.y2.iter_mut().for_each(|y| *y = rng.random_range(-1.0..1.0));
    state.v.iter_mut().for_each(|v| *v = rng.random_range(0.0..1.0));
    state.sync(&prep);

    let mut reference = state.clone();
    let mu = state.mu;
    if let Some(block) = &prep.edge_block {
        let r = dense_residual(&reference, &prep);
        reference.y1 = reference_equality(block, &reference.y1, &reference.x, &r, mu);
    }
    for block in &prep.eq_blocks {
        let r = dense_residual(&reference, &prep);
        let range = block.offset..block.offset + block.len();
        let new = reference_equality(block, &reference.y2[range.clone()], &reference.x, &r, mu);
        reference.y2[range].copy_from_slice(&new);
    }
    update_y(&mut state, &prep);
    let mut worst = rel_diff(&state.y1, &reference.y1).max(rel_diff(&state.y2, &reference.y2));

    // continue the reference from the library's y so the v-step is compared
    // on identical input
    reference.y1 = state.y1.clone();
    reference.y2 = state.y2.clone();
    for block in &prep.ineq_blocks {
        let r = dense_residual(&reference, &prep);
        let range = block.offset..block.offset + block.len();
        let new = reference_inequality(block, &reference.v[range.clone()], &reference.x, &r, mu);
        reference.v[range].copy_from_slice(&new);
    }
    update_v(&mut state, &prep);
    worst = worst.max(rel_diff(&state.v, &reference.v));
    Some(worst)
}
