//! Constraint blocks with the linear-algebra kernel their Gram matrix
//! admits.

use std::collections::HashMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::linalg::SymMatrix;
use crate::relax::{Constraint, SdpModel, Sense};

/// Relative tolerance for recognising Gram structure.
const STRUCTURE_TOL: f64 = 1e-12;
/// Largest equality block factorized densely.
const DENSE_LIMIT: usize = 2500;
/// Gauss-Seidel sweeps per update for unstructured blocks.
const SWEEPS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelKind {
    /// Gram matrix is diagonal.
    Diagonal,
    /// Gram matrix is `aI + bJ`.
    Uniform { a: f64, b: f64 },
    /// Dense Cholesky factor of the Gram matrix.
    Dense,
    /// Cyclic coordinate descent.
    Coordinate,
}

/// Sparse Gram matrix of a set of rows: diagonal plus nonzero off-diagonal
/// pairs `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGram {
    pub diag: Vec<f64>,
    pub off: HashMap<(usize, usize), f64>,
}

impl SparseGram {
    pub fn new(rows: &[Constraint]) -> Self {
        let mut touching: HashMap<(usize, usize), Vec<(usize, f64)>> = HashMap::new();
        for (r, c) in rows.iter().enumerate() {
            for &(i, j, v) in c.matrix.entries() {
                touching.entry((i, j)).or_default().push((r, v));
            }
        }
        let diag = rows.iter().map(|c| c.matrix.norm_sq()).collect();
        let mut off: HashMap<(usize, usize), f64> = HashMap::new();
        for (&(i, j), list) in &touching {
            let weight = if i == j { 1.0 } else { 2.0 };
            for (a, &(r, u)) in list.iter().enumerate() {
                for &(s, w) in &list[a + 1..] {
                    let key = (r.min(s), r.max(s));
                    *off.entry(key).or_default() += weight * u * w;
                }
            }
        }
        off.retain(|_, v| *v != 0.0);
        SparseGram { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut g = DMatrix::from_diagonal(&DVector::from_column_slice(&self.diag));
        for (&(i, j), &v) in &self.off {
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
        g
    }

    fn scale(&self) -> f64 {
        self.diag.iter().fold(0.0_f64, |m, &d| m.max(d.abs())).max(1e-300)
    }

    pub fn is_diagonal(&self) -> bool {
        let tol = STRUCTURE_TOL * self.scale();
        self.off.values().all(|v| v.abs() <= tol)
    }

    /// `(a, b)` when the Gram matrix is `aI + bJ` up to tolerance.
    pub fn uniform(&self) -> Option<(f64, f64)> {
        let k = self.len();
        if k < 2 {
            return None;
        }
        let tol = STRUCTURE_TOL * self.scale();
        let pairs = k * (k - 1) / 2;
        if self.off.len() != pairs {
            return None;
        }
        let b = *self.off.values().next()?;
        let d = self.diag[0];
        if self.off.values().any(|v| (v - b).abs() > tol) || self.diag.iter().any(|x| (x - d).abs() > tol) {
            return None;
        }
        Some((d - b, b))
    }

    pub fn is_identity(&self) -> bool {
        let tol = STRUCTURE_TOL * self.scale();
        self.is_diagonal() && self.diag.iter().all(|d| (d - 1.0).abs() <= tol)
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Kernel {
    Diagonal(Vec<f64>),
    Uniform { a: f64, b: f64 },
    Dense(Cholesky<f64, Dyn>),
    Coordinate(Vec<f64>),
}

impl Kernel {
    fn kind(&self) -> KernelKind {
        match self {
            Kernel::Diagonal(_) => KernelKind::Diagonal,
            Kernel::Uniform { a, b } => KernelKind::Uniform { a: *a, b: *b },
            Kernel::Dense(_) => KernelKind::Dense,
            Kernel::Coordinate(_) => KernelKind::Coordinate,
        }
    }
}

/// A block of rows sharing one multiplier update.
#[derive(Debug, Clone)]
pub struct PreparedBlock {
    pub label: String,
    pub rows: Vec<Constraint>,
    /// Offset of this block's multipliers inside the state vector.
    pub offset: usize,
    pub(crate) kernel: Kernel,
}

impl PreparedBlock {
    fn new(label: &str, rows: Vec<Constraint>, offset: usize, equality: bool) -> Self {
        let gram = SparseGram::new(&rows);
        let kernel = if gram.is_diagonal() {
            Kernel::Diagonal(gram.diag.clone())
        } else if let Some((a, b)) = gram.uniform().filter(|&(a, b)| a > 0.0 && (equality || b >= 0.0)) {
            Kernel::Uniform { a, b }
        } else if equality && rows.len() <= DENSE_LIMIT {
            match Cholesky::new(gram.to_dense()) {
                Some(ch) => Kernel::Dense(ch),
                None => Kernel::Coordinate(gram.diag.clone()),
            }
        } else {
            Kernel::Coordinate(gram.diag.clone())
        };
        PreparedBlock {
            label: label.to_string(),
            rows,
            offset,
            kernel,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn kind(&self) -> KernelKind {
        self.kernel.kind()
    }

    /// `⟨A_i, μX + R⟩ - μ b_i` for every row.
    fn gradient(&self, x: &SymMatrix, r: &SymMatrix, mu: f64) -> Vec<f64> {
        self.rows
            .iter()
            .map(|c| mu * c.matrix.dot(x) + c.matrix.dot(r) - mu * c.rhs)
            .collect()
    }

    fn apply_adjoint(&self, delta: &[f64], r: &mut SymMatrix) {
        for (c, &d) in self.rows.iter().zip(delta) {
            if d != 0.0 {
                c.matrix.add_to(d, r);
            }
        }
    }

    /// Equality update: minimizes the augmented Lagrangian exactly over this
    /// block's multipliers. `r` is the dual residual and is kept current.
    pub(crate) fn update_equality(&self, y: &mut [f64], x: &SymMatrix, r: &mut SymMatrix, mu: f64) {
        let k = self.len();
        if let Kernel::Coordinate(diag) = &self.kernel {
            for _ in 0..SWEEPS {
                for i in 0..k {
                    let c = &self.rows[i];
                    let g = mu * c.matrix.dot(x) + c.matrix.dot(r) - mu * c.rhs;
                    let d = -g / diag[i];
                    y[i] += d;
                    c.matrix.add_to(d, r);
                }
            }
            return;
        }
        // G Δy = -(A(μX + R) - μb)
        let g = self.gradient(x, r, mu);
        let delta: Vec<f64> = match &self.kernel {
            Kernel::Diagonal(diag) => g.iter().zip(diag).map(|(gi, d)| -gi / d).collect(),
            Kernel::Uniform { a, b } => {
                let sum: f64 = g.iter().sum();
                let coef = b / (a + k as f64 * b);
                g.iter().map(|gi| -(gi - coef * sum) / a).collect()
            }
            Kernel::Dense(ch) => {
                let rhs = DVector::from_iterator(k, g.iter().map(|v| -v));
                ch.solve(&rhs).iter().copied().collect()
            }
            Kernel::Coordinate(_) => unreachable!(),
        };
        for (yi, d) in y.iter_mut().zip(&delta) {
            *yi += d;
        }
        self.apply_adjoint(&delta, r);
    }

    /// Inequality update: minimizes the augmented Lagrangian over `v >= 0`.
    pub(crate) fn update_inequality(&self, v: &mut [f64], x: &SymMatrix, r: &mut SymMatrix, mu: f64) {
        let k = self.len();
        match &self.kernel {
            Kernel::Diagonal(diag) => {
                let g = self.gradient(x, r, mu);
                let delta: Vec<f64> = (0..k).map(|i| (v[i] - g[i] / diag[i]).max(0.0) - v[i]).collect();
                for i in 0..k {
                    v[i] += delta[i];
                }
                self.apply_adjoint(&delta, r);
            }
            Kernel::Uniform { a, b } => {
                // q = g - G v_old; minimize ½ vᵀ(aI + bJ)v + qᵀv over v >= 0
                let g = self.gradient(x, r, mu);
                let sum_old: f64 = v.iter().sum();
                let q: Vec<f64> = (0..k).map(|i| g[i] - a * v[i] - b * sum_old).collect();
                let new = uniform_nonneg_qp(*a, *b, &q);
                let delta: Vec<f64> = (0..k).map(|i| new[i] - v[i]).collect();
                v.copy_from_slice(&new);
                self.apply_adjoint(&delta, r);
            }
            Kernel::Dense(_) | Kernel::Coordinate(_) => {
                let diag: Vec<f64> = self.rows.iter().map(|c| c.matrix.norm_sq()).collect();
                for _ in 0..SWEEPS {
                    for i in 0..k {
                        let c = &self.rows[i];
                        let g = mu * c.matrix.dot(x) + c.matrix.dot(r) - mu * c.rhs;
                        let next = (v[i] - g / diag[i]).max(0.0);
                        let d = next - v[i];
                        if d != 0.0 {
                            v[i] = next;
                            c.matrix.add_to(d, r);
                        }
                    }
                }
            }
        }
    }
}

/// Exact minimizer of `½ vᵀ(aI + bJ)v + qᵀv` over `v >= 0` for `a > 0`,
/// `b >= 0`.
///
/// Optimality gives `v_i = max(0, -(q_i + b s)/a)` with `s = Σ v_i`. The
/// active set is a prefix of the coordinates sorted by `q`, so the prefix
/// whose implied `s` is self-consistent is found by one scan.
pub fn uniform_nonneg_qp(a: f64, b: f64, q: &[f64]) -> Vec<f64> {
    let k = q.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| q[i].total_cmp(&q[j]).then(i.cmp(&j)));
    let mut prefix = 0.0;
    let mut s = 0.0;
    for j in 0..=k {
        // active set = first j coordinates of `order`
        let cand = if j == 0 { 0.0 } else { -prefix / (a + j as f64 * b) };
        let inside_ok = j == 0 || q[order[j - 1]] + b * cand < 0.0;
        let outside_ok = j == k || q[order[j]] + b * cand >= 0.0;
        if inside_ok && outside_ok {
            s = cand;
            break;
        }
        if j < k {
            prefix += q[order[j]];
        }
    }
    q.iter().map(|&qi| (-(qi + b * s) / a).max(0.0)).collect()
}

/// Solver-side view of a model: minimization data and prepared blocks.
#[derive(Debug, Clone)]
pub struct PreparedModel {
    pub dim: usize,
    /// Objective in minimization form.
    pub c: SymMatrix,
    /// `+1` for minimization, `-1` when the model maximizes.
    pub sign: f64,
    /// Edge equalities (multipliers `y1`).
    pub edge_block: Option<PreparedBlock>,
    /// Remaining equality blocks (multipliers `y2`).
    pub eq_blocks: Vec<PreparedBlock>,
    /// Inequality blocks (multipliers `v`).
    pub ineq_blocks: Vec<PreparedBlock>,
    pub rhs_norm: f64,
    pub c_norm: f64,
}

impl PreparedModel {
    pub fn new(model: &SdpModel) -> Self {
        let sign = match model.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let c = model.objective.to_dense(model.dim).scaled(sign);
        let edge_block =
            (!model.eq_graph.is_empty()).then(|| PreparedBlock::new("edges", model.eq_graph.clone(), 0, true));
        let mut offset = 0;
        let eq_blocks = model
            .eq_other
            .iter()
            .map(|b| {
                let p = PreparedBlock::new(&b.label, b.rows.clone(), offset, true);
                offset += b.len();
                p
            })
            .collect();
        offset = 0;
        let ineq_blocks = model
            .ineq
            .iter()
            .map(|b| {
                let p = PreparedBlock::new(&b.label, b.rows.clone(), offset, false);
                offset += b.len();
                p
            })
            .collect();
        let rhs_norm = model
            .eq_graph
            .iter()
            .chain(model.eq_other_rows())
            .chain(model.ineq_rows())
            .map(|c| c.rhs * c.rhs)
            .sum::<f64>()
            .sqrt();
        let c_norm = c.frobenius_norm();
        PreparedModel {
            dim: model.dim,
            c,
            sign,
            edge_block,
            eq_blocks,
            ineq_blocks,
            rhs_norm,
            c_norm,
        }
    }

    pub fn y1_len(&self) -> usize {
        self.edge_block.as_ref().map_or(0, PreparedBlock::len)
    }

    pub fn y2_len(&self) -> usize {
        self.eq_blocks.iter().map(PreparedBlock::len).sum()
    }

    pub fn v_len(&self) -> usize {
        self.ineq_blocks.iter().map(PreparedBlock::len).sum()
    }

    pub fn block(&self, label: &str) -> Option<&PreparedBlock> {
        self.edge_block
            .iter()
            .chain(self.eq_blocks.iter())
            .chain(self.ineq_blocks.iter())
            .find(|b| b.label == label)
    }
}

/// Checks each structure flag of `model` against its emitted matrices.
/// Returns the names of flags that are set but do not hold.
pub fn verify_structure(model: &SdpModel) -> Vec<&'static str> {
    let mut failed = Vec::new();
    let tags = model.structure;
    if tags.a1_edge_indicator && !SparseGram::new(&model.eq_graph).is_identity() {
        failed.push("a1_edge_indicator");
    }
    if tags.a2_diagonal_chain {
        let ok = model.eq_other.first().is_some_and(|b| {
            let g = SparseGram::new(&b.rows);
            let k = g.len();
            let tol = STRUCTURE_TOL * 2.0;
            b.label == "diagonal"
                && g.diag.iter().all(|d| (d - 2.0).abs() <= tol)
                && g.off.len() == k * (k - 1) / 2
                && g.off.values().all(|v| (v - 1.0).abs() <= tol)
        });
        if !ok {
            failed.push("a2_diagonal_chain");
        }
    }
    if tags.b_row_sum {
        let ok = model.ineq.first().is_some_and(|b| {
            let g = SparseGram::new(&b.rows);
            g.len() == 1 || g.uniform().is_some()
        });
        if !ok {
            failed.push("b_row_sum");
        }
    }
    if tags.objective_single_entry {
        let e = model.objective.entries();
        if e.len() != 1 || e[0].0 != e[0].1 {
            failed.push("objective_single_entry");
        }
    }
    failed
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_qp(g: &DMatrix<f64>, q: &[f64]) -> Vec<f64> {
        // enumerate active sets; keep the KKT point
        let k = q.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 0u32..(1 << k) {
            let idx: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
            let mut v = vec![0.0; k];
            if !idx.is_empty() {
                let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| g[(idx[r], idx[c])]);
                let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&i| -q[i]));
                let sol = sub.lu().solve(&rhs).unwrap();
                if sol.iter().any(|&s| s < 0.0) {
                    continue;
                }
                for (a, &i) in idx.iter().enumerate() {
                    v[i] = sol[a];
                }
            }
            let vv = DVector::from_column_slice(&v);
            let obj = 0.5 * (vv.transpose() * g * &vv)[(0, 0)] + q.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
            if best.as_ref().is_none_or(|(o, _)| obj < *o) {
                best = Some((obj, v));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn uniform_qp_matches_enumeration() {
        let (a, b) = (1.5, 0.5);
        for q in [
            vec![-1.0, 2.0, -3.0, 0.5],
            vec![1.0, 2.0, 3.0, 0.5],
            vec![-1.0, -1.0, -1.0, -1.0],
            vec![0.0, -0.2, 0.1, -5.0],
        ] {
            let g = DMatrix::from_fn(4, 4, |i, j| if i == j { a + b } else { b });
            let fast = uniform_nonneg_qp(a, b, &q);
            let slow = brute_force_qp(&g, &q);
            for (x, y) in fast.iter().zip(&slow) {
                assert!((x - y).abs() < 1e-12, "{fast:?} vs {slow:?}");
            }
        }
    }

    #[test]
    fn gram_classification() {
        use crate::relax::SparseSym;
        let rows = vec![
            Constraint::new(SparseSym::single(0, 1, 1.0), 0.0),
            Constraint::new(SparseSym::single(0, 2, 1.0), 0.0),
        ];
        assert!(SparseGram::new(&rows).is_diagonal());
        let chain: Vec<_> = (1..4)
            .map(|v| Constraint::new(SparseSym::from_entries([(v, v, 1.0), (0, 0, -1.0)]), 0.0))
            .collect();
        assert_eq!(SparseGram::new(&chain).uniform(), Some((1.0, 1.0)));
    }
}
