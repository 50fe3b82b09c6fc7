use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::linalg::SymMatrix;

/// Sparse symmetric matrix. Each stored `(i, j, value)` with `i <= j` places
/// `value` at both `(i, j)` and `(j, i)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseSym {
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    /// Collects entries, ordering each pair, summing repeats and dropping
    /// exact zeros.
    pub fn from_entries<I: IntoIterator<Item = (usize, usize, f64)>>(entries: I) -> Self {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, v) in entries {
            *map.entry((i.min(j), i.max(j))).or_default() += v;
        }
        SparseSym {
            entries: map
                .into_iter()
                .filter(|&(_, v)| v != 0.0)
                .map(|((i, j), v)| (i, j, v))
                .collect(),
        }
    }

    pub fn single(i: usize, j: usize, value: f64) -> Self {
        SparseSym::from_entries([(i, j, value)])
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.iter().map(|&(_, j, _)| j).max()
    }

    /// Frobenius inner product with a dense symmetric matrix.
    pub fn dot(&self, x: &SymMatrix) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * x.get(i, i) } else { 2.0 * v * x.get(i, j) })
            .sum()
    }

    /// `out += alpha * self`.
    pub fn add_to(&self, alpha: f64, out: &mut SymMatrix) {
        for &(i, j, v) in &self.entries {
            out.add_at(i, j, alpha * v);
        }
    }

    /// Frobenius inner product of two sparse symmetric matrices.
    pub fn frob_dot(&self, other: &SparseSym) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut sum = 0.0;
        while a < self.entries.len() && b < other.entries.len() {
            let (i, j, u) = self.entries[a];
            let (k, l, w) = other.entries[b];
            match (i, j).cmp(&(k, l)) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    sum += if i == j { u * w } else { 2.0 * u * w };
                    a += 1;
                    b += 1;
                }
            }
        }
        sum
    }

    pub fn norm_sq(&self) -> f64 {
        self.frob_dot(self)
    }

    /// `⟨self, J⟩`, the sum of all entries of the full matrix.
    pub fn total(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v } else { 2.0 * v })
            .sum()
    }

    pub fn scaled(&self, alpha: f64) -> SparseSym {
        SparseSym {
            entries: self.entries.iter().map(|&(i, j, v)| (i, j, alpha * v)).collect(),
        }
    }

    /// Sum with another sparse matrix.
    pub fn plus(&self, other: &SparseSym) -> SparseSym {
        SparseSym::from_entries(self.entries.iter().chain(other.entries.iter()).copied())
    }

    /// Shifts every index by `offset` (used to place a block inside a larger
    /// matrix variable).
    pub fn shifted(&self, offset: usize) -> SparseSym {
        SparseSym {
            entries: self
                .entries
                .iter()
                .map(|&(i, j, v)| (i + offset, j + offset, v))
                .collect(),
        }
    }

    pub fn to_dense(&self, n: usize) -> SymMatrix {
        let mut out = SymMatrix::zeros(n);
        self.add_to(1.0, &mut out);
        out
    }
}

/// `⟨matrix, X⟩ = rhs` for equalities, `⟨matrix, X⟩ >= rhs` for inequalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub matrix: SparseSym,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(matrix: SparseSym, rhs: f64) -> Self {
        Constraint { matrix, rhs }
    }

    /// Same constraint with its matrix scaled to unit Frobenius norm.
    pub fn normalized(self) -> Self {
        let norm = self.matrix.norm_sq().sqrt();
        if norm == 0.0 {
            return self;
        }
        Constraint {
            matrix: self.matrix.scaled(1.0 / norm),
            rhs: self.rhs / norm,
        }
    }
}

/// A labelled group of constraints. The solver updates the multipliers of a
/// block jointly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintBlock {
    pub label: String,
    pub rows: Vec<Constraint>,
}

impl ConstraintBlock {
    pub fn new(label: impl Into<String>, rows: Vec<Constraint>) -> Self {
        ConstraintBlock {
            label: label.into(),
            rows,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Algebraic identities the builders assert about their own output. The
/// solver re-checks every flag before trusting it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StructureTags {
    /// Edge equalities have Gram matrix `I`.
    pub a1_edge_indicator: bool,
    /// The first `eq_other` block is the diagonal chain `X_vv = X_ww` with
    /// Gram matrix `J + I`.
    pub a2_diagonal_chain: bool,
    /// The first inequality block holds one row-sum row per vertex with Gram
    /// matrix `aI + bJ`.
    pub b_row_sum: bool,
    /// The objective has a single nonzero entry on the diagonal.
    pub objective_single_entry: bool,
}

/// Standard-form SDP with explicit inequalities:
///
/// ```text
/// min/max ⟨C, X⟩  s.t.  ⟨A1_i, X⟩ = b1_i,  ⟨A2_i, X⟩ = b2_i,  ⟨B_i, X⟩ >= d_i,  X ⪰ 0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpModel {
    pub dim: usize,
    pub objective: SparseSym,
    pub sense: Sense,
    /// Equalities indexed by conflict-graph edges.
    pub eq_graph: Vec<Constraint>,
    pub eq_other: Vec<ConstraintBlock>,
    pub ineq: Vec<ConstraintBlock>,
    pub structure: StructureTags,
}

impl SdpModel {
    pub fn eq_other_rows(&self) -> impl Iterator<Item = &Constraint> {
        self.eq_other.iter().flat_map(|b| b.rows.iter())
    }

    pub fn ineq_rows(&self) -> impl Iterator<Item = &Constraint> {
        self.ineq.iter().flat_map(|b| b.rows.iter())
    }

    pub fn ineq_count(&self) -> usize {
        self.ineq.iter().map(ConstraintBlock::len).sum()
    }

    pub fn eq_count(&self) -> usize {
        self.eq_graph.len() + self.eq_other.iter().map(ConstraintBlock::len).sum::<usize>()
    }

    pub fn block(&self, label: &str) -> Option<&ConstraintBlock> {
        self.eq_other.iter().chain(self.ineq.iter()).find(|b| b.label == label)
    }

    pub fn objective_value(&self, x: &SymMatrix) -> f64 {
        self.objective.dot(x)
    }

    /// Largest violation of any constraint at `x` (equalities in absolute
    /// value, inequalities on the infeasible side only).
    pub fn max_violation(&self, x: &SymMatrix) -> f64 {
        let eq = self
            .eq_graph
            .iter()
            .chain(self.eq_other_rows())
            .map(|c| (c.matrix.dot(x) - c.rhs).abs());
        let ineq = self.ineq_rows().map(|c| (c.rhs - c.matrix.dot(x)).max(0.0));
        eq.chain(ineq).fold(0.0, f64::max)
    }

    /// Checks the symmetric-order invariant of every constraint matrix.
    pub fn is_well_formed(&self) -> bool {
        let fits = |s: &SparseSym| s.max_index().is_none_or(|j| j < self.dim);
        fits(&self.objective)
            && self.eq_graph.iter().all(|c| fits(&c.matrix) && c.matrix.nnz() == 1)
            && self.eq_other_rows().all(|c| fits(&c.matrix))
            && self.ineq_rows().all(|c| fits(&c.matrix))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transform {
    /// Single variable `X = Y - J` of order n.
    Scaled,
    /// Block variable `diag(Y, Z)` of order 2n with `Y - Z = J`.
    Rewritten,
    /// Model already in its natural variables (theta baselines).
    Direct,
}

/// How the model's objective maps back to a colouring lower bound:
/// `bound = scale * objective + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSemantics {
    pub transform: Transform,
    /// Vertex whose diagonal entry carries `t`.
    pub anchor_vertex: usize,
    pub scale: f64,
    pub offset: f64,
    pub original_sense: Sense,
    pub value_map: String,
}

impl BoundSemantics {
    pub fn value(&self, objective: f64) -> f64 {
        self.scale * objective + self.offset
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_dot_matches_dense() {
        let a = SparseSym::from_entries([(0, 1, 0.5), (1, 1, 2.0), (1, 0, 0.5)]);
        assert_eq!(a.entries(), &[(0, 1, 1.0), (1, 1, 2.0)]);
        let x = SymMatrix::from_rows(&[vec![1.0, 3.0], vec![3.0, 4.0]]);
        assert_eq!(a.dot(&x), 2.0 * 3.0 + 8.0);
        assert_eq!(a.dot(&x), a.to_dense(2).dot(&x));
        assert_eq!(a.norm_sq(), a.to_dense(2).dot(&a.to_dense(2)));
        assert_eq!(a.total(), 4.0);
    }

    #[test]
    fn frob_dot_on_disjoint_support_is_zero() {
        let a = SparseSym::single(0, 1, 1.0);
        let b = SparseSym::single(0, 2, 1.0);
        assert_eq!(a.frob_dot(&b), 0.0);
        assert_eq!(a.frob_dot(&a), 2.0);
    }
}
