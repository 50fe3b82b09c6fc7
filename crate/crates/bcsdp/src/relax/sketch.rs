//! Relaxations stated over a matrix `Y` with `Y - J ⪰ 0`, `Y_vv = t`, and
//! their conversion to standard form.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

use super::model::{BoundSemantics, Constraint, ConstraintBlock, SdpModel, Sense, SparseSym, StructureTags, Transform};

/// One linear row `⟨coeffs, Y⟩ + t_coeff · t  (= or <=)  rhs`, where `t` is
/// read off the diagonal entry `(t_anchor, t_anchor)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub coeffs: SparseSym,
    pub t_coeff: f64,
    pub t_anchor: usize,
    pub rhs: f64,
}

impl LinearRow {
    pub fn new(coeffs: SparseSym, t_coeff: f64, t_anchor: usize, rhs: f64) -> Self {
        LinearRow {
            coeffs,
            t_coeff,
            t_anchor,
            rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SketchBlock {
    pub label: String,
    pub rows: Vec<LinearRow>,
}

impl SketchBlock {
    pub fn new(label: impl Into<String>, rows: Vec<LinearRow>) -> Self {
        SketchBlock {
            label: label.into(),
            rows,
        }
    }
}

/// `min t` subject to `Y_vv = t`, `Y_uv = 0` on `edges`, the listed
/// equality and `<=` blocks, and `Y - J ⪰ 0`.
///
/// Indices `0..n` address `Y`. Indices `n..n + extra` address auxiliary
/// coordinates that are not shifted by `J` (their block only has to be PSD).
#[derive(Debug, Clone, PartialEq)]
pub struct Sketch {
    pub n: usize,
    pub extra: usize,
    pub anchor: usize,
    pub edges: Vec<(usize, usize)>,
    pub equalities: Vec<SketchBlock>,
    pub inequalities: Vec<SketchBlock>,
    /// The first inequality block is one row-sum row per vertex with unit
    /// coefficients.
    pub row_sum_first: bool,
}

impl Sketch {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Self {
        Sketch {
            n,
            extra: 0,
            anchor: 0,
            edges,
            equalities: Vec::new(),
            inequalities: Vec::new(),
            row_sum_first: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.n + self.extra
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("sketch has no vertices".into()));
        }
        if self.anchor >= self.n {
            return Err(Error::InvalidArgument(format!(
                "anchor {} outside 0..{}",
                self.anchor, self.n
            )));
        }
        let dim = self.dim();
        let rows = self
            .equalities
            .iter()
            .chain(self.inequalities.iter())
            .flat_map(|b| b.rows.iter());
        for row in rows {
            if row.t_anchor >= self.n || row.coeffs.max_index().is_some_and(|j| j >= dim) {
                return Err(Error::InvalidArgument(
                    "sketch row addresses an index outside the variable".into(),
                ));
            }
        }
        if self.edges.iter().any(|&(u, v)| u >= v || v >= self.n) {
            return Err(Error::InvalidArgument("sketch edge out of range".into()));
        }
        Ok(())
    }

    /// `⟨coeffs, J_Y⟩`: the constant picked up when `Y = X + J` is
    /// substituted, counting only entries inside the `Y` block.
    fn shift_constant(&self, coeffs: &SparseSym) -> f64 {
        coeffs
            .entries()
            .iter()
            .filter(|&&(_, j, _)| j < self.n)
            .map(|&(i, j, v)| if i == j { v } else { 2.0 * v })
            .sum()
    }
}

fn edge_row(u: usize, v: usize) -> Constraint {
    // √2 X_uv = -√2, unit Frobenius norm
    Constraint::new(SparseSym::single(u, v, 1.0 / SQRT_2), -SQRT_2)
}

fn diagonal_chain(n: usize, anchor: usize, offset: usize) -> ConstraintBlock {
    let rows = (0..n)
        .filter(|&v| v != anchor)
        .map(|v| {
            Constraint::new(
                SparseSym::from_entries([(v + offset, v + offset, 1.0), (anchor + offset, anchor + offset, -1.0)]),
                0.0,
            )
        })
        .collect();
    ConstraintBlock::new("diagonal", rows)
}

fn nonzero(rows: Vec<Constraint>, label: &str) -> Result<Vec<Constraint>> {
    let mut out = Vec::with_capacity(rows.len());
    for c in rows {
        if c.matrix.is_empty() {
            // 0 = rhs or 0 >= rhs; the caller decides which via the sign
            if c.rhs > 1e-12 {
                return Err(Error::Infeasible(format!("constant row in block {label} cannot hold")));
            }
            continue;
        }
        out.push(c.normalized());
    }
    Ok(out)
}

/// Converts a sketch into a standard-form model.
///
/// `Scaled` uses the single variable `X = Y - J` with objective `X_ww` and
/// value `X_ww + 1`. `Rewritten` uses the block variable `diag(Y, Z)` with
/// `Z = Y - J` enforced entrywise, objective `Y_ww`.
pub fn to_standard_form(sketch: &Sketch, transform: Transform) -> Result<(SdpModel, BoundSemantics)> {
    sketch.check()?;
    let n = sketch.n;
    let w = sketch.anchor;
    match transform {
        Transform::Scaled => {
            let mut eq_other = vec![diagonal_chain(n, w, 0)];
            for block in &sketch.equalities {
                let rows = block
                    .rows
                    .iter()
                    .map(|r| {
                        let a = r.coeffs.plus(&SparseSym::single(r.t_anchor, r.t_anchor, r.t_coeff));
                        let constant = sketch.shift_constant(&r.coeffs) + r.t_coeff;
                        Constraint::new(a, r.rhs - constant)
                    })
                    .collect::<Vec<_>>();
                let rows = equality_rows(rows, &block.label)?;
                eq_other.push(ConstraintBlock::new(block.label.clone(), rows));
            }
            let mut ineq = Vec::new();
            for block in &sketch.inequalities {
                let rows = block
                    .rows
                    .iter()
                    .map(|r| {
                        let a = r.coeffs.plus(&SparseSym::single(r.t_anchor, r.t_anchor, r.t_coeff));
                        let constant = sketch.shift_constant(&r.coeffs) + r.t_coeff;
                        Constraint::new(a.scaled(-1.0), constant - r.rhs)
                    })
                    .collect();
                ineq.push(ConstraintBlock::new(block.label.clone(), nonzero(rows, &block.label)?));
            }
            // with n = m = 1 the row-sum row vanishes and the block is dropped
            let row_sum_first = sketch.row_sum_first && ineq.first().is_some_and(|b| !b.is_empty());
            let model = SdpModel {
                dim: sketch.dim(),
                objective: SparseSym::single(w, w, 1.0),
                sense: Sense::Minimize,
                eq_graph: sketch.edges.iter().map(|&(u, v)| edge_row(u, v)).collect(),
                eq_other: drop_empty(eq_other),
                ineq: drop_empty(ineq),
                structure: StructureTags {
                    a1_edge_indicator: true,
                    a2_diagonal_chain: n > 1,
                    b_row_sum: row_sum_first,
                    objective_single_entry: true,
                },
            };
            let sem = BoundSemantics {
                transform,
                anchor_vertex: w,
                scale: 1.0,
                offset: 1.0,
                original_sense: Sense::Minimize,
                value_map: format!("t = X[{w},{w}] + 1"),
            };
            Ok((model, sem))
        }
        Transform::Rewritten => {
            // Y block 0..n, Z block n..2n, auxiliary coordinates after both
            let place = |s: &SparseSym| {
                SparseSym::from_entries(s.entries().iter().map(|&(i, j, v)| {
                    let map = |k: usize| if k < n { k } else { k + n };
                    (map(i), map(j), v)
                }))
            };
            let mut eq_other = vec![diagonal_chain(n, w, n)];
            let link: Vec<Constraint> = (0..n)
                .flat_map(|i| (i..n).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let c = if i == j { 1.0 } else { 0.5 };
                    Constraint::new(SparseSym::from_entries([(i, j, c), (n + i, n + j, -c)]), 1.0).normalized()
                })
                .collect();
            eq_other.push(ConstraintBlock::new("link", link));
            for block in &sketch.equalities {
                let rows = block
                    .rows
                    .iter()
                    .map(|r| {
                        let a = place(&r.coeffs).plus(&SparseSym::single(r.t_anchor, r.t_anchor, r.t_coeff));
                        Constraint::new(a, r.rhs)
                    })
                    .collect();
                eq_other.push(ConstraintBlock::new(
                    block.label.clone(),
                    equality_rows(rows, &block.label)?,
                ));
            }
            let mut ineq = Vec::new();
            for block in &sketch.inequalities {
                let rows = block
                    .rows
                    .iter()
                    .map(|r| {
                        let a = place(&r.coeffs).plus(&SparseSym::single(r.t_anchor, r.t_anchor, r.t_coeff));
                        Constraint::new(a.scaled(-1.0), -r.rhs)
                    })
                    .collect();
                ineq.push(ConstraintBlock::new(block.label.clone(), nonzero(rows, &block.label)?));
            }
            // with n = m = 1 the row-sum row vanishes and the block is dropped
            let row_sum_first = sketch.row_sum_first && ineq.first().is_some_and(|b| !b.is_empty());
            let model = SdpModel {
                dim: 2 * n + sketch.extra,
                objective: SparseSym::single(w, w, 1.0),
                sense: Sense::Minimize,
                eq_graph: sketch.edges.iter().map(|&(u, v)| edge_row(n + u, n + v)).collect(),
                eq_other: drop_empty(eq_other),
                ineq: drop_empty(ineq),
                structure: StructureTags {
                    a1_edge_indicator: true,
                    a2_diagonal_chain: n > 1,
                    b_row_sum: row_sum_first,
                    objective_single_entry: true,
                },
            };
            let sem = BoundSemantics {
                transform,
                anchor_vertex: w,
                scale: 1.0,
                offset: 0.0,
                original_sense: Sense::Minimize,
                value_map: format!("t = Y[{w},{w}]"),
            };
            Ok((model, sem))
        }
        Transform::Direct => Err(Error::InvalidArgument(
            "sketches convert only to the scaled or rewritten form".into(),
        )),
    }
}

fn equality_rows(rows: Vec<Constraint>, label: &str) -> Result<Vec<Constraint>> {
    let mut out = Vec::with_capacity(rows.len());
    for c in rows {
        if c.matrix.is_empty() {
            if c.rhs.abs() > 1e-12 {
                return Err(Error::Infeasible(format!(
                    "constant equality in block {label} cannot hold"
                )));
            }
            continue;
        }
        out.push(c.normalized());
    }
    Ok(out)
}

fn drop_empty(blocks: Vec<ConstraintBlock>) -> Vec<ConstraintBlock> {
    blocks.into_iter().filter(|b| !b.is_empty()).collect()
}
