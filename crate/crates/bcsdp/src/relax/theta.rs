use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ConflictGraph;

use super::bounded::non_edges;
use super::model::{BoundSemantics, Constraint, ConstraintBlock, SdpModel, Sense, SparseSym, StructureTags, Transform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThetaVariant {
    /// Lovász theta.
    Lovasz,
    /// Adds entrywise nonnegativity (Schrijver); never larger than Lovász.
    Strict,
    /// Relaxes the zero pattern to `<= 0` (Szegedy); never smaller.
    Strong,
}

/// Theta of the complement of `g`, the vector-chromatic lower bound on the
/// chromatic number of `g`:
///
/// ```text
/// max ⟨J, X⟩  s.t.  tr X = 1,  X_uv = 0 for non-adjacent u, v in g,  X ⪰ 0
/// ```
///
/// `Strict` adds `X_uv >= 0` on the edges of `g`; `Strong` replaces the zero
/// pattern by `X_uv <= 0`.
pub fn build_theta(g: &ConflictGraph, variant: ThetaVariant) -> Result<(SdpModel, BoundSemantics)> {
    let n = g.n();
    if n == 0 {
        return Err(Error::InvalidArgument("graph has no vertices".into()));
    }
    let pattern = non_edges(g);
    let trace = Constraint::new(SparseSym::from_entries((0..n).map(|v| (v, v, 1.0))), 1.0).normalized();
    let mut eq_graph = Vec::new();
    let mut ineq = Vec::new();
    match variant {
        ThetaVariant::Lovasz | ThetaVariant::Strict => {
            eq_graph = pattern
                .iter()
                .map(|&(u, v)| Constraint::new(SparseSym::single(u, v, 1.0 / SQRT_2), 0.0))
                .collect();
            if variant == ThetaVariant::Strict {
                let rows: Vec<_> = g
                    .edges()
                    .iter()
                    .map(|&(u, v)| Constraint::new(SparseSym::single(u, v, 1.0 / SQRT_2), 0.0))
                    .collect();
                ineq.push(ConstraintBlock::new("nonneg", rows));
            }
        }
        ThetaVariant::Strong => {
            let rows: Vec<_> = pattern
                .iter()
                .map(|&(u, v)| Constraint::new(SparseSym::single(u, v, -1.0 / SQRT_2), 0.0))
                .collect();
            ineq.push(ConstraintBlock::new("nonpos", rows));
        }
    }
    ineq.retain(|b| !b.is_empty());
    let model = SdpModel {
        dim: n,
        objective: SparseSym::from_entries((0..n).flat_map(|u| (u..n).map(move |v| (u, v, 1.0)))),
        sense: Sense::Maximize,
        eq_graph,
        eq_other: vec![ConstraintBlock::new("trace", vec![trace])],
        ineq,
        structure: StructureTags {
            a1_edge_indicator: true,
            ..StructureTags::default()
        },
    };
    let sem = BoundSemantics {
        transform: Transform::Direct,
        anchor_vertex: 0,
        scale: 1.0,
        offset: 0.0,
        original_sense: Sense::Maximize,
        value_map: "bound = ⟨J, X⟩".into(),
    };
    Ok((model, sem))
}
