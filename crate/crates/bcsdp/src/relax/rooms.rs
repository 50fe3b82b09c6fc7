use crate::error::{Error, Result};
use crate::graph::TimetablingInstance;

use super::bounded::{base_sketch, non_edges};
use super::model::{BoundSemantics, SdpModel, SparseSym, Transform};
use super::sketch::{to_standard_form, LinearRow, SketchBlock};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RoomOptions {
    /// Event pairs that must use the same room. For each pair `(v, v')` and
    /// rooms `r != r'`, `R_{v,r} + R_{v',r'} <= t`.
    pub stable_pairs: Vec<(usize, usize)>,
    pub transform: Option<Transform>,
}

/// Index of the room variable `R_{v,r}` inside the model's matrix variable.
pub fn room_index(n: usize, m: usize, v: usize, r: usize) -> usize {
    n + v * m + r
}

/// Bounded relaxation extended with room variables `R_{v,r}` (scaled by `t`
/// like `Y`): each event uses one room, two events in one period never share
/// a room, and unsuitable rooms are closed.
///
/// The room variables live on the diagonal of a trailing block of the matrix
/// variable, so their nonnegativity is implied by semidefiniteness.
pub fn build_room_assignment(inst: &TimetablingInstance, opts: &RoomOptions) -> Result<(SdpModel, BoundSemantics)> {
    inst.validate()?;
    let g = &inst.graph;
    let n = inst.n();
    let m = inst.m;
    if n == 0 {
        return Err(Error::InvalidArgument("instance has no events".into()));
    }
    for v in 0..n {
        if inst.compatible_rooms(v).is_empty() {
            return Err(Error::Infeasible(format!("no room suits event {v}")));
        }
    }
    for &(a, b) in &opts.stable_pairs {
        if a >= n || b >= n || a == b {
            return Err(Error::InvalidArgument(format!("invalid stable pair ({a}, {b})")));
        }
    }
    let room = |v: usize, r: usize| room_index(n, m, v, r);
    let mut sketch = base_sketch(g, Some(m), None, Some(non_edges(g)));
    sketch.extra = n * m;
    let w = sketch.anchor;

    let one_room = (0..n)
        .map(|v| {
            LinearRow::new(
                SparseSym::from_entries((0..m).map(|r| (room(v, r), room(v, r), 1.0))),
                -1.0,
                v,
                0.0,
            )
        })
        .collect();
    sketch.equalities.push(SketchBlock::new("one_room", one_room));
    let closed = (0..n)
        .flat_map(|v| (0..m).map(move |r| (v, r)))
        .filter(|&(v, r)| !inst.room_fits(v, r))
        .map(|(v, r)| LinearRow::new(SparseSym::single(room(v, r), room(v, r), 1.0), 0.0, w, 0.0))
        .collect();
    sketch.equalities.push(SketchBlock::new("closed_room", closed));

    let mut single = Vec::new();
    for v in 0..n {
        for r in 0..m {
            for s in r + 1..m {
                let coeffs = SparseSym::from_entries([(room(v, r), room(v, r), 1.0), (room(v, s), room(v, s), 1.0)]);
                single.push(LinearRow::new(coeffs, -1.0, v, 0.0));
            }
        }
    }
    sketch.inequalities.push(SketchBlock::new("single_room", single));

    let mut exclusive = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            for r in 0..m {
                let coeffs = SparseSym::from_entries([
                    (room(u, r), room(u, r), 1.0),
                    (room(v, r), room(v, r), 1.0),
                    (u, v, 0.5),
                ]);
                exclusive.push(LinearRow::new(coeffs, -2.0, w, 0.0));
            }
        }
    }
    sketch.inequalities.push(SketchBlock::new("room_exclusive", exclusive));

    let mut stable = Vec::new();
    for &(a, b) in &opts.stable_pairs {
        for r in 0..m {
            for s in (0..m).filter(|&s| s != r) {
                let coeffs = SparseSym::from_entries([(room(a, r), room(a, r), 1.0), (room(b, s), room(b, s), 1.0)]);
                stable.push(LinearRow::new(coeffs, -1.0, w, 0.0));
            }
        }
    }
    sketch.inequalities.push(SketchBlock::new("room_stability", stable));
    sketch.equalities.retain(|b| !b.rows.is_empty());
    sketch.inequalities.retain(|b| !b.rows.is_empty());
    to_standard_form(&sketch, opts.transform.unwrap_or(Transform::Scaled))
}
