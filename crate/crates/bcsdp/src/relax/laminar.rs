use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::TimetablingInstance;

use super::bounded::{add_precolouring, base_sketch, non_edges, nonneg_row, row_sum};
use super::model::{BoundSemantics, SdpModel, SparseSym, Transform};
use super::sketch::{to_standard_form, LinearRow, Sketch, SketchBlock};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LaminarOptions {
    /// Add the aggregate counting rows per capacity threshold.
    pub counting: bool,
    /// Add the per-feature rows (requires a laminar family).
    pub features: bool,
    pub transform: Transform,
}

impl Default for LaminarOptions {
    fn default() -> Self {
        LaminarOptions {
            counting: false,
            features: false,
            transform: Transform::Scaled,
        }
    }
}

/// True when any two sets are nested or disjoint.
pub fn is_laminar(family: &[BTreeSet<usize>]) -> bool {
    let mut sets: Vec<&BTreeSet<usize>> = family.iter().filter(|s| !s.is_empty()).collect();
    sets.sort_by_key(|s| std::cmp::Reverse(s.len()));
    // each set must sit inside every larger set it meets
    for (i, small) in sets.iter().enumerate() {
        for big in &sets[..i] {
            let meets = small.iter().any(|v| big.contains(v));
            if meets && !small.is_subset(big) {
                return false;
            }
        }
    }
    true
}

/// Capacity thresholds: for each distinct event size `s`, the events of size
/// at least `s` and the number of rooms of capacity at least `s`.
pub fn capacity_thresholds(inst: &TimetablingInstance) -> Vec<(u64, Vec<usize>, usize)> {
    inst.distinct_sizes()
        .into_iter()
        .map(|s| {
            let events = (0..inst.n()).filter(|&v| inst.event_sizes[v] >= s).collect();
            (s, events, inst.rooms_at_least(s))
        })
        .collect()
}

/// `Σ_{u ∈ members} Σ_v Y_uv - cap · t <= 0`.
fn aggregate_row(n: usize, members: &[usize], cap: f64, anchor: usize) -> LinearRow {
    let inside: BTreeSet<usize> = members.iter().copied().collect();
    let coeffs = SparseSym::from_entries((0..n).flat_map(|u| (u..n).map(move |v| (u, v))).map(|(u, v)| {
        let hits = inside.contains(&u) as u8 + inside.contains(&v) as u8;
        (u, v, hits as f64 / 2.0)
    }));
    LinearRow::new(coeffs, -cap, anchor, 0.0)
}

pub fn laminar_sketch(inst: &TimetablingInstance, opts: LaminarOptions) -> Result<Sketch> {
    inst.validate()?;
    let g = &inst.graph;
    let n = inst.n();
    if n == 0 {
        return Err(Error::InvalidArgument("instance has no events".into()));
    }
    let m = inst.m;
    let thresholds = capacity_thresholds(inst);
    if let Some((s, _, _)) = thresholds.iter().find(|(_, _, rooms)| *rooms == 0) {
        return Err(Error::Infeasible(format!("no room holds events of size {s}")));
    }
    let feature_sets: Vec<(Vec<usize>, usize)> = (0..inst.feature_count)
        .map(|f| (inst.events_with_feature(f), inst.rooms_with_feature(f)))
        .collect();
    if opts.features {
        for (f, (events, rooms)) in feature_sets.iter().enumerate() {
            if !events.is_empty() && *rooms == 0 {
                return Err(Error::Infeasible(format!("no room offers feature {f}")));
            }
        }
        let family: Vec<BTreeSet<usize>> = thresholds
            .iter()
            .map(|(_, events, _)| events.iter().copied().collect())
            .chain(feature_sets.iter().map(|(events, _)| events.iter().copied().collect()))
            .collect();
        if !is_laminar(&family) {
            return Err(Error::Instance("capacity and feature sets are not laminar".into()));
        }
    }

    let mut sketch = base_sketch(g, Some(m), None, None);
    let anchor = sketch.anchor;
    // thresholds with every room available are implied by the row sums
    let tight: Vec<&(u64, Vec<usize>, usize)> = thresholds.iter().filter(|(_, _, rooms)| *rooms < m).collect();
    let capacity_rows = tight
        .iter()
        .flat_map(|(_, events, rooms)| {
            events
                .iter()
                .map(move |&v| row_sum(v, n, Some(events), None, *rooms as f64))
        })
        .collect();
    sketch.inequalities.push(SketchBlock::new("capacity", capacity_rows));
    if opts.counting {
        let rows = tight
            .iter()
            .map(|(_, events, rooms)| aggregate_row(n, events, (n * rooms) as f64, anchor))
            .collect();
        sketch.inequalities.push(SketchBlock::new("capacity_count", rows));
    }
    if opts.features {
        let tight_features: Vec<&(Vec<usize>, usize)> = feature_sets
            .iter()
            .filter(|(events, rooms)| !events.is_empty() && *rooms < m)
            .collect();
        let rows = tight_features
            .iter()
            .flat_map(|(events, rooms)| {
                events
                    .iter()
                    .map(move |&v| row_sum(v, n, Some(events), None, *rooms as f64))
            })
            .collect();
        sketch.inequalities.push(SketchBlock::new("feature", rows));
        let rows = tight_features
            .iter()
            .map(|(events, rooms)| aggregate_row(n, events, (n * rooms) as f64, anchor))
            .collect();
        sketch.inequalities.push(SketchBlock::new("feature_count", rows));
    }
    let mut fixed = BTreeSet::new();
    if !inst.precolouring.is_empty() {
        let mut owner = vec![usize::MAX; n];
        for (i, class) in inst.precolouring.iter().enumerate() {
            for (a, &u) in class.iter().enumerate() {
                owner[u] = i;
                if class[a + 1..].iter().any(|&v| g.has_edge(u, v)) {
                    return Err(Error::Infeasible(format!("pre-colouring class {i} contains an edge")));
                }
            }
        }
        fixed = add_precolouring(&mut sketch, g, &owner);
    }
    let rows = non_edges(g)
        .into_iter()
        .filter(|p| !fixed.contains(p))
        .map(|(u, v)| nonneg_row(u, v))
        .collect();
    sketch.inequalities.push(SketchBlock::new("nonneg", rows));
    sketch.inequalities.retain(|b| !b.rows.is_empty());
    sketch.equalities.retain(|b| !b.rows.is_empty());
    Ok(sketch)
}

/// Timetabling relaxation with capacity thresholds and, optionally,
/// counting rows and feature rows.
///
/// For each distinct event size `s`, `L(s)` holds the events of size at
/// least `s` and `R(s)` the rooms of capacity at least `s`. Rows
/// `Σ_{u ∈ L(s)} Y_uv <= t |R(s)|` are emitted for `v ∈ L(s)` whenever
/// `|R(s)| < m`. Counting rows bound `Σ_{u ∈ L(s)} Σ_v Y_uv` by `n t |R(s)|`.
/// Features use the events needing a feature and the rooms offering it in
/// the same way.
pub fn build_laminar(inst: &TimetablingInstance, opts: LaminarOptions) -> Result<(SdpModel, BoundSemantics)> {
    to_standard_form(&laminar_sketch(inst, opts)?, opts.transform)
}
