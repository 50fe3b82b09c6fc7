use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::ConflictGraph;

use super::model::{BoundSemantics, SdpModel, SparseSym, Transform};
use super::sketch::{to_standard_form, LinearRow, Sketch, SketchBlock};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundedOptions {
    pub transform: Transform,
    /// Emit `Y_uv >= 0` for every non-edge pair.
    pub nonneg: bool,
}

impl Default for BoundedOptions {
    fn default() -> Self {
        BoundedOptions {
            transform: Transform::Scaled,
            nonneg: true,
        }
    }
}

/// Row `Σ_u c_u Y_uv - cap · t <= 0` for vertex `v`, restricted to `members`
/// (all vertices when `None`).
pub(crate) fn row_sum(v: usize, n: usize, members: Option<&[usize]>, weights: Option<&[u64]>, cap: f64) -> LinearRow {
    let all: Vec<usize>;
    let members = match members {
        Some(m) => m,
        None => {
            all = (0..n).collect();
            &all
        }
    };
    let coeffs = SparseSym::from_entries(members.iter().map(|&u| {
        let c = weights.map_or(1.0, |w| w[u] as f64);
        (u, v, if u == v { c } else { 0.5 * c })
    }));
    LinearRow::new(coeffs, -cap, v, 0.0)
}

/// `-Y_uv <= 0`.
pub(crate) fn nonneg_row(u: usize, v: usize) -> LinearRow {
    LinearRow::new(SparseSym::single(u, v, -0.5), 0.0, u.min(v), 0.0)
}

/// Core sketch: edges, optional row sums with cap `m`, optional
/// nonnegativity over `pairs`.
pub(crate) fn base_sketch(
    g: &ConflictGraph,
    m: Option<usize>,
    weights: Option<&[u64]>,
    nonneg_pairs: Option<Vec<(usize, usize)>>,
) -> Sketch {
    let n = g.n();
    let mut sketch = Sketch::new(n, g.edges().to_vec());
    if let Some(m) = m {
        let rows = (0..n).map(|v| row_sum(v, n, None, weights, m as f64)).collect();
        sketch.inequalities.push(SketchBlock::new("row_sum", rows));
        sketch.row_sum_first = weights.is_none();
    }
    if let Some(pairs) = nonneg_pairs {
        let rows = pairs.into_iter().map(|(u, v)| nonneg_row(u, v)).collect();
        sketch.inequalities.push(SketchBlock::new("nonneg", rows));
    }
    sketch
}

pub(crate) fn non_edges(g: &ConflictGraph) -> Vec<(usize, usize)> {
    let n = g.n();
    (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .filter(|&(u, v)| !g.has_edge(u, v))
        .collect()
}

fn check_m(g: &ConflictGraph, m: usize) -> Result<()> {
    if g.n() == 0 {
        return Err(Error::InvalidArgument("graph has no vertices".into()));
    }
    if m < 1 || m > g.n() {
        return Err(Error::InvalidArgument(format!("bound m = {m} outside 1..={}", g.n())));
    }
    Ok(())
}

/// Bounded-colouring relaxation: `min t` with `Y_vv = t`, `Y_uv = 0` on
/// edges, row sums `<= tm`, `Y >= 0` off the edges and `Y - J ⪰ 0`, in the
/// default scaled form.
pub fn build_bounded(g: &ConflictGraph, m: usize) -> Result<(SdpModel, BoundSemantics)> {
    build_bounded_with(g, m, BoundedOptions::default())
}

pub fn build_bounded_with(g: &ConflictGraph, m: usize, opts: BoundedOptions) -> Result<(SdpModel, BoundSemantics)> {
    check_m(g, m)?;
    to_standard_form(&bounded_sketch(g, Some(m), opts.nonneg), opts.transform)
}

/// The same relaxation without row-sum bounds (the unbounded colouring
/// column of the benchmark tables).
pub fn build_unbounded(g: &ConflictGraph, opts: BoundedOptions) -> Result<(SdpModel, BoundSemantics)> {
    if g.n() == 0 {
        return Err(Error::InvalidArgument("graph has no vertices".into()));
    }
    to_standard_form(&bounded_sketch(g, None, opts.nonneg), opts.transform)
}

pub fn bounded_sketch(g: &ConflictGraph, m: Option<usize>, nonneg: bool) -> Sketch {
    base_sketch(g, m, None, nonneg.then(|| non_edges(g)))
}

fn check_precolouring(g: &ConflictGraph, m: usize, pre: &[Vec<usize>]) -> Result<Vec<usize>> {
    let n = g.n();
    let mut owner = vec![usize::MAX; n];
    for (i, class) in pre.iter().enumerate() {
        if class.len() > m {
            return Err(Error::Instance(format!(
                "pre-colouring class {i} has {} vertices, more than m = {m}",
                class.len()
            )));
        }
        for &v in class {
            if v >= n {
                return Err(Error::Instance(format!("pre-colouring vertex {v} out of range")));
            }
            if owner[v] != usize::MAX {
                return Err(Error::Instance(format!("vertex {v} is in two pre-colouring classes")));
            }
            owner[v] = i;
        }
        for (a, &u) in class.iter().enumerate() {
            for &v in &class[a + 1..] {
                if g.has_edge(u, v) {
                    return Err(Error::Infeasible(format!(
                        "pre-colouring class {i} contains the edge {{{u}, {v}}}"
                    )));
                }
            }
        }
    }
    Ok(owner)
}

/// Adds the pre-colouring equalities to `sketch` and returns the pairs they
/// fix.
pub(crate) fn add_precolouring(sketch: &mut Sketch, g: &ConflictGraph, owner: &[usize]) -> BTreeSet<(usize, usize)> {
    let n = g.n();
    let w = sketch.anchor;
    let mut same = Vec::new();
    let mut across = Vec::new();
    let mut fixed = BTreeSet::new();
    for u in 0..n {
        for v in u + 1..n {
            if owner[u] == usize::MAX || owner[v] == usize::MAX {
                continue;
            }
            if owner[u] == owner[v] {
                // Y_uv - t = 0
                same.push(LinearRow::new(SparseSym::single(u, v, 0.5), -1.0, w, 0.0));
                fixed.insert((u, v));
            } else if !g.has_edge(u, v) {
                across.push(LinearRow::new(SparseSym::single(u, v, 0.5), 0.0, w, 0.0));
                fixed.insert((u, v));
            }
        }
    }
    sketch.equalities.push(SketchBlock::new("same_class", same));
    sketch.equalities.push(SketchBlock::new("across_class", across));
    fixed
}

/// Pre-coloured relaxation: the bounded relaxation plus `Y_uv = t` inside
/// each pre-colouring class, `Y_uv = 0` across classes, nonnegativity on the
/// remaining non-edges and the aggregate bound `⟨J, Y⟩ <= n m t`.
///
/// Column-sum rows coincide with row-sum rows for a symmetric variable and
/// are not repeated.
pub fn build_precoloured(g: &ConflictGraph, m: usize, pre: &[Vec<usize>]) -> Result<(SdpModel, BoundSemantics)> {
    build_precoloured_with(g, m, pre, Transform::Scaled)
}

pub fn build_precoloured_with(
    g: &ConflictGraph,
    m: usize,
    pre: &[Vec<usize>],
    transform: Transform,
) -> Result<(SdpModel, BoundSemantics)> {
    check_m(g, m)?;
    let owner = check_precolouring(g, m, pre)?;
    let n = g.n();
    let mut sketch = base_sketch(g, Some(m), None, None);
    let fixed = add_precolouring(&mut sketch, g, &owner);
    let pairs = non_edges(g)
        .into_iter()
        .filter(|p| !fixed.contains(p))
        .collect::<Vec<_>>();
    let rows = pairs.into_iter().map(|(u, v)| nonneg_row(u, v)).collect();
    sketch.inequalities.push(SketchBlock::new("nonneg", rows));
    let all = SparseSym::from_entries((0..n).flat_map(|u| (u..n).map(move |v| (u, v, 1.0))));
    sketch.inequalities.push(SketchBlock::new(
        "aggregate",
        vec![LinearRow::new(all, -((n * m) as f64), sketch.anchor, 0.0)],
    ));
    to_standard_form(&sketch, transform)
}

/// Weighted relaxation: row sums `Σ_u c_u Y_uv <= tm` with nonnegativity.
pub fn build_weighted(g: &ConflictGraph, m: usize, c: &[u64]) -> Result<(SdpModel, BoundSemantics)> {
    if g.n() == 0 {
        return Err(Error::InvalidArgument("graph has no vertices".into()));
    }
    if m < 1 {
        return Err(Error::InvalidArgument("bound m must be at least 1".into()));
    }
    if c.len() != g.n() {
        return Err(Error::InvalidArgument(format!(
            "{} weights for {} vertices",
            c.len(),
            g.n()
        )));
    }
    if let Some(v) = c.iter().position(|&w| w == 0) {
        return Err(Error::InvalidArgument(format!("vertex {v} has weight 0")));
    }
    if let Some(v) = c.iter().position(|&w| w as usize > m) {
        return Err(Error::Infeasible(format!("vertex {v} has weight {} > m = {m}", c[v])));
    }
    let sketch = base_sketch(g, Some(m), Some(c), Some(non_edges(g)));
    to_standard_form(&sketch, Transform::Scaled)
}

/// A pre-coloured instance contracted to a weighted one.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub graph: ConflictGraph,
    pub weights: Vec<u64>,
    /// Quotient vertex of each original vertex.
    pub vertex_map: Vec<usize>,
}

/// Contracts every pre-colouring class to one vertex whose weight is the
/// class size. Unclassed vertices keep weight 1 and follow the contracted
/// classes in their original order.
pub fn reduce_precolouring(g: &ConflictGraph, m: usize, pre: &[Vec<usize>]) -> Result<Reduction> {
    let owner = check_precolouring(g, m, pre)?;
    let n = g.n();
    let mut vertex_map = vec![usize::MAX; n];
    let mut weights = Vec::new();
    for class in pre.iter().filter(|c| !c.is_empty()) {
        for &v in class {
            vertex_map[v] = weights.len();
        }
        weights.push(class.len() as u64);
    }
    for v in 0..n {
        if owner[v] == usize::MAX {
            vertex_map[v] = weights.len();
            weights.push(1);
        }
    }
    // distinct pre-colouring classes occupy distinct periods
    let classes = pre.iter().filter(|c| !c.is_empty()).count();
    let between = (0..classes).flat_map(|a| (a + 1..classes).map(move |b| (a, b)));
    let edges = g
        .edges()
        .iter()
        .map(|&(u, v)| (vertex_map[u], vertex_map[v]))
        .chain(between);
    let graph = ConflictGraph::from_edges(weights.len(), edges)?;
    Ok(Reduction {
        graph,
        weights,
        vertex_map,
    })
}
