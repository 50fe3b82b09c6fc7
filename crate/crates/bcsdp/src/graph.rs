//! Conflict graphs, timetabling instances and colourings.
//!
//! Vertex ids are dense and 0-based everywhere in the crate. Parsers renumber
//! external ids on the way in, so a vertex id can be used directly as a row
//! index into the matrix variables built by [`crate::relax`].

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seeded generator used by every randomized routine in the crate.
///
/// ChaCha with 8 rounds, seeded through `seed_from_u64`, so streams are
/// reproducible across platforms and releases of `rand_chacha`.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Simple undirected graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct ConflictGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<RawGraph> for ConflictGraph {
    type Error = Error;

    fn try_from(raw: RawGraph) -> Result<Self> {
        ConflictGraph::from_edges(raw.n, raw.edges)
    }
}

impl From<ConflictGraph> for RawGraph {
    fn from(g: ConflictGraph) -> Self {
        RawGraph { n: g.n, edges: g.edges }
    }
}

impl ConflictGraph {
    pub fn empty(n: usize) -> Self {
        ConflictGraph {
            n,
            edges: Vec::new(),
            adjacency: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from an edge list. Endpoint order is irrelevant and
    /// repeated edges collapse; self-loops and out-of-range endpoints are
    /// rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::Graph(format!("self-loop at vertex {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::Graph(format!("edge ({a}, {b}) has an endpoint outside 0..{n}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(ConflictGraph { n, edges, adjacency })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        ConflictGraph::from_edges(n, edges).expect("complete graph is simple")
    }

    pub fn path(n: usize) -> Self {
        let edges = (1..n).map(|v| (v - 1, v));
        ConflictGraph::from_edges(n, edges).expect("path is simple")
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "a cycle needs at least 3 vertices, got {n}"
            )));
        }
        ConflictGraph::from_edges(n, (0..n).map(|v| (v, (v + 1) % n)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && u < self.n && v < self.n && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Dense adjacency matrix, row-major.
    pub fn adjacency_matrix(&self) -> Vec<Vec<bool>> {
        let mut out = vec![vec![false; self.n]; self.n];
        for &(u, v) in &self.edges {
            out[u][v] = true;
            out[v][u] = true;
        }
        out
    }

    pub fn complement(&self) -> ConflictGraph {
        let adj = self.adjacency_matrix();
        let edges = (0..self.n)
            .flat_map(|u| (u + 1..self.n).map(move |v| (u, v)))
            .filter(|&(u, v)| !adj[u][v]);
        ConflictGraph::from_edges(self.n, edges).expect("complement is simple")
    }

    /// Subgraph induced by `vertices`; vertex `i` of the result is
    /// `vertices[i]` of `self`.
    pub fn induced(&self, vertices: &[usize]) -> ConflictGraph {
        let mut index = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            index[v] = i;
        }
        let edges = self
            .edges
            .iter()
            .filter(|(u, v)| index[*u] != usize::MAX && index[*v] != usize::MAX)
            .map(|&(u, v)| (index[u], index[v]));
        ConflictGraph::from_edges(vertices.len(), edges).expect("induced subgraph is simple")
    }

    /// True when `set` contains no edge.
    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter()
            .enumerate()
            .all(|(i, &u)| set[i + 1..].iter().all(|&v| !self.has_edge(u, v)))
    }
}

/// Erdős–Rényi graph: each pair `u < v`, visited in lexicographic order,
/// is an edge when the next uniform draw in `[0, 1)` is below `p`.
pub fn gen_gnp(n: usize, p: f64, seed: u64) -> Result<ConflictGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "edge probability {p} is outside [0, 1]"
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    ConflictGraph::from_edges(n, edges)
}

/// Kneser graph K(n, k): k-subsets of {1..n} in lexicographic order,
/// adjacent when disjoint.
pub fn gen_kneser(n: usize, k: usize) -> Result<ConflictGraph> {
    if k == 0 || k >= n || n > 64 {
        return Err(Error::InvalidArgument(format!(
            "Kneser graph needs n > k >= 1 and n <= 64, got n={n}, k={k}"
        )));
    }
    let subsets = k_subsets(n, k);
    let mut edges = Vec::new();
    for (i, a) in subsets.iter().enumerate() {
        for (j, b) in subsets.iter().enumerate().skip(i + 1) {
            if a & b == 0 {
                edges.push((i, j));
            }
        }
    }
    ConflictGraph::from_edges(subsets.len(), edges)
}

/// k-subsets of `{0..n}` as bitmasks, lexicographic in their sorted element lists.
fn k_subsets(n: usize, k: usize) -> Vec<u64> {
    fn rec(start: usize, n: usize, left: usize, acc: u64, out: &mut Vec<u64>) {
        if left == 0 {
            out.push(acc);
            return;
        }
        for e in start..=n - left {
            rec(e + 1, n, left - 1, acc | (1u64 << e), out);
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, 0, &mut out);
    out
}

/// Graph on all `2^bits` bit strings, adjacent when the Hamming distance is
/// exactly `distance`.
pub fn gen_hamming(bits: usize, distance: usize) -> Result<ConflictGraph> {
    if bits == 0 || bits > 16 || distance > bits {
        return Err(Error::InvalidArgument(format!(
            "Hamming graph needs 1 <= bits <= 16 and distance <= bits, got bits={bits}, distance={distance}"
        )));
    }
    let n = 1usize << bits;
    let mut edges = Vec::new();
    if distance > 0 {
        for a in 0..n {
            for b in a + 1..n {
                if (a ^ b).count_ones() as usize == distance {
                    edges.push((a, b));
                }
            }
        }
    }
    ConflictGraph::from_edges(n, edges)
}

/// Forbidden-intersection graph F(m, γ): bit strings of length `m`, adjacent
/// when they differ in exactly `(1 - γ)·m` positions.
pub fn gen_forbidden_intersection(m: usize, gamma: f64) -> Result<ConflictGraph> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("gamma {gamma} is outside [0, 1]")));
    }
    let raw = (1.0 - gamma) * m as f64;
    let distance = raw.round();
    // gamma usually arrives as a rounded decimal such as 0.67
    if (raw - distance).abs() > 0.05 {
        return Err(Error::InvalidArgument(format!(
            "(1 - gamma) * m = {raw} is not an integer"
        )));
    }
    gen_hamming(m, distance as usize)
}

/// Maximal connected vertex sets, largest first (ties by smallest member).
/// Each component lists its vertices in increasing order.
pub fn connected_components(g: &ConflictGraph) -> Vec<Vec<usize>> {
    let mut seen = vec![false; g.n()];
    let mut components = Vec::new();
    for start in 0..g.n() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut comp = Vec::new();
        while let Some(v) = stack.pop() {
            comp.push(v);
            for &u in g.neighbours(v) {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    components
}

/// ⌈n/m⌉, the number of classes forced by the size cap alone.
pub fn counting_bound(n: usize, m: usize) -> usize {
    assert!(m >= 1, "class-size bound must be positive");
    n.div_ceil(m)
}

/// A timetabling instance: conflict graph plus rooms, sizes, features and
/// pre-colouring.
///
/// An event of size `s` fits a room of capacity `r` when `s <= r` and the room
/// offers every feature the event requires.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimetablingInstance {
    pub graph: ConflictGraph,
    /// Number of rooms, i.e. the bound on class size.
    pub m: usize,
    pub event_sizes: Vec<u64>,
    pub room_capacities: Vec<u64>,
    pub feature_count: usize,
    pub event_features: BTreeSet<(usize, usize)>,
    pub room_features: BTreeSet<(usize, usize)>,
    pub precolouring: Vec<Vec<usize>>,
    pub weights: Option<Vec<u64>>,
}

impl TimetablingInstance {
    /// Plain m-bounded colouring: unit sizes, `m` rooms of capacity 1, no
    /// features and no pre-colouring.
    pub fn bounded(graph: ConflictGraph, m: usize) -> Self {
        let n = graph.n();
        TimetablingInstance {
            graph,
            m,
            event_sizes: vec![1; n],
            room_capacities: vec![1; m],
            feature_count: 0,
            event_features: BTreeSet::new(),
            room_features: BTreeSet::new(),
            precolouring: Vec::new(),
            weights: None,
        }
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let bad = |msg: String| Err(Error::Instance(msg));
        if self.m == 0 {
            return bad("room count m must be at least 1".into());
        }
        if self.event_sizes.len() != n {
            return bad(format!("{} event sizes for {n} events", self.event_sizes.len()));
        }
        if self.room_capacities.len() != self.m {
            return bad(format!(
                "{} room capacities for m = {}",
                self.room_capacities.len(),
                self.m
            ));
        }
        if self.event_sizes.contains(&0) {
            return bad("event sizes must be positive".into());
        }
        if self.room_capacities.contains(&0) {
            return bad("room capacities must be positive".into());
        }
        for &(v, f) in &self.event_features {
            if v >= n || f >= self.feature_count {
                return bad(format!("event feature ({v}, {f}) out of range"));
            }
        }
        for &(r, f) in &self.room_features {
            if r >= self.m || f >= self.feature_count {
                return bad(format!("room feature ({r}, {f}) out of range"));
            }
        }
        let mut owner = vec![usize::MAX; n];
        for (i, class) in self.precolouring.iter().enumerate() {
            if class.len() > self.m {
                return bad(format!(
                    "pre-colouring class {i} has {} vertices, more than m = {}",
                    class.len(),
                    self.m
                ));
            }
            for &v in class {
                if v >= n {
                    return bad(format!("pre-colouring vertex {v} out of range"));
                }
                if owner[v] != usize::MAX {
                    return bad(format!(
                        "vertex {v} appears in pre-colouring classes {} and {i}",
                        owner[v]
                    ));
                }
                owner[v] = i;
            }
        }
        if let Some(w) = &self.weights {
            if w.len() != n || w.contains(&0) {
                return bad("weights must be positive, one per vertex".into());
            }
        }
        Ok(())
    }

    /// Multiplicity of `v` towards the class-size cap.
    pub fn weight(&self, v: usize) -> usize {
        self.weights.as_ref().map_or(1, |w| w[v] as usize)
    }

    /// Weighted size of `class`.
    pub fn class_weight(&self, class: &[usize]) -> usize {
        class.iter().map(|&v| self.weight(v)).sum()
    }

    pub fn features_of_event(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.event_features.range((v, 0)..(v + 1, 0)).map(|&(_, f)| f)
    }

    pub fn room_has_feature(&self, room: usize, feature: usize) -> bool {
        self.room_features.contains(&(room, feature))
    }

    pub fn room_fits(&self, v: usize, room: usize) -> bool {
        self.event_sizes[v] <= self.room_capacities[room]
            && self.features_of_event(v).all(|f| self.room_has_feature(room, f))
    }

    /// Rooms able to host event `v`.
    pub fn compatible_rooms(&self, v: usize) -> Vec<usize> {
        (0..self.m).filter(|&r| self.room_fits(v, r)).collect()
    }

    /// Number of rooms offering feature `f`.
    pub fn rooms_with_feature(&self, f: usize) -> usize {
        (0..self.m).filter(|&r| self.room_has_feature(r, f)).count()
    }

    /// Events requiring feature `f`.
    pub fn events_with_feature(&self, f: usize) -> Vec<usize> {
        self.event_features
            .iter()
            .filter(|&&(_, g)| g == f)
            .map(|&(v, _)| v)
            .collect()
    }

    /// Distinct event sizes, increasing.
    pub fn distinct_sizes(&self) -> Vec<u64> {
        let set: BTreeSet<u64> = self.event_sizes.iter().copied().collect();
        set.into_iter().collect()
    }

    /// Rooms with capacity at least `s`.
    pub fn rooms_at_least(&self, s: u64) -> usize {
        self.room_capacities.iter().filter(|&&c| c >= s).count()
    }

    /// True when the instance has no capacity, feature or pre-colouring
    /// structure beyond the class-size cap.
    pub fn is_plain(&self) -> bool {
        self.feature_count == 0
            && self.precolouring.is_empty()
            && self.event_sizes.iter().all(|&s| self.rooms_at_least(s) == self.m)
    }

    /// Checks whether `class` can share a period: independence, size,
    /// laminar capacity counting and feature counting. Pre-colouring is not
    /// considered here.
    pub fn class_is_admissible(&self, class: &[usize]) -> bool {
        self.class_weight(class) <= self.m
            && self.graph.is_independent(class)
            && capacity_shortfalls(self, class).is_empty()
            && feature_shortfalls(self, class).is_empty()
    }

    /// Whether `v` can join the (admissible) `class` without breaking
    /// admissibility.
    pub fn can_extend(&self, class: &[usize], v: usize) -> bool {
        if self.class_weight(class) + self.weight(v) > self.m || class.iter().any(|&u| self.graph.has_edge(u, v)) {
            return false;
        }
        let s = self.event_sizes[v];
        // only thresholds at or below s change when v joins
        for threshold in self.distinct_sizes().into_iter().filter(|&t| t <= s) {
            let events = 1 + class.iter().filter(|&&u| self.event_sizes[u] >= threshold).count();
            if events > self.rooms_at_least(threshold) {
                return false;
            }
        }
        for f in self.features_of_event(v) {
            let events = 1 + class.iter().filter(|&&u| self.event_features.contains(&(u, f))).count();
            if events > self.rooms_with_feature(f) {
                return false;
            }
        }
        true
    }
}

/// Thresholds `s` at which the events of `class` with size `>= s` outnumber
/// the rooms with capacity `>= s`: `(s, events, rooms)`.
pub fn capacity_shortfalls(inst: &TimetablingInstance, class: &[usize]) -> Vec<(u64, usize, usize)> {
    let mut sizes: Vec<u64> = class.iter().map(|&v| inst.event_sizes[v]).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
        .into_iter()
        .filter_map(|s| {
            let events = class.iter().filter(|&&v| inst.event_sizes[v] >= s).count();
            let rooms = inst.rooms_at_least(s);
            (events > rooms).then_some((s, events, rooms))
        })
        .collect()
}

/// Features whose demand inside `class` exceeds the rooms offering them:
/// `(feature, events, rooms)`.
pub fn feature_shortfalls(inst: &TimetablingInstance, class: &[usize]) -> Vec<(usize, usize, usize)> {
    let mut demand: BTreeMap<usize, usize> = BTreeMap::new();
    for &v in class {
        for f in inst.features_of_event(v) {
            *demand.entry(f).or_default() += 1;
        }
    }
    demand
        .into_iter()
        .filter_map(|(f, events)| {
            let rooms = inst.rooms_with_feature(f);
            (events > rooms).then_some((f, events, rooms))
        })
        .collect()
}

/// A colouring: ordered colour classes, optionally with a room per vertex.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Partition {
    pub classes: Vec<Vec<usize>>,
    pub room_of: Option<BTreeMap<usize, usize>>,
}

impl Partition {
    pub fn new(classes: Vec<Vec<usize>>) -> Self {
        Partition { classes, room_of: None }
    }

    /// Builds a partition from a per-vertex colour vector.
    pub fn from_colours(colours: &[usize]) -> Self {
        let k = colours.iter().map(|&c| c + 1).max().unwrap_or(0);
        let mut classes = vec![Vec::new(); k];
        for (v, &c) in colours.iter().enumerate() {
            classes[c].push(v);
        }
        classes.retain(|c| !c.is_empty());
        Partition::new(classes)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn largest_class(&self) -> usize {
        self.classes.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Per-vertex class index for a partition of `0..n`; `None` for
    /// uncovered vertices.
    pub fn colour_vector(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for (i, class) in self.classes.iter().enumerate() {
            for &v in class {
                if v < n {
                    out[v] = Some(i);
                }
            }
        }
        out
    }

    /// Sorts vertices inside classes and classes by their first vertex.
    pub fn normalized(&self) -> Partition {
        let mut classes: Vec<Vec<usize>> = self
            .classes
            .iter()
            .filter(|c| !c.is_empty())
            .map(|c| {
                let mut c = c.clone();
                c.sort_unstable();
                c
            })
            .collect();
        classes.sort();
        Partition {
            classes,
            room_of: self.room_of.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    UnknownVertex {
        vertex: usize,
    },
    DuplicateVertex {
        vertex: usize,
    },
    UncoveredVertex {
        vertex: usize,
    },
    EdgeConflict {
        class: usize,
        u: usize,
        v: usize,
    },
    ClassTooLarge {
        class: usize,
        size: usize,
        m: usize,
    },
    CapacityCount {
        class: usize,
        threshold: u64,
        events: usize,
        rooms: usize,
    },
    FeatureCount {
        class: usize,
        feature: usize,
        events: usize,
        rooms: usize,
    },
    SplitPrecolouring {
        pre_class: usize,
    },
    MergedPrecolouring {
        first: usize,
        second: usize,
    },
    DuplicateRoom {
        class: usize,
        room: usize,
    },
    RoomMismatch {
        vertex: usize,
        room: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every condition of the timetabling problem that `part` breaks.
pub fn validate_partition(inst: &TimetablingInstance, part: &Partition) -> ValidationReport {
    let n = inst.n();
    let mut violations = Vec::new();
    let mut class_of = vec![usize::MAX; n];
    for (i, class) in part.classes.iter().enumerate() {
        for &v in class {
            if v >= n {
                violations.push(Violation::UnknownVertex { vertex: v });
            } else if class_of[v] != usize::MAX {
                violations.push(Violation::DuplicateVertex { vertex: v });
            } else {
                class_of[v] = i;
            }
        }
    }
    for (v, &c) in class_of.iter().enumerate() {
        if c == usize::MAX {
            violations.push(Violation::UncoveredVertex { vertex: v });
        }
    }
    for (i, class) in part.classes.iter().enumerate() {
        let class: Vec<usize> = class.iter().copied().filter(|&v| v < n).collect();
        for (a, &u) in class.iter().enumerate() {
            for &v in &class[a + 1..] {
                if inst.graph.has_edge(u, v) {
                    violations.push(Violation::EdgeConflict {
                        class: i,
                        u: u.min(v),
                        v: u.max(v),
                    });
                }
            }
        }
        let size = inst.class_weight(&class);
        if size > inst.m {
            violations.push(Violation::ClassTooLarge {
                class: i,
                size,
                m: inst.m,
            });
        }
        for (threshold, events, rooms) in capacity_shortfalls(inst, &class) {
            // a plain size overflow is already reported as ClassTooLarge
            if rooms == inst.m {
                continue;
            }
            violations.push(Violation::CapacityCount {
                class: i,
                threshold,
                events,
                rooms,
            });
        }
        for (feature, events, rooms) in feature_shortfalls(inst, &class) {
            violations.push(Violation::FeatureCount {
                class: i,
                feature,
                events,
                rooms,
            });
        }
        if let Some(rooms) = &part.room_of {
            let mut used = BTreeSet::new();
            for &v in &class {
                if let Some(&r) = rooms.get(&v) {
                    if r >= inst.m || !inst.room_fits(v, r) {
                        violations.push(Violation::RoomMismatch { vertex: v, room: r });
                    }
                    if !used.insert(r) {
                        violations.push(Violation::DuplicateRoom { class: i, room: r });
                    }
                }
            }
        }
    }
    for (p, pre) in inst.precolouring.iter().enumerate() {
        let classes: BTreeSet<usize> = pre.iter().filter(|&&v| v < n).map(|&v| class_of[v]).collect();
        if classes.len() > 1 {
            violations.push(Violation::SplitPrecolouring { pre_class: p });
        }
    }
    // distinct pre-colouring classes are pre-assigned to distinct periods
    let pre_class_of: Vec<Option<usize>> = inst
        .precolouring
        .iter()
        .map(|pre| pre.iter().find(|&&v| v < n).map(|&v| class_of[v]))
        .collect();
    for a in 0..pre_class_of.len() {
        for b in a + 1..pre_class_of.len() {
            if pre_class_of[a].is_some() && pre_class_of[a] == pre_class_of[b] {
                violations.push(Violation::MergedPrecolouring { first: a, second: b });
            }
        }
    }
    ValidationReport { violations }
}
