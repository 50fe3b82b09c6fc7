mod tabu;

use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{counting_bound, ConflictGraph, Partition, TimetablingInstance};
use crate::relax::{build_bounded, build_theta, ThetaVariant};
use crate::rounding::greedy::{greedy_units, to_partition};
use crate::solver::{extract_bound, solve, SolverConfig};
use crate::units::{Class, Units};

/// Greedy restarts used for the initial upper bound.
const GREEDY_RESTARTS: u64 = 16;
/// Tabu iterations per target class count.
const TABU_ITERATIONS: u64 = 20_000;
/// Nodes between deadline checks.
const CLOCK_STRIDE: u64 = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// The bounded chromatic number, when the search completed.
    pub chi_m: Option<usize>,
    /// Best partition found. Optimal whenever `chi_m` is present.
    pub witness: Option<Partition>,
    pub lower_bound: usize,
    pub upper_bound: usize,
    pub nodes_explored: u64,
    pub timed_out: bool,
}

fn adjacency_bits(g: &ConflictGraph) -> Vec<FixedBitSet> {
    let n = g.n();
    (0..n)
        .map(|v| {
            let mut row = FixedBitSet::with_capacity(n);
            for &u in g.neighbours(v) {
                row.insert(u);
            }
            row
        })
        .collect()
}

/// Largest clique by branch and bound with a greedy colouring bound.
/// Returns `None` if the deadline passes first.
fn max_clique_bits(adj: &[FixedBitSet], deadline: Option<Instant>) -> Option<Vec<usize>> {
    struct Ctx<'a> {
        adj: &'a [FixedBitSet],
        best: Vec<usize>,
        current: Vec<usize>,
        deadline: Option<Instant>,
        nodes: u64,
        expired: bool,
    }

    // colour classes of the candidates in order; vertex i may extend the
    // clique by at most its colour number
    fn colour_order(adj: &[FixedBitSet], cand: &FixedBitSet) -> Vec<(usize, usize)> {
        let mut left = cand.clone();
        let mut out = Vec::new();
        let mut colour = 0;
        while !left.is_clear() {
            colour += 1;
            let mut avail = left.clone();
            while let Some(v) = avail.minimum() {
                avail.set(v, false);
                avail.difference_with(&adj[v]);
                left.set(v, false);
                out.push((v, colour));
            }
        }
        out
    }

    fn expand(ctx: &mut Ctx, mut cand: FixedBitSet) {
        ctx.nodes += 1;
        if ctx.nodes.is_multiple_of(CLOCK_STRIDE) && ctx.deadline.is_some_and(|d| Instant::now() > d) {
            ctx.expired = true;
        }
        if ctx.expired {
            return;
        }
        let order = colour_order(ctx.adj, &cand);
        for &(v, colour) in order.iter().rev() {
            if ctx.current.len() + colour <= ctx.best.len() {
                return;
            }
            ctx.current.push(v);
            let mut next = cand.clone();
            next.intersect_with(&ctx.adj[v]);
            if next.is_clear() {
                if ctx.current.len() > ctx.best.len() {
                    ctx.best = ctx.current.clone();
                }
            } else {
                expand(ctx, next);
            }
            ctx.current.pop();
            cand.set(v, false);
        }
    }

    let n = adj.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut cand = FixedBitSet::with_capacity(n);
    cand.insert_range(..);
    let mut ctx = Ctx {
        adj,
        best: Vec::new(),
        current: Vec::new(),
        deadline,
        nodes: 0,
        expired: false,
    };
    expand(&mut ctx, cand);
    (!ctx.expired).then_some(ctx.best)
}

/// A maximum clique of `g`.
pub fn max_clique(g: &ConflictGraph) -> Vec<usize> {
    let mut clique = max_clique_bits(&adjacency_bits(g), None).expect("no deadline");
    clique.sort_unstable();
    clique
}

pub fn clique_number(g: &ConflictGraph) -> usize {
    max_clique(g).len()
}

struct Search<'a> {
    units: &'a Units<'a>,
    degree: Vec<usize>,
    classes: Vec<Class>,
    assigned: Vec<bool>,
    remaining: usize,
    best: usize,
    best_classes: Vec<Class>,
    lower: usize,
    nodes: u64,
    deadline: Option<Instant>,
    timed_out: bool,
}

impl Search<'_> {
    /// Returns true when the search should stop.
    fn descend(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes.is_multiple_of(CLOCK_STRIDE) && self.deadline.is_some_and(|d| Instant::now() > d) {
            self.timed_out = true;
        }
        if self.timed_out {
            return true;
        }
        let m = self.units.inst.m;
        let k = self.classes.len();
        let free: usize = self.classes.iter().map(|c| m - c.weight).sum();
        if k + self.remaining.saturating_sub(free).div_ceil(m) >= self.best {
            return false;
        }
        if self.remaining == 0 {
            self.best = k;
            self.best_classes = self.classes.clone();
            return self.best <= self.lower;
        }
        let can_open = k + 1 < self.best;

        // fewest options first, then most conflicts
        let mut pick: Option<(usize, Vec<usize>)> = None;
        let mut pick_key = (usize::MAX, 0, 0);
        for u in (0..self.units.len()).filter(|&u| !self.assigned[u]) {
            let options: Vec<usize> = (0..k).filter(|&c| self.units.can_join(&self.classes[c], u)).collect();
            let total = options.len() + can_open as usize;
            if total == 0 {
                return false;
            }
            let key = (total, usize::MAX - self.degree[u], usize::MAX - self.units.weight[u]);
            if key < pick_key {
                pick_key = key;
                pick = Some((u, options));
            }
        }
        let (u, options) = pick.expect("an unassigned unit remains");
        self.assigned[u] = true;
        self.remaining -= self.units.weight[u];
        let mut stop = false;
        for c in options {
            self.units.join(&mut self.classes[c], u);
            stop = self.descend();
            self.units.leave(&mut self.classes[c], u);
            if stop {
                break;
            }
        }
        // a new class opens last, and only after the existing ones
        if !stop && self.classes.len() + 1 < self.best {
            let mut class = self.units.empty_class();
            self.units.join(&mut class, u);
            self.classes.push(class);
            stop = self.descend();
            self.classes.pop();
        }
        self.remaining += self.units.weight[u];
        self.assigned[u] = false;
        stop
    }
}

/// Exact m-bounded chromatic number by branch and bound.
///
/// Each pre-colouring class is contracted to a single unit, and distinct
/// pre-colouring classes conflict. The next unit is the one with the fewest
/// feasible classes. Existing classes are tried before a new one is opened.
/// The bounds are the clique number of the unit conflict graph, weighted
/// counting, and free-slot counting at every node. The initial upper bound
/// comes from greedy restarts, improved by tabu search when only conflicts
/// and class weight matter.
///
/// Practical up to roughly 64 vertices on hard instances. When the time
/// limit passes, `chi_m` is `None` and the best known bounds are reported.
pub fn exact_bounded_chromatic(inst: &TimetablingInstance, time_limit: Option<Duration>) -> Result<OracleResult> {
    let start = Instant::now();
    let deadline = time_limit.map(|t| start + t);
    let units = Units::new(inst)?;
    if units.len() == 0 {
        return Ok(OracleResult {
            chi_m: Some(0),
            witness: Some(Partition::default()),
            lower_bound: 0,
            upper_bound: 0,
            nodes_explored: 0,
            timed_out: false,
        });
    }
    let mut best_classes = (0..GREEDY_RESTARTS)
        .map(|seed| greedy_units(&units, seed))
        .min_by_key(|c| c.len())
        .expect("at least one restart");
    let clique = max_clique_bits(&units.conflicts, deadline).map_or(1, |c| c.len());
    let lower = clique.max(units.total_weight().div_ceil(inst.m));
    if units.is_plain() {
        while best_classes.len() > lower {
            match tabu::tabu_search(&units, best_classes.len() - 1, TABU_ITERATIONS, 0, deadline) {
                Some(classes) => best_classes = classes,
                None => break,
            }
        }
    }

    let mut search = Search {
        degree: units.degrees(),
        classes: Vec::new(),
        assigned: vec![false; units.len()],
        remaining: units.total_weight(),
        best: best_classes.len(),
        best_classes: Vec::new(),
        lower,
        nodes: 0,
        deadline,
        timed_out: false,
        units: &units,
    };
    if search.best > lower {
        search.descend();
        if !search.best_classes.is_empty() {
            best_classes = std::mem::take(&mut search.best_classes);
        }
    }
    let timed_out = search.timed_out && search.best > lower;
    Ok(OracleResult {
        chi_m: (!timed_out).then_some(best_classes.len()),
        witness: Some(to_partition(&best_classes)),
        lower_bound: if timed_out { lower } else { best_classes.len() },
        upper_bound: best_classes.len(),
        nodes_explored: search.nodes,
        timed_out,
    })
}

/// Chromatic number χ and the largest class `C` of the optimal colouring
/// found by [`exact_bounded_chromatic`] without a size cap. Offsets such as
/// `C - 3` are taken from this `C`; other optimal colourings may have a
/// different largest class.
pub fn unbounded_class_size(g: &ConflictGraph, time_limit: Option<Duration>) -> Result<(usize, usize)> {
    let n = g.n();
    if n == 0 {
        return Err(Error::InvalidArgument("graph has no vertices".into()));
    }
    let res = exact_bounded_chromatic(&TimetablingInstance::bounded(g.clone(), n), time_limit)?;
    let chi = res.chi_m.ok_or(Error::Timeout {
        nodes: res.nodes_explored,
    })?;
    Ok((chi, res.witness.map_or(n, |w| w.largest_class())))
}

/// The quantities of the sandwich chain for one graph and class bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub clique: usize,
    pub counting: usize,
    pub theta: f64,
    pub bounded_sdp: f64,
    pub certified: i64,
    pub chi_m: usize,
    pub greedy: usize,
    pub passed: bool,
}

/// Computes the clique number, counting bound, theta, the bounded SDP value
/// and its certified ceiling, the exact bounded chromatic number and a
/// greedy upper bound, and checks that
///
/// ```text
/// ω <= θ <= bounded SDP <= χ^m <= greedy,   counting <= certified <= χ^m
/// ```
///
/// holds, with the solver tolerance on the real-valued links.
pub fn sandwich_check(
    g: &ConflictGraph,
    m: usize,
    cfg: &SolverConfig,
    time_limit: Option<Duration>,
) -> Result<SandwichReport> {
    let inst = TimetablingInstance::bounded(g.clone(), m);
    let oracle = exact_bounded_chromatic(&inst, time_limit)?;
    let chi_m = oracle.chi_m.ok_or(Error::Timeout {
        nodes: oracle.nodes_explored,
    })?;
    let (model, sem) = build_theta(g, ThetaVariant::Lovasz)?;
    let theta = extract_bound(&solve(&model, &sem, cfg)?)?.0;
    let (model, sem) = build_bounded(g, m)?;
    let (bounded_sdp, certified) = extract_bound(&solve(&model, &sem, cfg)?)?;
    let greedy = crate::rounding::greedy_colouring(&inst, 0)?.len();
    let clique = clique_number(g);
    let counting = counting_bound(g.n(), m);
    let tol = 10.0 * cfg.eps * (1.0 + bounded_sdp.abs());
    let chi = chi_m as f64;
    let passed = clique as f64 <= theta + tol
        && theta <= bounded_sdp + tol
        && bounded_sdp <= chi + tol
        && counting as i64 <= certified
        && certified <= chi_m as i64
        && clique <= chi_m
        && chi_m <= greedy;
    Ok(SandwichReport {
        clique,
        counting,
        theta,
        bounded_sdp,
        certified,
        chi_m,
        greedy,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_kneser, validate_partition};

    fn chi(g: ConflictGraph, m: usize) -> usize {
        let inst = TimetablingInstance::bounded(g, m);
        let res = exact_bounded_chromatic(&inst, None).unwrap();
        assert!(validate_partition(&inst, res.witness.as_ref().unwrap()).ok());
        res.chi_m.unwrap()
    }

    #[test]
    fn small_values() {
        assert_eq!(chi(ConflictGraph::complete(5), 3), 5);
        assert_eq!(chi(gen_kneser(5, 2).unwrap(), 3), 4);
        assert_eq!(chi(gen_kneser(5, 2).unwrap(), 10), 3);
        assert_eq!(chi(ConflictGraph::cycle(5).unwrap(), 2), 3);
        assert_eq!(chi(ConflictGraph::empty(7), 3), 3);
        assert_eq!(chi(ConflictGraph::path(4), 1), 4);
    }

    #[test]
    fn unbounded_caps() {
        assert_eq!(unbounded_class_size(&gen_kneser(5, 2).unwrap(), None).unwrap(), (3, 4));
        assert_eq!(unbounded_class_size(&ConflictGraph::empty(5), None).unwrap(), (1, 5));
        let (chi, c) = unbounded_class_size(&ConflictGraph::path(5), None).unwrap();
        assert_eq!(chi, 2);
        assert_eq!(c, 3);
    }

    #[test]
    fn cliques() {
        assert_eq!(clique_number(&ConflictGraph::complete(6)), 6);
        assert_eq!(clique_number(&ConflictGraph::cycle(5).unwrap()), 2);
        assert_eq!(clique_number(&gen_kneser(8, 2).unwrap()), 4);
        assert_eq!(clique_number(&ConflictGraph::empty(3)), 1);
    }

    #[test]
    fn precoloured_classes_stay_apart() {
        let mut inst = TimetablingInstance::bounded(ConflictGraph::empty(4), 4);
        inst.precolouring = vec![vec![0], vec![1]];
        let res = exact_bounded_chromatic(&inst, None).unwrap();
        assert_eq!(res.chi_m, Some(2));
        assert!(validate_partition(&inst, res.witness.as_ref().unwrap()).ok());
    }

    #[test]
    fn weights_count_towards_the_cap() {
        let mut inst = TimetablingInstance::bounded(ConflictGraph::empty(3), 3);
        inst.weights = Some(vec![2, 2, 1]);
        assert_eq!(exact_bounded_chromatic(&inst, None).unwrap().chi_m, Some(2));
    }

    #[test]
    fn c5_sandwich() {
        let report = sandwich_check(&ConflictGraph::cycle(5).unwrap(), 2, &SolverConfig::default(), None).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!((report.clique, report.counting, report.chi_m), (2, 3, 3));
        assert!((report.theta - 5f64.sqrt()).abs() < 1e-3);
        assert!(report.bounded_sdp >= 2.5 - 1e-3);
    }
}
