//! Colouring units shared by the greedy heuristic and the exact search. Each
//! pre-colouring class is one unit and every other vertex is a unit of its
//! own. Two units conflict when an edge joins them or when both are
//! pre-colouring classes.

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::graph::TimetablingInstance;

pub(crate) struct Units<'a> {
    pub inst: &'a TimetablingInstance,
    pub members: Vec<Vec<usize>>,
    pub weight: Vec<usize>,
    pub conflicts: Vec<FixedBitSet>,
    /// Capacity and feature counting can be skipped.
    plain: bool,
}

#[derive(Clone)]
pub(crate) struct Class {
    pub units: FixedBitSet,
    pub members: Vec<usize>,
    pub weight: usize,
}

impl<'a> Units<'a> {
    pub fn new(inst: &'a TimetablingInstance) -> Result<Self> {
        inst.validate()?;
        let n = inst.n();
        let mut unit_of = vec![usize::MAX; n];
        let mut members: Vec<Vec<usize>> = Vec::new();
        for class in inst.precolouring.iter().filter(|c| !c.is_empty()) {
            for &v in class {
                unit_of[v] = members.len();
            }
            members.push(class.clone());
        }
        let pre = members.len();
        for v in 0..n {
            if unit_of[v] == usize::MAX {
                unit_of[v] = members.len();
                members.push(vec![v]);
            }
        }
        for (i, unit) in members.iter().enumerate() {
            if !inst.class_is_admissible(unit) {
                return Err(Error::Infeasible(if i < pre {
                    format!("pre-colouring class {i} cannot share a period")
                } else {
                    format!("event {} fits no room", unit[0])
                }));
            }
        }
        let count = members.len();
        let mut conflicts = vec![FixedBitSet::with_capacity(count); count];
        for &(u, v) in inst.graph.edges() {
            let (a, b) = (unit_of[u], unit_of[v]);
            conflicts[a].insert(b);
            conflicts[b].insert(a);
        }
        for a in 0..pre {
            for b in 0..pre {
                if a != b {
                    conflicts[a].insert(b);
                }
            }
        }
        let weight = members.iter().map(|u| inst.class_weight(u)).collect();
        let plain = inst.feature_count == 0 && inst.event_sizes.iter().all(|&s| inst.rooms_at_least(s) == inst.m);
        Ok(Units {
            inst,
            members,
            weight,
            conflicts,
            plain,
        })
    }

    /// True when class admissibility depends only on conflicts and the
    /// weighted size.
    pub fn is_plain(&self) -> bool {
        self.plain
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn total_weight(&self) -> usize {
        self.weight.iter().sum()
    }

    pub fn empty_class(&self) -> Class {
        Class {
            units: FixedBitSet::with_capacity(self.len()),
            members: Vec::new(),
            weight: 0,
        }
    }

    pub fn can_join(&self, class: &Class, u: usize) -> bool {
        if class.weight + self.weight[u] > self.inst.m || !self.conflicts[u].is_disjoint(&class.units) {
            return false;
        }
        if self.plain {
            return true;
        }
        let mut trial = class.members.clone();
        trial.extend_from_slice(&self.members[u]);
        self.inst.class_is_admissible(&trial)
    }

    pub fn join(&self, class: &mut Class, u: usize) {
        class.units.insert(u);
        class.members.extend_from_slice(&self.members[u]);
        class.weight += self.weight[u];
    }

    pub fn leave(&self, class: &mut Class, u: usize) {
        class.units.set(u, false);
        let len = class.members.len() - self.members[u].len();
        class.members.truncate(len);
        class.weight -= self.weight[u];
    }

    /// Conflict degree of every unit.
    pub fn degrees(&self) -> Vec<usize> {
        self.conflicts.iter().map(|c| c.count_ones(..)).collect()
    }
}
