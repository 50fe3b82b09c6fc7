use rand::seq::SliceRandom;

use crate::error::Result;
use crate::graph::{seeded_rng, Partition, TimetablingInstance};
use crate::units::{Class, Units};

/// Saturation-degree greedy over units. A unit is saturated by each open
/// class it cannot join. The most saturated unit goes first, then the one
/// with the most conflicts, then a seeded random order.
pub(crate) fn greedy_units(units: &Units, seed: u64) -> Vec<Class> {
    let count = units.len();
    let degree = units.degrees();
    let mut tiebreak: Vec<usize> = (0..count).collect();
    tiebreak.shuffle(&mut seeded_rng(seed));
    let mut rank = vec![0; count];
    for (r, &u) in tiebreak.iter().enumerate() {
        rank[u] = r;
    }
    let mut classes: Vec<Class> = Vec::new();
    let mut done = vec![false; count];
    for _ in 0..count {
        let (u, _) = (0..count)
            .filter(|&u| !done[u])
            .map(|u| {
                let blocked = classes.iter().filter(|c| !units.can_join(c, u)).count();
                (u, (blocked, degree[u], units.weight[u], usize::MAX - rank[u]))
            })
            .max_by_key(|&(_, key)| key)
            .expect("an uncoloured unit remains");
        done[u] = true;
        match classes.iter().position(|c| units.can_join(c, u)) {
            Some(c) => units.join(&mut classes[c], u),
            None => {
                let mut class = units.empty_class();
                units.join(&mut class, u);
                classes.push(class);
            }
        }
    }
    classes
}

pub(crate) fn to_partition(classes: &[Class]) -> Partition {
    Partition::new(classes.iter().map(|c| c.members.clone()).collect()).normalized()
}

/// Saturation-degree greedy colouring respecting the class-size cap, room
/// capacities, features and pre-colouring. `seed` breaks ties.
///
/// Fails with [`crate::Error::Infeasible`] when some event fits no room on
/// its own, or a pre-colouring class cannot share a period.
pub fn greedy_colouring(inst: &TimetablingInstance, seed: u64) -> Result<Partition> {
    let units = Units::new(inst)?;
    Ok(to_partition(&greedy_units(&units, seed)))
}
