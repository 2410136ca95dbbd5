//! Exhaustive reference solver for small region instances.
//!
//! Enumerates every selection `y`; for each, searches every assignment of the
//! (virtual node, slot) pairs to members of `y` by dynamic programming over
//! the set of members already serving a pair. Shares no code path with
//! [`solve_rwd`](super::solve_rwd) beyond the objective evaluation.

use super::rwd::{Assignment, Combinations, RwdInstance, RwdSolution};
use crate::error::{Error, Result};

pub const MAX_VIRTUAL_NODES: usize = 6;
pub const MAX_SLOTS: usize = 4;
pub const MAX_SUB_DEGREE: usize = 3;

/// Ties go to the lexicographically smallest `y`, then the lexicographically
/// smallest assignment in (j, t) order.
pub fn brute_force_rwd(instance: &RwdInstance) -> Result<RwdSolution> {
    if instance.size() > MAX_VIRTUAL_NODES
        || instance.slots() > MAX_SLOTS
        || instance.sub_degree > MAX_SUB_DEGREE
    {
        return Err(Error::Instance(format!(
            "instance ({} nodes, {} slots, degree {}) exceeds oracle bounds",
            instance.size(),
            instance.slots(),
            instance.sub_degree
        )));
    }
    let populated = instance.populated();
    let r = instance.sub_degree;
    if r == 0 || r > populated.len() {
        return Err(Error::Instance("no feasible selection".into()));
    }
    let mut pairs = Vec::new();
    for &j in &populated {
        for t in 0..instance.slots() {
            pairs.push((j, t));
        }
    }

    let mut best: Option<RwdSolution> = None;
    for y in Combinations::new(&populated, r) {
        let Some(x) = best_assignment(instance, &y, &pairs) else {
            continue;
        };
        let objective = instance.objective(&x);
        let better = match &best {
            None => true,
            Some(b) => objective > b.objective,
        };
        if better {
            best = Some(RwdSolution { y, x, objective });
        }
    }
    best.ok_or_else(|| Error::Instance("no feasible selection".into()))
}

fn best_assignment(
    instance: &RwdInstance,
    y: &[usize],
    pairs: &[(usize, usize)],
) -> Option<Assignment> {
    let members = y.len();
    let full = (1usize << members) - 1;
    let masks = 1usize << members;
    // value[k][mask]: best gain from pairs[k..] given `mask` already serve.
    let mut value = vec![vec![f64::NEG_INFINITY; masks]; pairs.len() + 1];
    value[pairs.len()][full] = 0.0;
    for k in (0..pairs.len()).rev() {
        let (j, t) = pairs[k];
        for mask in 0..masks {
            let mut v = f64::NEG_INFINITY;
            for (m, &i) in y.iter().enumerate() {
                let rest = value[k + 1][mask | (1 << m)];
                if rest == f64::NEG_INFINITY {
                    continue;
                }
                let candidate = instance.contribution(i, j, t) + rest;
                if candidate > v {
                    v = candidate;
                }
            }
            value[k][mask] = v;
        }
    }
    if value[0][0] == f64::NEG_INFINITY {
        return None;
    }

    let mut x = Assignment::empty(instance.size(), instance.slots());
    let mut mask = 0;
    for (k, &(j, t)) in pairs.iter().enumerate() {
        let target = value[k][mask];
        let m = (0..members)
            .find(|&m| {
                let rest = value[k + 1][mask | (1 << m)];
                rest != f64::NEG_INFINITY && instance.contribution(y[m], j, t) + rest == target
            })
            .expect("reconstruction follows the table");
        x.set(j, t, y[m]);
        mask |= 1 << m;
    }
    Some(x)
}
