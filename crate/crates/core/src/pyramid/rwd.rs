//! Region-wide placement in the virtual system.
//!
//! For a region with utility table `ut`, slot weights `w` and sub-degree
//! `r`, choose `r` populated virtual nodes `y` and assign every (populated
//! virtual node `j`, slot `t`) pair to one of them, maximising
//! `sum c[i][j] * ut[i][t] * w[t]` over the assignments, where `c` is the
//! common-prefix length of the virtual IDs. Every selected node must serve at
//! least one pair.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::assignment::min_cost_assignment;
use crate::error::{Error, PlanError, Result};
use crate::overlay::{common_prefix_length, virtual_id_bits, NameId};

#[derive(Debug, Clone, PartialEq)]
pub struct RwdInstance {
    pub id_bits: u32,
    /// `ut[i][t]`, one row per virtual node.
    pub utility: Vec<Vec<f64>>,
    pub counts: Vec<u32>,
    pub weights: Vec<f64>,
    pub sub_degree: usize,
    /// Common-prefix lengths `c[i][j]` of the `id_bits`-bit virtual IDs.
    pub prefix: Vec<Vec<u32>>,
}

impl RwdInstance {
    pub fn size(&self) -> usize {
        self.utility.len()
    }

    pub fn slots(&self) -> usize {
        self.weights.len()
    }

    pub fn is_populated(&self, i: usize) -> bool {
        self.counts[i] > 0
    }

    pub fn populated(&self) -> Vec<usize> {
        (0..self.size()).filter(|&i| self.is_populated(i)).collect()
    }

    /// Gain of letting virtual node `i` serve `j` in slot `t`.
    pub fn contribution(&self, i: usize, j: usize, t: usize) -> f64 {
        self.prefix[i][j] as f64 * self.utility[i][t] * self.weights[t]
    }

    /// Objective of a full assignment, summed in (j, t) order.
    pub fn objective(&self, x: &Assignment) -> f64 {
        let mut total = 0.0;
        for j in 0..self.size() {
            for t in 0..self.slots() {
                if let Some(i) = x.get(j, t) {
                    total += self.contribution(i, j, t);
                }
            }
        }
        total
    }
}

/// Builds an instance over `ut.len()` virtual nodes whose IDs have
/// `ceil(log2 vs_size)` bits.
pub fn build_rwd_instance(
    ut: &[Vec<f64>],
    counts: &[u32],
    w: &[f64],
    sub_degree: usize,
    vs_size: usize,
) -> Result<RwdInstance> {
    let id_bits = virtual_id_bits(vs_size);
    let size = ut.len();
    if counts.len() != size {
        return Err(Error::Instance(format!(
            "{} utility rows but {} counts",
            size,
            counts.len()
        )));
    }
    if size > 1usize << id_bits {
        return Err(Error::Instance(format!(
            "{size} virtual nodes do not fit in {id_bits}-bit ids"
        )));
    }
    if ut.iter().any(|row| row.len() != w.len()) {
        return Err(Error::Instance(
            "utility rows and weights differ in length".into(),
        ));
    }
    if sub_degree == 0 {
        return Err(Error::Instance(
            "sub-replication degree must be at least 1".into(),
        ));
    }
    let populated = counts.iter().filter(|&&c| c > 0).count();
    if sub_degree > populated {
        return Err(Error::Instance(format!(
            "sub-replication degree {sub_degree} exceeds {populated} populated virtual nodes"
        )));
    }
    let prefix = (0..size)
        .map(|i| {
            (0..size)
                .map(|j| {
                    common_prefix_length(
                        NameId::new(i as u64, id_bits),
                        NameId::new(j as u64, id_bits),
                    )
                })
                .collect()
        })
        .collect();
    Ok(RwdInstance {
        id_bits,
        utility: ut.to_vec(),
        counts: counts.to_vec(),
        weights: w.to_vec(),
        sub_degree,
        prefix,
    })
}

/// Serving replica of every (virtual node, slot) pair; `None` for
/// unpopulated virtual nodes, which issue no requests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Assignment {
    slots: usize,
    serving: Vec<Option<usize>>,
}

impl Assignment {
    pub fn empty(size: usize, slots: usize) -> Self {
        Assignment {
            slots,
            serving: vec![None; size * slots],
        }
    }

    pub fn get(&self, j: usize, t: usize) -> Option<usize> {
        self.serving[j * self.slots + t]
    }

    pub fn set(&mut self, j: usize, t: usize, i: usize) {
        self.serving[j * self.slots + t] = Some(i);
    }

    pub fn entries(&self) -> &[Option<usize>] {
        &self.serving
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RwdSolution {
    /// Selected virtual nodes, ascending.
    pub y: Vec<usize>,
    pub x: Assignment,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstraintViolation {
    #[error("pair ({j}, {t}) is served by {i}, which is not selected")]
    ServedByUnselected { j: usize, t: usize, i: usize },
    #[error("selected virtual node {0} serves no pair")]
    IdleReplica(usize),
    #[error("pair ({j}, {t}) has no serving replica")]
    Unserved { j: usize, t: usize },
    #[error("unpopulated virtual node {0} has assignments")]
    UnpopulatedRequester(usize),
    #[error("{got} replicas selected, sub-degree is {want}")]
    WrongDegree { got: usize, want: usize },
    #[error("selection {0:?} is not a sorted set of populated virtual nodes")]
    BadSelection(Vec<usize>),
    #[error("objective {reported} differs from recomputed {actual}")]
    Objective { reported: f64, actual: f64 },
}

/// Verifies every placement constraint on a solution. Binary decision values
/// hold by construction of [`Assignment`].
pub fn check_solution(
    instance: &RwdInstance,
    sol: &RwdSolution,
) -> std::result::Result<(), ConstraintViolation> {
    if sol.y.len() != instance.sub_degree {
        return Err(ConstraintViolation::WrongDegree {
            got: sol.y.len(),
            want: instance.sub_degree,
        });
    }
    let sorted = sol.y.windows(2).all(|w| w[0] < w[1]);
    if !sorted
        || sol
            .y
            .iter()
            .any(|&i| i >= instance.size() || !instance.is_populated(i))
    {
        return Err(ConstraintViolation::BadSelection(sol.y.clone()));
    }
    let mut served = vec![0usize; instance.size()];
    for j in 0..instance.size() {
        for t in 0..instance.slots() {
            match (instance.is_populated(j), sol.x.get(j, t)) {
                (true, None) => return Err(ConstraintViolation::Unserved { j, t }),
                (false, Some(_)) => return Err(ConstraintViolation::UnpopulatedRequester(j)),
                (false, None) => {}
                (true, Some(i)) => {
                    if !sol.y.contains(&i) {
                        return Err(ConstraintViolation::ServedByUnselected { j, t, i });
                    }
                    served[i] += 1;
                }
            }
        }
    }
    if let Some(&idle) = sol.y.iter().find(|&&i| served[i] == 0) {
        return Err(ConstraintViolation::IdleReplica(idle));
    }
    let actual = instance.objective(&sol.x);
    if actual != sol.objective {
        return Err(ConstraintViolation::Objective {
            reported: sol.objective,
            actual,
        });
    }
    Ok(())
}

/// Lexicographic k-subsets of `items`.
pub(crate) struct Combinations<'a> {
    items: &'a [usize],
    idx: Vec<usize>,
    done: bool,
}

impl<'a> Combinations<'a> {
    pub(crate) fn new(items: &'a [usize], k: usize) -> Self {
        Combinations {
            items,
            idx: (0..k).collect(),
            done: k > items.len(),
        }
    }
}

impl Iterator for Combinations<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.iter().map(|&i| self.items[i]).collect();
        let (n, k) = (self.items.len(), self.idx.len());
        let mut pos = k;
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            if self.idx[pos] < n - k + pos {
                self.idx[pos] += 1;
                for q in pos + 1..k {
                    self.idx[q] = self.idx[q - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Best assignment for a fixed selection `y`, or `None` when fewer pairs
/// exist than replicas.
///
/// Every pair first goes to its best selected node. Selected nodes left idle
/// each take one distinct representative pair; choosing representatives is a
/// min-cost assignment on the loss `best(p) - contribution(i, p)`, which makes
/// the completion exact.
fn complete_assignment(
    instance: &RwdInstance,
    y: &[usize],
    pairs: &[(usize, usize)],
) -> Option<Assignment> {
    if pairs.len() < y.len() {
        return None;
    }
    let mut x = Assignment::empty(instance.size(), instance.slots());
    let mut best_gain = Vec::with_capacity(pairs.len());
    let mut served = vec![false; y.len()];
    for &(j, t) in pairs {
        let mut arg = 0;
        let mut gain = instance.contribution(y[0], j, t);
        for (k, &i) in y.iter().enumerate().skip(1) {
            let g = instance.contribution(i, j, t);
            if g > gain {
                gain = g;
                arg = k;
            }
        }
        served[arg] = true;
        best_gain.push(gain);
        x.set(j, t, y[arg]);
    }
    if served.iter().all(|&s| s) {
        return Some(x);
    }
    let loss: Vec<Vec<f64>> = y
        .iter()
        .map(|&i| {
            pairs
                .iter()
                .zip(&best_gain)
                .map(|(&(j, t), &g)| g - instance.contribution(i, j, t))
                .collect()
        })
        .collect();
    for (k, p) in min_cost_assignment(&loss).into_iter().enumerate() {
        let (j, t) = pairs[p];
        x.set(j, t, y[k]);
    }
    Some(x)
}

/// Exact maximiser over all selections of `sub_degree` populated virtual
/// nodes. Ties go to the lexicographically smallest selection.
pub fn solve_rwd(instance: &RwdInstance) -> std::result::Result<RwdSolution, PlanError> {
    let populated = instance.populated();
    let r = instance.sub_degree;
    if r == 0 || r > populated.len() {
        return Err(PlanError::NoFeasibleSet);
    }
    let pairs: Vec<(usize, usize)> = populated
        .iter()
        .flat_map(|&j| (0..instance.slots()).map(move |t| (j, t)))
        .collect();

    let mut best: Option<RwdSolution> = None;
    for y in Combinations::new(&populated, r) {
        let Some(x) = complete_assignment(instance, &y, &pairs) else {
            continue;
        };
        let objective = instance.objective(&x);
        if best.as_ref().is_none_or(|b| objective > b.objective) {
            best = Some(RwdSolution { y, x, objective });
        }
    }
    best.ok_or(PlanError::NoFeasibleSet)
}

impl fmt::Display for RwdSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y={:?} objective={}", self.y, self.objective)
    }
}
