//! Comparison strategies. All but the locality-only one choose replicas from
//! the owner's [`KnowledgeBase`], scoring nodes by the utility vectors the owner
//! observed rather than their live state.

mod kmeans;
mod knowledge;

use rand::seq::SliceRandom;
use rand::Rng;

pub use kmeans::kmeans;
pub use knowledge::{
    default_search_budget, path_length, simulate_piggyback, Knowledge, KnowledgeBase,
    KnowledgeEntry,
};

use crate::error::PlanError;
use crate::plan::{ReplicationPlan, Strategy};
use crate::pyramid::{replicate_virtual, PlacementConfig, VirtualMode};
use crate::world::World;

/// Floor for the pairwise correlation in the correlation-based pairing.
pub const CORRELATION_EPSILON: f64 = 1e-9;

/// Known nodes that are online with free storage, ascending by id.
fn eligible_known(
    owner: usize,
    world: &World,
    kb: &KnowledgeBase,
    cfg: &PlacementConfig,
) -> Vec<usize> {
    kb.nodes()
        .filter(|&v| world.is_eligible(v) && !(cfg.exclude_owner && v == owner))
        .collect()
}

fn finish(world: &mut World, mut plan: ReplicationPlan, chosen: Vec<usize>) -> ReplicationPlan {
    plan.shortfall = plan.degree - chosen.len();
    plan.original_replicas = chosen;
    world.place(plan.owner, &plan.original_replicas);
    plan
}

/// Higher score wins, ties to the lower node id.
fn better(kb: &KnowledgeBase, a: usize, b: usize) -> usize {
    let (sa, sb) = (kb.score(a), kb.score(b));
    if sa > sb || (sa == sb && a < b) {
        a
    } else {
        b
    }
}

pub fn randomized_replicate<R: Rng + ?Sized>(
    owner: usize,
    r: usize,
    world: &mut World,
    kb: &KnowledgeBase,
    cfg: &PlacementConfig,
    rng: &mut R,
) -> Result<ReplicationPlan, PlanError> {
    if kb.is_empty() {
        return Err(PlanError::EmptyKnowledge(owner));
    }
    let mut order: Vec<usize> = kb.nodes().collect();
    order.shuffle(rng);
    let chosen: Vec<usize> = order
        .into_iter()
        .filter(|&v| world.is_eligible(v) && !(cfg.exclude_owner && v == owner))
        .take(r)
        .collect();
    Ok(finish(
        world,
        ReplicationPlan::new(owner, Strategy::Random, r),
        chosen,
    ))
}

pub fn power_of_choice_replicate<R: Rng + ?Sized>(
    owner: usize,
    r: usize,
    world: &mut World,
    kb: &KnowledgeBase,
    cfg: &PlacementConfig,
    rng: &mut R,
) -> Result<ReplicationPlan, PlanError> {
    if kb.is_empty() {
        return Err(PlanError::EmptyKnowledge(owner));
    }
    let mut pool = eligible_known(owner, world, kb, cfg);
    let mut chosen = Vec::with_capacity(r);
    while chosen.len() < r && !pool.is_empty() {
        let pick = if pool.len() == 1 {
            0
        } else {
            let a = rng.gen_range(0..pool.len());
            let mut b = rng.gen_range(0..pool.len() - 1);
            if b >= a {
                b += 1;
            }
            if better(kb, pool[a], pool[b]) == pool[a] {
                a
            } else {
                b
            }
        };
        chosen.push(pool.remove(pick));
    }
    Ok(finish(
        world,
        ReplicationPlan::new(owner, Strategy::Poc, r),
        chosen,
    ))
}

pub fn cluster_based_replicate<R: Rng + ?Sized>(
    owner: usize,
    r: usize,
    world: &mut World,
    kb: &KnowledgeBase,
    cfg: &PlacementConfig,
    rng: &mut R,
) -> Result<ReplicationPlan, PlanError> {
    if kb.is_empty() {
        return Err(PlanError::EmptyKnowledge(owner));
    }
    let pool = eligible_known(owner, world, kb, cfg);
    let plan = ReplicationPlan::new(owner, Strategy::Cluster, r);
    if pool.len() <= r {
        return Ok(finish(world, plan, pool));
    }
    let points: Vec<&[f64]> = pool
        .iter()
        .map(|&v| kb.get(v).unwrap().utility_vector.values())
        .collect();
    let labels = kmeans(&points, r, rng);
    let mut heads: Vec<Option<usize>> = vec![None; r];
    for (&v, &c) in pool.iter().zip(&labels) {
        heads[c] = Some(match heads[c] {
            None => v,
            Some(h) => better(kb, h, v),
        });
    }
    let mut chosen: Vec<usize> = heads.into_iter().flatten().collect();
    // Clusters left empty by degenerate data are filled by the best unused nodes.
    if chosen.len() < r {
        let mut rest: Vec<usize> = pool
            .iter()
            .copied()
            .filter(|v| !chosen.contains(v))
            .collect();
        rest.sort_by(|&a, &b| kb.score(b).total_cmp(&kb.score(a)).then(a.cmp(&b)));
        chosen.extend(rest.into_iter().take(r - chosen.len()));
    }
    Ok(finish(world, plan, chosen))
}

pub fn correlation_based_replicate(
    owner: usize,
    r: usize,
    world: &mut World,
    kb: &KnowledgeBase,
    cfg: &PlacementConfig,
) -> Result<ReplicationPlan, PlanError> {
    if kb.is_empty() {
        return Err(PlanError::EmptyKnowledge(owner));
    }
    let mut by_score = eligible_known(owner, world, kb, cfg);
    by_score.sort_by(|&a, &b| kb.score(b).total_cmp(&kb.score(a)).then(a.cmp(&b)));

    let seeds: Vec<usize> = by_score.iter().copied().take(r / 2).collect();
    let mut used: Vec<usize> = seeds.clone();
    let mut chosen = Vec::with_capacity(r);
    for &s in &seeds {
        chosen.push(s);
        let uv_s = &kb.get(s).unwrap().utility_vector;
        let mut partner: Option<(usize, f64)> = None;
        for &v in &by_score {
            if used.contains(&v) {
                continue;
            }
            let corr = uv_s
                .dot(&kb.get(v).unwrap().utility_vector)
                .max(CORRELATION_EPSILON);
            let ratio = kb.score(v) / corr;
            let take = match partner {
                None => true,
                Some((p, best)) => ratio > best || (ratio == best && v < p),
            };
            if take {
                partner = Some((v, ratio));
            }
        }
        if let Some((v, _)) = partner {
            used.push(v);
            chosen.push(v);
        }
    }
    if r % 2 == 1 {
        if let Some(&v) = by_score.iter().find(|v| !used.contains(v)) {
            chosen.push(v);
        }
    }
    Ok(finish(
        world,
        ReplicationPlan::new(owner, Strategy::Correlation, r),
        chosen,
    ))
}

/// Locality-only stand-in: the virtual-system pipeline with all utilities and
/// slot weights set to one, mapping each virtual replica to the first eligible
/// node found on the prefix walk.
pub fn glaras_like_replicate<R: Rng + ?Sized>(
    owner: usize,
    r: usize,
    world: &mut World,
    cfg: &PlacementConfig,
    rng: &mut R,
) -> Result<ReplicationPlan, PlanError> {
    replicate_virtual(owner, r, world, cfg, rng, VirtualMode::LocalityOnly)
}
