//! Utility- and locality-aware placement over the virtual system.
//!
//! A data owner reads the aggregated utility table, splits its replication
//! degree across regions ([`swd`]), weighs the time slots of every region
//! ([`tcwd`]), solves the region placement exactly ([`solve_rwd`]) and maps
//! each selected virtual node to a concrete node with a bounded
//! search-for-utility.

mod assignment;
pub mod oracle;
mod rwd;
mod swd;
mod tcwd;

use rand::seq::index::sample;
use rand::Rng;

pub use assignment::min_cost_assignment;
pub use oracle::brute_force_rwd;
pub use rwd::{
    build_rwd_instance, check_solution, solve_rwd, Assignment, ConstraintViolation, RwdInstance,
    RwdSolution,
};
pub use swd::swd;
pub use tcwd::tcwd;

use crate::aggregation::{OpClass, TableSnapshot};
use crate::error::PlanError;
use crate::overlay::{best_of, search_for_utility, CandidateView};
use crate::plan::{RegionPlan, ReplicationPlan, Strategy};
use crate::world::World;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlacementConfig {
    /// Candidates visited by one search-for-utility.
    pub alpha: usize,
    /// Forbid the owner from hosting its own replica.
    pub exclude_owner: bool,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        PlacementConfig {
            alpha: 3,
            exclude_owner: false,
        }
    }
}

/// How the region instances are fed and how virtual replicas are mapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VirtualMode {
    /// Utility table and coverage weights; best-of-alpha mapping.
    UtilityAware,
    /// Constant utility and weights, so only prefix locality counts; the
    /// first eligible node on the walk is taken.
    LocalityOnly,
}

/// Places `r` replicas for `owner` and commits them to `world`.
pub fn pyramid_replicate<R: Rng + ?Sized>(
    owner: usize,
    r: usize,
    world: &mut World,
    cfg: &PlacementConfig,
    rng: &mut R,
) -> Result<ReplicationPlan, PlanError> {
    replicate_virtual(owner, r, world, cfg, rng, VirtualMode::UtilityAware)
}

pub(crate) fn replicate_virtual<R: Rng + ?Sized>(
    owner: usize,
    r: usize,
    world: &mut World,
    cfg: &PlacementConfig,
    rng: &mut R,
    mode: VirtualMode,
) -> Result<ReplicationPlan, PlanError> {
    assert!(r >= 1, "replication degree must be at least 1");
    let strategy = match mode {
        VirtualMode::UtilityAware => Strategy::Pyramid,
        VirtualMode::LocalityOnly => Strategy::Glaras,
    };
    let table = world.table.read_utility_table(&mut world.ledger);
    if table.is_empty() {
        return Err(PlanError::EmptyTable);
    }
    let mut plan = ReplicationPlan::new(owner, strategy, r);

    let pops = table.populations();
    let caps = table.populated_virtual_nodes();
    let capacity: usize = caps.iter().sum();
    let degree = r.min(capacity);
    plan.shortfall = r - degree;
    let sub = swd(&pops, &caps, degree)?;

    for (region, &sub_degree) in sub.iter().enumerate() {
        if sub_degree == 0 {
            continue;
        }
        let (ut, weights) = region_inputs(&table, region, mode);
        let instance = build_rwd_instance(
            &ut,
            &table.counts[region],
            &weights,
            sub_degree,
            world.vs_size,
        )
        .map_err(|_| PlanError::NoFeasibleSet)?;
        let solution = solve_rwd(&instance)?;
        plan.virtual_replicas
            .extend(solution.y.iter().map(|&v| (region, v)));
        plan.per_region.push(RegionPlan {
            region,
            sub_degree,
            weights,
            solution,
        });
    }

    let mut excluded: Vec<usize> = Vec::with_capacity(r + 1);
    if cfg.exclude_owner {
        excluded.push(owner);
    }
    for &(region, vrep) in &plan.virtual_replicas {
        world.ledger.log(OpClass::Search);
        let view = world.view(&excluded);
        let found = match mode {
            VirtualMode::UtilityAware => {
                search_for_utility(&world.index, vrep, region, cfg.alpha, &view, rng)
            }
            VirtualMode::LocalityOnly => {
                search_for_utility_first(&world.index, vrep, region, &view, rng)
            }
        };
        let found = found.or_else(|| match mode {
            VirtualMode::UtilityAware => {
                probe_region(world.index.region_nodes(region), cfg.alpha, &view, rng)
            }
            VirtualMode::LocalityOnly => {
                probe_region(world.index.region_nodes(region), 1, &view, rng)
            }
        });
        match found {
            Some(node) => {
                excluded.push(node);
                plan.original_replicas.push(node);
            }
            None => plan.shortfall += 1,
        }
    }

    world.place(owner, &plan.original_replicas);
    Ok(plan)
}

fn region_inputs(
    table: &TableSnapshot,
    region: usize,
    mode: VirtualMode,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    match mode {
        VirtualMode::UtilityAware => {
            let ut = table.averages[region].clone();
            let w = tcwd(&ut, &table.counts[region]);
            (ut, w)
        }
        VirtualMode::LocalityOnly => {
            let ut = table.counts[region]
                .iter()
                .map(|&c| vec![if c > 0 { 1.0 } else { 0.0 }; table.slots])
                .collect();
            (ut, vec![1.0; table.slots])
        }
    }
}

/// Name-ID style search: first eligible node on the walk from a random entry.
fn search_for_utility_first<V: CandidateView, R: Rng + ?Sized>(
    index: &crate::overlay::VirtualIndex,
    vrep: usize,
    region: usize,
    view: &V,
    rng: &mut R,
) -> Option<usize> {
    let bucket = index.bucket(region, vrep);
    if bucket.is_empty() {
        return None;
    }
    let entry = rng.gen_range(0..bucket.len());
    (0..bucket.len())
        .map(|k| bucket[(entry + k) % bucket.len()])
        .find(|&i| view.is_eligible(i))
}

/// Fallback when a prefix has no eligible node: best of `probes` random
/// eligible nodes anywhere in the region.
fn probe_region<V: CandidateView, R: Rng + ?Sized>(
    region_nodes: &[usize],
    probes: usize,
    view: &V,
    rng: &mut R,
) -> Option<usize> {
    let eligible: Vec<usize> = region_nodes
        .iter()
        .copied()
        .filter(|&i| view.is_eligible(i))
        .collect();
    if eligible.is_empty() {
        return None;
    }
    let k = probes.min(eligible.len());
    best_of(
        sample(rng, eligible.len(), k)
            .into_iter()
            .map(|p| eligible[p]),
        view,
    )
}
