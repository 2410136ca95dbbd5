//! The discrete-time simulation: a learning phase that fills the utility table
//! and the owners' knowledge bases, one placement per strategy and degree, then
//! per-slot measurement until the horizon.

use std::sync::Arc;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;

use crate::aggregation::{virtual_of, LedgerRow, OpClass};
use crate::baselines::{
    cluster_based_replicate, correlation_based_replicate, glaras_like_replicate,
    power_of_choice_replicate, randomized_replicate, simulate_piggyback, Knowledge,
};
use crate::churn::{ChurnModel, ChurnTrace};
use crate::config::ScenarioConfig;
use crate::error::{PlanError, Result};
use crate::metrics::{aggregate_report, evaluate_owner, SlotRecord, SummaryRow};
use crate::overlay::{generate_topology, Topology};
use crate::plan::{ReplicationPlan, Strategy};
use crate::pyramid::{pyramid_replicate, PlacementConfig};
use crate::rng::{stream_rng, SimRng, Stream};
use crate::utility::{sample_bandwidths, sample_storage, NodeState};
use crate::world::World;

/// Outcome of one owner's placement attempt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanRecord {
    pub topology_seed: u64,
    pub strategy: Strategy,
    pub r: usize,
    pub plan: ReplicationPlan,
    /// Set when the strategy could not produce a plan; the whole degree is
    /// then counted as shortfall.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRecord {
    pub topology_seed: u64,
    pub strategy: Strategy,
    pub r: usize,
    pub op_class: OpClass,
    pub count: u64,
    pub messages: u64,
}

/// A topology with its churn traces, node attributes and the state reached at
/// the end of the learning phase.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub cfg: ScenarioConfig,
    pub seed: u64,
    pub world: World,
    pub knowledge: Knowledge,
    pub owners: Vec<usize>,
    learned: bool,
}

impl Simulation {
    /// Generates the topology, traces and attributes and picks the owners
    /// among the nodes that will be online when placement happens.
    pub fn new(cfg: &ScenarioConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let topology = Arc::new(generate_topology(&cfg.topology_params(), seed)?);
        let horizon = cfg.horizon_hours as f64;
        let model = ChurnModel::new(&cfg.churn, &topology.region_populations(), seed)?;
        let traces: Vec<ChurnTrace> = topology
            .nodes
            .iter()
            .enumerate()
            .map(|(i, node)| model.trace(seed, i, node.region, horizon))
            .collect();

        let mut attr_rng = stream_rng(seed, Stream::Attributes, 0);
        let bw = sample_bandwidths(
            cfg.n,
            cfg.bandwidth.mean_kbps,
            cfg.bandwidth.bw_max(),
            &mut attr_rng,
        );
        let storage = sample_storage(cfg.n, cfg.storage.min, cfg.storage.max, &mut attr_rng);
        let nodes = bw
            .iter()
            .zip(&storage)
            .map(|(&b, &s)| NodeState::new(b, cfg.bandwidth.bw_max(), s, cfg.fpti_slots))
            .collect();

        let placement_time = cfg.learning_slots() as f64 * cfg.ts_hours;
        let candidates: Vec<usize> = traces
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_online(placement_time))
            .map(|(i, _)| i)
            .collect();
        let k = cfg.num_owners.min(candidates.len());
        let mut owner_rng = stream_rng(seed, Stream::Owners, 0);
        let mut owners: Vec<usize> = sample(&mut owner_rng, candidates.len(), k)
            .into_iter()
            .map(|p| candidates[p])
            .collect();
        owners.sort_unstable();

        let world = World::new(
            topology,
            Arc::new(traces),
            nodes,
            cfg.effective_vs_size(),
            cfg.fpti_slots,
            cfg.ts_hours,
            cfg.cost_c,
        );
        let knowledge = Knowledge::new(cfg.n, &owners);
        Ok(Simulation {
            cfg: cfg.clone(),
            seed,
            world,
            knowledge,
            owners,
            learned: false,
        })
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.world.topology
    }

    /// Advances the world by one slot of the learning phase. At cycle
    /// boundaries the utility table starts a new epoch; each online node
    /// refreshes and reports at its first online slot of a cycle.
    pub fn step_learning(&mut self, slot: usize, piggyback: bool) {
        let world = &mut self.world;
        world.set_slot(slot);
        if slot > 0 && slot.is_multiple_of(world.fpti_slots) {
            let next = world.table.epoch() + 1;
            world.table.reset_epoch(next);
        }
        let online: Vec<usize> = world.online_nodes().collect();
        for &node in &online {
            if world.refresh_utility(node) {
                let placement = &world.topology.nodes[node];
                let vnode = virtual_of(placement.name_id, world.vs_size);
                let free = world.nodes[node].has_free_storage();
                let _ = world.table.report_utility(
                    node,
                    placement.region,
                    vnode,
                    &world.nodes[node].utility_vector,
                    true,
                    free,
                    &mut world.ledger,
                );
            }
        }
        if piggyback {
            let searches = self.cfg.piggyback.budget(online.len());
            let mut rng = stream_rng(self.seed, Stream::Piggyback, slot as u64);
            simulate_piggyback(world, &mut self.knowledge, slot, searches, &mut rng);
        }
    }

    /// Runs every learning slot and positions the world at the placement slot.
    pub fn learn(&mut self) {
        if self.learned {
            return;
        }
        let piggyback = self.cfg.strategies.iter().any(|s| s.uses_knowledge_base());
        let learning = self.cfg.learning_slots();
        for slot in 0..learning {
            self.step_learning(slot, piggyback);
        }
        self.world.set_slot(learning);
        self.learned = true;
    }

    /// Share of the eligible nodes (other than the owner) present in the
    /// owner's knowledge base at the current slot.
    pub fn kb_coverage(&self, owner: usize) -> f64 {
        let kb = self.knowledge.base(owner);
        let eligible: Vec<usize> = (0..self.world.n())
            .filter(|&v| v != owner && self.world.is_eligible(v))
            .collect();
        if eligible.is_empty() {
            return 1.0;
        }
        eligible.iter().filter(|&&v| kb.contains(v)).count() as f64 / eligible.len() as f64
    }

    pub fn placement_config(&self) -> PlacementConfig {
        PlacementConfig {
            alpha: self.cfg.alpha,
            exclude_owner: self.cfg.exclude_owner,
        }
    }

    /// Places every owner's replicas with `strategy` in owner-id order.
    pub fn place_all(&self, world: &mut World, strategy: Strategy, r: usize) -> Vec<PlanRecord> {
        let cfg = self.placement_config();
        let mut rng = strategy_rng(self.seed, strategy, r);
        self.owners
            .iter()
            .map(|&owner| {
                let result = replicate(strategy, owner, r, world, &self.knowledge, &cfg, &mut rng);
                let (plan, error) = match result {
                    Ok(plan) => (plan, None),
                    Err(e) => {
                        let mut plan = ReplicationPlan::new(owner, strategy, r);
                        plan.shortfall = r;
                        (plan, Some(e.to_string()))
                    }
                };
                PlanRecord {
                    topology_seed: self.seed,
                    strategy,
                    r,
                    plan,
                    error,
                }
            })
            .collect()
    }
}

fn strategy_rng(seed: u64, strategy: Strategy, r: usize) -> SimRng {
    let idx = Strategy::ALL.iter().position(|&s| s == strategy).unwrap() as u64;
    stream_rng(seed, Stream::Strategy, (idx << 32) | r as u64)
}

/// Dispatches one owner's placement to the given strategy.
pub fn replicate(
    strategy: Strategy,
    owner: usize,
    r: usize,
    world: &mut World,
    knowledge: &Knowledge,
    cfg: &PlacementConfig,
    rng: &mut SimRng,
) -> std::result::Result<ReplicationPlan, PlanError> {
    match strategy {
        Strategy::Pyramid => pyramid_replicate(owner, r, world, cfg, rng),
        Strategy::Glaras => glaras_like_replicate(owner, r, world, cfg, rng),
        Strategy::Random => randomized_replicate(owner, r, world, knowledge.base(owner), cfg, rng),
        Strategy::Poc => {
            power_of_choice_replicate(owner, r, world, knowledge.base(owner), cfg, rng)
        }
        Strategy::Cluster => {
            cluster_based_replicate(owner, r, world, knowledge.base(owner), cfg, rng)
        }
        Strategy::Correlation => {
            correlation_based_replicate(owner, r, world, knowledge.base(owner), cfg)
        }
    }
}

/// Everything one topology seed produces.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub seed: u64,
    pub owners: Vec<usize>,
    pub records: Vec<SlotRecord>,
    pub plans: Vec<PlanRecord>,
    pub ledgers: Vec<LedgerRecord>,
    pub kb_coverage: Vec<f64>,
    /// World hash taken right before each (strategy, degree) placement.
    pub pre_placement_fingerprints: Vec<(Strategy, usize, u64)>,
    pub topology: Arc<Topology>,
}

impl ScenarioRun {
    pub fn summary(&self) -> Vec<SummaryRow> {
        aggregate_report(&self.records)
    }
}

struct Placed {
    strategy: Strategy,
    r: usize,
    fingerprint: u64,
    plans: Vec<PlanRecord>,
    ledger: Vec<LedgerRow>,
}

/// Runs the whole scenario for one topology seed.
pub fn run_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<ScenarioRun> {
    let mut sim = Simulation::new(cfg, seed)?;
    sim.learn();
    let kb_coverage = if cfg.strategies.iter().any(|s| s.uses_knowledge_base()) {
        sim.owners.iter().map(|&o| sim.kb_coverage(o)).collect()
    } else {
        Vec::new()
    };

    let combos: Vec<(Strategy, usize)> = cfg
        .replication_degrees
        .iter()
        .flat_map(|&r| cfg.strategies.iter().map(move |&s| (s, r)))
        .collect();

    let placed: Vec<Placed> = if cfg.shared_world {
        let mut out = Vec::new();
        for &r in &cfg.replication_degrees {
            let mut world = sim.world.clone();
            for &strategy in &cfg.strategies {
                out.push(place_one(&sim, &mut world, strategy, r));
            }
        }
        out
    } else {
        combos
            .par_iter()
            .map(|&(strategy, r)| {
                let mut world = sim.world.clone();
                place_one(&sim, &mut world, strategy, r)
            })
            .collect()
    };

    let online = online_matrix(&sim);
    let bandwidth: Vec<f64> = sim.world.nodes.iter().map(|n| n.bandwidth).collect();
    let learning = cfg.learning_slots();
    let topology = Arc::clone(sim.topology());
    let records: Vec<SlotRecord> = placed
        .par_iter()
        .map(|p| {
            let mut out = Vec::new();
            for (k, online) in online.iter().enumerate() {
                for rec in &p.plans {
                    let m =
                        evaluate_owner(&rec.plan.original_replicas, &topology, &bandwidth, online);
                    out.push(SlotRecord {
                        topology_seed: seed,
                        strategy: p.strategy,
                        r: p.r,
                        slot: learning + k,
                        owner: rec.plan.owner,
                        avg_bw_kbps: m.avg_bw_kbps,
                        avg_delay_ms: m.avg_delay_ms,
                        unavailable: m.unavailable,
                        online_replicas: m.online_replicas,
                    });
                }
            }
            out
        })
        .flatten()
        .collect();

    let mut plans = Vec::new();
    let mut ledgers = Vec::new();
    let mut fingerprints = Vec::new();
    for p in placed {
        fingerprints.push((p.strategy, p.r, p.fingerprint));
        ledgers.extend(p.ledger.into_iter().map(|row| LedgerRecord {
            topology_seed: seed,
            strategy: p.strategy,
            r: p.r,
            op_class: row.op_class,
            count: row.count,
            messages: row.messages,
        }));
        plans.extend(p.plans);
    }

    Ok(ScenarioRun {
        seed,
        owners: sim.owners.clone(),
        records,
        plans,
        ledgers,
        kb_coverage,
        pre_placement_fingerprints: fingerprints,
        topology,
    })
}

fn place_one(sim: &Simulation, world: &mut World, strategy: Strategy, r: usize) -> Placed {
    let fingerprint = world.fingerprint();
    let plans = sim.place_all(world, strategy, r);
    Placed {
        strategy,
        r,
        fingerprint,
        plans,
        ledger: world.ledger.rows(),
    }
}

/// Online flags of every node for each measurement slot.
fn online_matrix(sim: &Simulation) -> Vec<Vec<bool>> {
    let cfg = &sim.cfg;
    (cfg.learning_slots()..cfg.horizon_slots())
        .map(|slot| {
            let time = slot as f64 * cfg.ts_hours;
            sim.world
                .traces
                .iter()
                .map(|t| time < t.horizon && t.is_online(time))
                .collect()
        })
        .collect()
}

/// Runs every configured seed, in parallel, in seed order.
pub fn sweep(cfg: &ScenarioConfig) -> Result<Vec<ScenarioRun>> {
    cfg.validate()?;
    cfg.seeds
        .par_iter()
        .map(|&seed| run_scenario(cfg, seed))
        .collect()
}

/// Summary over all runs of a sweep.
pub fn merged_summary(runs: &[ScenarioRun]) -> Vec<SummaryRow> {
    let records: Vec<SlotRecord> = runs
        .iter()
        .flat_map(|r| r.records.iter().cloned())
        .collect();
    aggregate_report(&records)
}
