//! Mutable simulation state shared by every placement strategy.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::aggregation::{CostLedger, ReplicaRegistry, UtilityTable};
use crate::churn::{availability_vector, ChurnTrace};
use crate::overlay::{CandidateView, Topology, VirtualIndex};
use crate::utility::NodeState;

#[derive(Debug, Clone)]
pub struct World {
    pub topology: Arc<Topology>,
    pub index: Arc<VirtualIndex>,
    pub traces: Arc<Vec<ChurnTrace>>,
    pub nodes: Vec<NodeState>,
    pub online: Vec<bool>,
    pub slot: usize,
    pub vs_size: usize,
    pub fpti_slots: usize,
    pub ts_hours: f64,
    pub table: UtilityTable,
    pub registry: ReplicaRegistry,
    pub ledger: CostLedger,
    /// Last cycle in which each node refreshed its utility vector.
    last_refresh: Vec<Option<usize>>,
}

impl World {
    pub fn new(
        topology: Arc<Topology>,
        traces: Arc<Vec<ChurnTrace>>,
        nodes: Vec<NodeState>,
        vs_size: usize,
        fpti_slots: usize,
        ts_hours: f64,
        cost_c: f64,
    ) -> Self {
        assert_eq!(topology.n(), nodes.len());
        assert_eq!(topology.n(), traces.len());
        let index = Arc::new(VirtualIndex::new(&topology, vs_size));
        let table = UtilityTable::new(topology.num_regions(), index.virtual_ids(), fpti_slots);
        let ledger = CostLedger::new(topology.n(), cost_c);
        let n = topology.n();
        let mut world = World {
            topology,
            index,
            traces,
            nodes,
            online: vec![false; n],
            slot: 0,
            vs_size,
            fpti_slots,
            ts_hours,
            table,
            registry: ReplicaRegistry::default(),
            ledger,
            last_refresh: vec![None; n],
        };
        world.set_slot(0);
        world
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn slot_start(&self, slot: usize) -> f64 {
        slot as f64 * self.ts_hours
    }

    pub fn cycle_of(&self, slot: usize) -> usize {
        slot / self.fpti_slots
    }

    /// A node counts as online in a slot when it is online at the slot's start.
    pub fn set_slot(&mut self, slot: usize) {
        self.slot = slot;
        let time = self.slot_start(slot);
        for (flag, trace) in self.online.iter_mut().zip(self.traces.iter()) {
            *flag = time < trace.horizon && trace.is_online(time);
        }
    }

    pub fn is_eligible(&self, node: usize) -> bool {
        self.online[node] && self.nodes[node].has_free_storage()
    }

    pub fn online_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.online
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(|(i, _)| i)
    }

    /// Recomputes the node's availability over the completed cycles, at most
    /// once per cycle. Returns whether a refresh happened.
    pub fn refresh_utility(&mut self, node: usize) -> bool {
        let cycle = self.cycle_of(self.slot);
        if self.last_refresh[node] == Some(cycle) {
            return false;
        }
        self.last_refresh[node] = Some(cycle);
        let p = if cycle == 0 {
            vec![0.0; self.fpti_slots]
        } else {
            availability_vector(&self.traces[node], cycle, self.fpti_slots, self.ts_hours)
        };
        self.nodes[node].set_availability(p);
        true
    }

    /// Commits a replica set: bumps replication loads and publishes the set.
    pub fn place(&mut self, owner: usize, replicas: &[usize]) {
        for &node in replicas {
            self.nodes[node].add_replica();
        }
        if !replicas.is_empty() {
            self.registry
                .publish_replicas(owner, replicas, &mut self.ledger);
        }
    }

    pub fn view<'a>(&'a self, excluded: &'a [usize]) -> WorldView<'a> {
        WorldView {
            world: self,
            excluded,
        }
    }

    /// Hash of the mutable node state, used to check that strategies start
    /// from identical worlds.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.slot.hash(&mut h);
        self.online.hash(&mut h);
        for node in &self.nodes {
            node.rp_load.hash(&mut h);
            node.storage_capacity.hash(&mut h);
            node.bandwidth.to_bits().hash(&mut h);
            for v in node.utility_vector.iter() {
                v.to_bits().hash(&mut h);
            }
        }
        for owner in self.registry.owners() {
            owner.hash(&mut h);
        }
        h.finish()
    }
}

/// Live eligibility view with a per-call exclusion list.
pub struct WorldView<'a> {
    world: &'a World,
    excluded: &'a [usize],
}

impl CandidateView for WorldView<'_> {
    fn is_eligible(&self, node: usize) -> bool {
        self.world.is_eligible(node) && !self.excluded.contains(&node)
    }

    fn utility_score(&self, node: usize) -> f64 {
        self.world.nodes[node].utility_vector.score()
    }

    fn numerical_id(&self, node: usize) -> u64 {
        self.world.topology.nodes[node].numerical_id
    }
}
