use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;

use crate::aggregation::OpClass;
use crate::utility::UtilityVector;
use crate::world::World;

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeEntry {
    pub utility_vector: UtilityVector,
    pub last_seen_slot: usize,
}

/// What one data owner has learned from piggybacked search traffic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeBase {
    entries: BTreeMap<usize, KnowledgeEntry>,
}

impl KnowledgeBase {
    pub fn record(&mut self, node: usize, uv: &UtilityVector, slot: usize) {
        self.entries.insert(
            node,
            KnowledgeEntry {
                utility_vector: uv.clone(),
                last_seen_slot: slot,
            },
        );
    }

    pub fn get(&self, node: usize) -> Option<&KnowledgeEntry> {
        self.entries.get(&node)
    }

    pub fn contains(&self, node: usize) -> bool {
        self.entries.contains_key(&node)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Known nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn score(&self, node: usize) -> f64 {
        self.entries[&node].utility_vector.score()
    }
}

/// Knowledge bases of all data owners.
#[derive(Debug, Clone, PartialEq)]
pub struct Knowledge {
    owners: Vec<usize>,
    owner_slot: Vec<Option<usize>>,
    bases: Vec<KnowledgeBase>,
}

impl Knowledge {
    pub fn new(n: usize, owners: &[usize]) -> Self {
        let mut owner_slot = vec![None; n];
        for (k, &o) in owners.iter().enumerate() {
            owner_slot[o] = Some(k);
        }
        Knowledge {
            owners: owners.to_vec(),
            owner_slot,
            bases: vec![KnowledgeBase::default(); owners.len()],
        }
    }

    pub fn owners(&self) -> &[usize] {
        &self.owners
    }

    /// Panics when `owner` is not a data owner.
    pub fn base(&self, owner: usize) -> &KnowledgeBase {
        &self.bases[self.owner_slot[owner].expect("not a data owner")]
    }
}

/// Default number of random searches per slot: `4 * n_o * ceil(log2 n_o)`.
pub fn default_search_budget(online: usize) -> usize {
    4 * online * path_length(online)
}

/// Nodes on one simulated search path, `ceil(log2 n_o)` but at least 2.
pub fn path_length(online: usize) -> usize {
    if online < 2 {
        return online;
    }
    (online as f64).log2().ceil().max(2.0) as usize
}

/// Runs `searches` random searches among the online nodes. Every data owner on
/// a path learns the current utility vectors of the other path members.
pub fn simulate_piggyback<R: Rng + ?Sized>(
    world: &mut World,
    knowledge: &mut Knowledge,
    slot: usize,
    searches: usize,
    rng: &mut R,
) {
    let online: Vec<usize> = world.online_nodes().collect();
    let len = path_length(online.len()).min(online.len());
    if len < 2 {
        return;
    }
    let mut path = Vec::with_capacity(len);
    for _ in 0..searches {
        world.ledger.log(OpClass::Search);
        path.clear();
        path.extend(
            sample(rng, online.len(), len)
                .into_iter()
                .map(|p| online[p]),
        );
        for &member in &path {
            let Some(k) = knowledge.owner_slot[member] else {
                continue;
            };
            for &other in &path {
                if other != member {
                    knowledge.bases[k].record(other, &world.nodes[other].utility_vector, slot);
                }
            }
        }
    }
}
