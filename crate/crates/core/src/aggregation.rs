//! In-process stand-in for the decentralized bulletin board: the utility
//! table, the replica registry and the message-cost ledger.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::overlay::{virtual_id_bits, NameId};
use crate::utility::UtilityVector;

/// Virtual node of an original node: the leading `ceil(log2 vs_size)` bits
/// of its name ID.
pub fn virtual_of(name_id: NameId, vs_size: usize) -> usize {
    let bits = virtual_id_bits(vs_size);
    assert!(
        name_id.len() >= bits,
        "name id of {} bits is shorter than the {bits}-bit virtual id",
        name_id.len()
    );
    name_id.prefix(bits) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpClass {
    Report,
    ReadTable,
    Publish,
    Lookup,
    Search,
}

impl OpClass {
    pub const ALL: [OpClass; 5] = [
        OpClass::Report,
        OpClass::ReadTable,
        OpClass::Publish,
        OpClass::Lookup,
        OpClass::Search,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OpClass::Report => "report",
            OpClass::ReadTable => "read_table",
            OpClass::Publish => "publish",
            OpClass::Lookup => "lookup",
            OpClass::Search => "search",
        }
    }
}

impl fmt::Display for OpClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Counts operations and the messages they cost. Every operation is charged
/// `ceil(c * log2 n)` messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    messages_per_op: u64,
    ops: BTreeMap<OpClass, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub op_class: OpClass,
    pub count: u64,
    pub messages: u64,
}

impl CostLedger {
    pub fn new(n: usize, c: f64) -> Self {
        assert!(n >= 1 && c > 0.0);
        CostLedger {
            messages_per_op: (c * (n as f64).log2()).ceil().max(0.0) as u64,
            ops: BTreeMap::new(),
        }
    }

    pub fn messages_per_op(&self) -> u64 {
        self.messages_per_op
    }

    pub fn log(&mut self, class: OpClass) {
        *self.ops.entry(class).or_default() += 1;
    }

    pub fn count(&self, class: OpClass) -> u64 {
        self.ops.get(&class).copied().unwrap_or(0)
    }

    pub fn messages(&self, class: OpClass) -> u64 {
        self.count(class) * self.messages_per_op
    }

    pub fn total_messages(&self) -> u64 {
        OpClass::ALL.iter().map(|&c| self.messages(c)).sum()
    }

    pub fn rows(&self) -> Vec<LedgerRow> {
        OpClass::ALL
            .iter()
            .map(|&op_class| LedgerRow {
                op_class,
                count: self.count(op_class),
                messages: self.messages(op_class),
            })
            .collect()
    }

    /// CSV with columns `op_class,count,messages`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Config(format!("{other:?}")),
        })?;
        for row in self.rows() {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("node {0} already reported this cycle")]
    Duplicate(usize),
    #[error("node {0} is offline")]
    Offline(usize),
    #[error("node {0} has no free storage")]
    StorageFull(usize),
}

/// Region x virtual node x slot sums with per-(region, virtual node)
/// contributor counts, reset every cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityTable {
    regions: usize,
    virtual_ids: usize,
    slots: usize,
    sums: Vec<f64>,
    counts: Vec<u32>,
    epoch: u64,
    reported: HashSet<usize>,
}

/// An averaged snapshot of the table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableSnapshot {
    pub regions: usize,
    pub virtual_ids: usize,
    pub slots: usize,
    /// `[region][vnode][slot]`, sum / count or 0 for empty cells.
    pub averages: Vec<Vec<Vec<f64>>>,
    pub counts: Vec<Vec<u32>>,
    pub epoch: u64,
}

impl TableSnapshot {
    pub fn is_empty(&self) -> bool {
        self.counts.iter().flatten().all(|&c| c == 0)
    }

    /// Contributors per region.
    pub fn populations(&self) -> Vec<usize> {
        self.counts
            .iter()
            .map(|r| r.iter().map(|&c| c as usize).sum())
            .collect()
    }

    /// Populated virtual nodes per region.
    pub fn populated_virtual_nodes(&self) -> Vec<usize> {
        self.counts
            .iter()
            .map(|r| r.iter().filter(|&&c| c > 0).count())
            .collect()
    }
}

impl UtilityTable {
    /// `virtual_ids` is the size of the virtual ID space, `2^ceil(log2 vs_size)`.
    pub fn new(regions: usize, virtual_ids: usize, slots: usize) -> Self {
        UtilityTable {
            regions,
            virtual_ids,
            slots,
            sums: vec![0.0; regions * virtual_ids * slots],
            counts: vec![0; regions * virtual_ids],
            epoch: 0,
            reported: HashSet::new(),
        }
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.regions, self.virtual_ids, self.slots)
    }

    pub fn count(&self, region: usize, vnode: usize) -> u32 {
        self.counts[region * self.virtual_ids + vnode]
    }

    pub fn sum(&self, region: usize, vnode: usize, slot: usize) -> f64 {
        self.sums[(region * self.virtual_ids + vnode) * self.slots + slot]
    }

    pub fn has_reported(&self, node: usize) -> bool {
        self.reported.contains(&node)
    }

    /// Zeroes every cell and moves to `new_epoch`, which must be the next one.
    pub fn reset_epoch(&mut self, new_epoch: u64) {
        assert_eq!(
            new_epoch,
            self.epoch + 1,
            "utility table epochs advance one at a time"
        );
        self.sums.fill(0.0);
        self.counts.fill(0);
        self.reported.clear();
        self.epoch = new_epoch;
    }

    /// Adds one node's utility vector to its (region, virtual node) cell.
    /// Rejected reports leave the table and ledger untouched.
    #[allow(clippy::too_many_arguments)]
    pub fn report_utility(
        &mut self,
        node: usize,
        region: usize,
        vnode: usize,
        uv: &UtilityVector,
        online: bool,
        has_free_storage: bool,
        ledger: &mut CostLedger,
    ) -> std::result::Result<(), ReportError> {
        if !online {
            return Err(ReportError::Offline(node));
        }
        if !has_free_storage {
            return Err(ReportError::StorageFull(node));
        }
        if self.reported.contains(&node) {
            return Err(ReportError::Duplicate(node));
        }
        assert_eq!(uv.len(), self.slots, "utility vector length mismatch");
        let cell = region * self.virtual_ids + vnode;
        for (t, v) in uv.iter().enumerate() {
            self.sums[cell * self.slots + t] += v;
        }
        self.counts[cell] += 1;
        self.reported.insert(node);
        ledger.log(OpClass::Report);
        Ok(())
    }

    pub fn read_utility_table(&self, ledger: &mut CostLedger) -> TableSnapshot {
        ledger.log(OpClass::ReadTable);
        self.snapshot()
    }

    /// Averaged view without charging the ledger.
    pub fn snapshot(&self) -> TableSnapshot {
        let mut averages = vec![vec![vec![0.0; self.slots]; self.virtual_ids]; self.regions];
        let mut counts = vec![vec![0; self.virtual_ids]; self.regions];
        for l in 0..self.regions {
            for v in 0..self.virtual_ids {
                let c = self.count(l, v);
                counts[l][v] = c;
                if c > 0 {
                    for (t, avg) in averages[l][v].iter_mut().enumerate() {
                        *avg = self.sum(l, v, t) / c as f64;
                    }
                }
            }
        }
        TableSnapshot {
            regions: self.regions,
            virtual_ids: self.virtual_ids,
            slots: self.slots,
            averages,
            counts,
            epoch: self.epoch,
        }
    }
}

/// Published replica sets, latest publication wins.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplicaRegistry {
    sets: BTreeMap<usize, Vec<usize>>,
}

impl ReplicaRegistry {
    pub fn publish_replicas(&mut self, owner: usize, set: &[usize], ledger: &mut CostLedger) {
        assert!(!set.is_empty(), "publishing an empty replica set");
        let mut list = Vec::with_capacity(set.len());
        for &node in set {
            if !list.contains(&node) {
                list.push(node);
            }
        }
        self.sets.insert(owner, list);
        ledger.log(OpClass::Publish);
    }

    pub fn lookup_replicas(&self, owner: usize, ledger: &mut CostLedger) -> Option<&[usize]> {
        ledger.log(OpClass::Lookup);
        self.sets.get(&owner).map(Vec::as_slice)
    }

    pub fn owners(&self) -> impl Iterator<Item = usize> + '_ {
        self.sets.keys().copied()
    }
}
