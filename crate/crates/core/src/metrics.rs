//! Utility-awareness (bandwidth per requester) and locality-awareness (delay
//! to the closest online replica), per owner and slot, plus their aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::overlay::Topology;
use crate::plan::Strategy;

/// Online replica with the smallest RTT to `requester`, ties to the lowest id.
pub fn closest_online_replica(
    requester: usize,
    replicas: &[usize],
    topology: &Topology,
    online: &[bool],
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &rep in replicas {
        if !online[rep] {
            continue;
        }
        let d = topology.rtt(requester, rep);
        let take = match best {
            None => true,
            Some((b, bd)) => d < bd || (d == bd && rep < b),
        };
        if take {
            best = Some((rep, d));
        }
    }
    best.map(|(r, _)| r)
}

/// One owner's measurements in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct OwnerMetrics {
    /// Mean bandwidth share in Kbps over mapped requesters.
    pub avg_bw_kbps: Option<f64>,
    /// Mean RTT in ms over mapped requesters.
    pub avg_delay_ms: Option<f64>,
    pub unavailable: usize,
    pub online_replicas: usize,
    /// Requesters mapped to each replica, parallel to the replica list.
    pub corresponding: Vec<usize>,
}

impl OwnerMetrics {
    pub fn mapped(&self) -> usize {
        self.corresponding.iter().sum()
    }
}

/// Maps every online node to its closest online replica and measures the
/// owner's two metrics. `bandwidth[i]` is node `i`'s bandwidth in Kbps.
pub fn evaluate_owner(
    replicas: &[usize],
    topology: &Topology,
    bandwidth: &[f64],
    online: &[bool],
) -> OwnerMetrics {
    let mut corresponding = vec![0usize; replicas.len()];
    let mut mapping: Vec<(usize, usize)> = Vec::new();
    let mut unavailable = 0;
    for requester in (0..online.len()).filter(|&i| online[i]) {
        match closest_online_replica(requester, replicas, topology, online) {
            Some(rep) => {
                let k = replicas.iter().position(|&x| x == rep).unwrap();
                corresponding[k] += 1;
                mapping.push((requester, k));
            }
            None => unavailable += 1,
        }
    }
    let (avg_bw_kbps, avg_delay_ms) = if mapping.is_empty() {
        (None, None)
    } else {
        let m = mapping.len() as f64;
        let bw: f64 = mapping
            .iter()
            .map(|&(_, k)| bandwidth[replicas[k]] / corresponding[k] as f64)
            .sum();
        let delay: f64 = mapping
            .iter()
            .map(|&(req, k)| topology.rtt(req, replicas[k]))
            .sum();
        (Some(bw / m), Some(delay / m))
    };
    OwnerMetrics {
        avg_bw_kbps,
        avg_delay_ms,
        unavailable,
        online_replicas: replicas.iter().filter(|&&r| online[r]).count(),
        corresponding,
    }
}

pub fn utility_awareness(
    replicas: &[usize],
    topology: &Topology,
    bandwidth: &[f64],
    online: &[bool],
) -> Option<f64> {
    evaluate_owner(replicas, topology, bandwidth, online).avg_bw_kbps
}

pub fn locality_awareness(
    replicas: &[usize],
    topology: &Topology,
    bandwidth: &[f64],
    online: &[bool],
) -> Option<f64> {
    evaluate_owner(replicas, topology, bandwidth, online).avg_delay_ms
}

/// One row of the per-slot output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub topology_seed: u64,
    pub strategy: Strategy,
    pub r: usize,
    pub slot: usize,
    pub owner: usize,
    pub avg_bw_kbps: Option<f64>,
    pub avg_delay_ms: Option<f64>,
    pub unavailable: usize,
    pub online_replicas: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    BandwidthKbps,
    DelayMs,
    Unavailable,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::BandwidthKbps, Metric::DelayMs, Metric::Unavailable];

    fn value(self, rec: &SlotRecord) -> Option<f64> {
        match self {
            Metric::BandwidthKbps => rec.avg_bw_kbps,
            Metric::DelayMs => rec.avg_delay_ms,
            Metric::Unavailable => Some(rec.unavailable as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub strategy: Strategy,
    pub r: usize,
    pub metric: Metric,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single sample.
    pub stddev: f64,
    pub n_samples: usize,
}

/// Mean and sample standard deviation of each metric per (strategy, degree),
/// over owners, slots and topologies. Records are put in canonical order
/// first, so the result does not depend on the input order.
pub fn aggregate_report(records: &[SlotRecord]) -> Vec<SummaryRow> {
    let mut sorted: Vec<&SlotRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.strategy, r.r, r.topology_seed, r.slot, r.owner));
    let mut groups: BTreeMap<(Strategy, usize), Vec<&SlotRecord>> = BTreeMap::new();
    for rec in sorted {
        groups.entry((rec.strategy, rec.r)).or_default().push(rec);
    }
    let mut rows = Vec::new();
    for ((strategy, r), recs) in groups {
        for metric in Metric::ALL {
            let values: Vec<f64> = recs.iter().filter_map(|rec| metric.value(rec)).collect();
            let (mean, stddev) = mean_stddev(&values);
            rows.push(SummaryRow {
                strategy,
                r,
                metric,
                mean,
                stddev,
                n_samples: values.len(),
            });
        }
    }
    rows
}

pub fn mean_stddev(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
