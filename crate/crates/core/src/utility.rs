//! Node utility vectors and the static node attributes they are built from.

use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Per-slot utility of one node over a cycle; every entry is in [0, 1].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UtilityVector(Vec<f64>);

impl UtilityVector {
    pub fn zeros(slots: usize) -> Self {
        UtilityVector(vec![0.0; slots])
    }

    /// Panics on entries outside [0, 1].
    pub fn from_values(values: Vec<f64>) -> Self {
        assert!(
            values.iter().all(|v| (0.0..=1.0).contains(v)),
            "utility entries must lie in [0, 1]"
        );
        UtilityVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Euclidean norm, used as the node's utility score.
    pub fn score(&self) -> f64 {
        utility_score(self)
    }

    pub fn dot(&self, other: &UtilityVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

impl Deref for UtilityVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// `UV_t = p_t * bw_norm / (rp_load + 1)` for every slot.
pub fn compute_utility_vector(p: &[f64], bandwidth_norm: f64, rp_load: u32) -> UtilityVector {
    debug_assert!((0.0..=1.0).contains(&bandwidth_norm));
    let denom = rp_load as f64 + 1.0;
    UtilityVector::from_values(p.iter().map(|&pt| pt * bandwidth_norm / denom).collect())
}

pub fn utility_score(uv: &UtilityVector) -> f64 {
    uv.0.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    /// Kbps.
    pub bandwidth: f64,
    pub bandwidth_norm: f64,
    pub storage_capacity: u32,
    pub rp_load: u32,
    /// Availability per slot as of the last recomputation.
    pub availability: Vec<f64>,
    pub utility_vector: UtilityVector,
}

impl NodeState {
    pub fn new(bandwidth: f64, bw_max: f64, storage_capacity: u32, slots: usize) -> Self {
        NodeState {
            bandwidth,
            bandwidth_norm: (bandwidth / bw_max).clamp(0.0, 1.0),
            storage_capacity,
            rp_load: 0,
            availability: vec![0.0; slots],
            utility_vector: UtilityVector::zeros(slots),
        }
    }

    pub fn has_free_storage(&self) -> bool {
        self.rp_load < self.storage_capacity
    }

    pub fn set_availability(&mut self, p: Vec<f64>) {
        self.availability = p;
        self.refresh();
    }

    /// Takes on one more replica duty. Panics when storage is already full.
    pub fn add_replica(&mut self) {
        assert!(self.has_free_storage(), "replica placed on a full node");
        self.rp_load += 1;
        self.refresh();
    }

    fn refresh(&mut self) {
        self.utility_vector =
            compute_utility_vector(&self.availability, self.bandwidth_norm, self.rp_load);
    }
}

/// I.i.d. exponential bandwidths in Kbps, capped at `bw_max`.
pub fn sample_bandwidths<R: Rng + ?Sized>(
    n: usize,
    mean_kbps: f64,
    bw_max: f64,
    rng: &mut R,
) -> Vec<f64> {
    assert!(mean_kbps > 0.0, "bandwidth mean must be positive");
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            (-mean_kbps * (1.0 - u).ln()).min(bw_max)
        })
        .collect()
}

/// I.i.d. storage capacities uniform over `min..=max` units.
pub fn sample_storage<R: Rng + ?Sized>(n: usize, min: u32, max: u32, rng: &mut R) -> Vec<u32> {
    assert!(n >= 1 && min <= max);
    (0..n).map(|_| rng.gen_range(min..=max)).collect()
}
