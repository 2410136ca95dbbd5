//! Scenario configuration, loaded from TOML. Every field has a default so a
//! config file only needs to list what it changes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::churn::ChurnParams;
use crate::error::{Error, Result};
use crate::overlay::TopologyParams;
use crate::plan::Strategy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandwidthParams {
    pub mean_kbps: f64,
    /// `bw_max` as a multiple of the mean; samples above it are capped.
    pub max_factor: f64,
}

impl Default for BandwidthParams {
    fn default() -> Self {
        BandwidthParams {
            mean_kbps: 2000.0,
            max_factor: 10.0,
        }
    }
}

impl BandwidthParams {
    pub fn bw_max(&self) -> f64 {
        self.mean_kbps * self.max_factor
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StorageParams {
    pub min: u32,
    pub max: u32,
}

impl Default for StorageParams {
    fn default() -> Self {
        StorageParams { min: 1, max: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PiggybackParams {
    /// Budget is `factor * n_o * ceil(log2 n_o)` searches per slot.
    pub factor: usize,
    /// Fixed budget that overrides `factor` when set.
    pub searches_per_slot: Option<usize>,
}

impl Default for PiggybackParams {
    fn default() -> Self {
        PiggybackParams {
            factor: 4,
            searches_per_slot: None,
        }
    }
}

impl PiggybackParams {
    pub fn budget(&self, online: usize) -> usize {
        match self.searches_per_slot {
            Some(s) => s,
            None => self.factor * online * crate::baselines::path_length(online),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    pub num_landmarks: usize,
    /// Name ID length; `ceil(log2 n)` when unset.
    pub name_id_bits: Option<u32>,
    pub rtt_scale_ms: f64,
    /// Virtual system size; `round(1.33 * log2 n)` when unset.
    pub vs_size: Option<usize>,
    pub alpha: usize,
    pub fpti_slots: usize,
    pub ts_hours: f64,
    pub horizon_hours: usize,
    pub learning_hours: usize,
    pub num_owners: usize,
    pub replication_degrees: Vec<usize>,
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
    pub output_dir: Option<PathBuf>,
    /// Run every strategy on one world instead of a private clone each.
    pub shared_world: bool,
    pub exclude_owner: bool,
    /// Messages per operation are `ceil(cost_c * log2 n)`.
    pub cost_c: f64,
    pub churn: ChurnParams,
    pub bandwidth: BandwidthParams,
    pub storage: StorageParams,
    pub piggyback: PiggybackParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig::desk()
    }
}

impl ScenarioConfig {
    /// 512 nodes over one month.
    pub fn desk() -> Self {
        ScenarioConfig {
            n: 512,
            num_landmarks: 8,
            name_id_bits: None,
            rtt_scale_ms: 100.0,
            vs_size: None,
            alpha: 3,
            fpti_slots: 24,
            ts_hours: 1.0,
            horizon_hours: 720,
            learning_hours: 168,
            num_owners: 10,
            replication_degrees: (1..=7).map(|k| 2 * k).collect(),
            strategies: Strategy::ALL.to_vec(),
            seeds: vec![1],
            output_dir: None,
            shared_world: false,
            exclude_owner: false,
            cost_c: 1.0,
            churn: ChurnParams::default(),
            bandwidth: BandwidthParams::default(),
            storage: StorageParams::default(),
            piggyback: PiggybackParams::default(),
        }
    }

    /// 4096 nodes over three months on five topologies.
    pub fn full() -> Self {
        ScenarioConfig {
            n: 4096,
            horizon_hours: 2160,
            seeds: (1..=5).collect(),
            ..ScenarioConfig::desk()
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn effective_vs_size(&self) -> usize {
        self.vs_size
            .unwrap_or_else(|| ((1.33 * (self.n as f64).log2()).round() as usize).max(1))
    }

    pub fn effective_name_id_bits(&self) -> u32 {
        self.name_id_bits
            .unwrap_or_else(|| (self.n as f64).log2().ceil().max(1.0) as u32)
    }

    pub fn topology_params(&self) -> TopologyParams {
        TopologyParams {
            n: self.n,
            num_landmarks: self.num_landmarks,
            name_id_bits: self.effective_name_id_bits(),
            rtt_scale: self.rtt_scale_ms,
        }
    }

    pub fn horizon_slots(&self) -> usize {
        (self.horizon_hours as f64 / self.ts_hours).round() as usize
    }

    pub fn learning_slots(&self) -> usize {
        (self.learning_hours as f64 / self.ts_hours).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n < 2 {
            return fail(format!("n must be at least 2, got {}", self.n));
        }
        if self.num_landmarks == 0 {
            return fail("num_landmarks must be at least 1".into());
        }
        if self.effective_vs_size() == 0 {
            return fail("vs_size must be at least 1".into());
        }
        let bits = self.effective_name_id_bits();
        if crate::overlay::virtual_id_bits(self.effective_vs_size()) > bits {
            return fail(format!(
                "vs_size {} needs more prefix bits than the {bits}-bit name IDs have",
                self.effective_vs_size()
            ));
        }
        if self.alpha == 0 {
            return fail("alpha must be at least 1".into());
        }
        if self.fpti_slots == 0 || !(self.ts_hours > 0.0) {
            return fail("fpti_slots and ts_hours must be positive".into());
        }
        let slot_multiple = |h: usize| (h as f64 / self.ts_hours).fract() == 0.0;
        if !slot_multiple(self.horizon_hours) || !slot_multiple(self.learning_hours) {
            return fail("horizon_hours and learning_hours must be whole numbers of slots".into());
        }
        if self.learning_hours == 0 || self.learning_hours >= self.horizon_hours {
            return fail(format!(
                "need 0 < learning_hours ({}) < horizon_hours ({})",
                self.learning_hours, self.horizon_hours
            ));
        }
        if self.num_owners == 0 || self.num_owners > self.n {
            return fail(format!("num_owners must be in 1..={}", self.n));
        }
        if self.replication_degrees.is_empty() || self.replication_degrees.contains(&0) {
            return fail(
                "replication_degrees must be a non-empty list of positive integers".into(),
            );
        }
        if self.strategies.is_empty() {
            return fail("at least one strategy is required".into());
        }
        if self.seeds.is_empty() {
            return fail("at least one seed is required".into());
        }
        if !(self.rtt_scale_ms > 0.0) || !(self.cost_c > 0.0) {
            return fail("rtt_scale_ms and cost_c must be positive".into());
        }
        if !(self.bandwidth.mean_kbps > 0.0) || !(self.bandwidth.max_factor >= 1.0) {
            return fail("bandwidth mean must be positive and max_factor at least 1".into());
        }
        if self.storage.min == 0 || self.storage.min > self.storage.max {
            return fail("storage range must satisfy 1 <= min <= max".into());
        }
        self.churn.validate()
    }
}
