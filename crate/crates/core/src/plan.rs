use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::pyramid::RwdSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Pyramid,
    Glaras,
    Random,
    Poc,
    Cluster,
    Correlation,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Pyramid,
        Strategy::Glaras,
        Strategy::Random,
        Strategy::Poc,
        Strategy::Cluster,
        Strategy::Correlation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Pyramid => "pyramid",
            Strategy::Glaras => "glaras",
            Strategy::Random => "random",
            Strategy::Poc => "poc",
            Strategy::Cluster => "cluster",
            Strategy::Correlation => "correlation",
        }
    }

    /// Whether the strategy learns from piggybacked search traffic.
    pub fn uses_knowledge_base(self) -> bool {
        !matches!(self, Strategy::Pyramid | Strategy::Glaras)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s.trim())
            .ok_or_else(|| {
                format!(
                    "unknown strategy `{s}` (expected one of pyramid, glaras, random, poc, cluster, correlation)"
                )
            })
    }
}

/// Per-region record of a virtual-system placement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionPlan {
    pub region: usize,
    pub sub_degree: usize,
    pub weights: Vec<f64>,
    pub solution: RwdSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationPlan {
    pub owner: usize,
    pub strategy: Strategy,
    pub degree: usize,
    /// `(region, virtual node)` pairs, empty for strategies that skip the
    /// virtual system.
    pub virtual_replicas: Vec<(usize, usize)>,
    pub original_replicas: Vec<usize>,
    pub per_region: Vec<RegionPlan>,
    pub shortfall: usize,
}

impl ReplicationPlan {
    pub fn new(owner: usize, strategy: Strategy, degree: usize) -> Self {
        ReplicationPlan {
            owner,
            strategy,
            degree,
            virtual_replicas: Vec::new(),
            original_replicas: Vec::new(),
            per_region: Vec::new(),
            shortfall: 0,
        }
    }
}
