//! Deterministic simulator and replica-placement engine for heterogeneous
//! Skip Graph storage.
//!
//! The [`pyramid`] module places replicas by solving an exact assignment
//! problem over a squeezed virtual system of name-ID prefixes. [`baselines`]
//! holds the comparison strategies, [`metrics`] the bandwidth and delay
//! measurements, and [`harness`] drives whole scenarios.

pub mod aggregation;
pub mod baselines;
pub mod churn;
pub mod config;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod output;
pub mod overlay;
pub mod plan;
pub mod pyramid;
pub mod rng;
pub mod utility;
pub mod world;

pub use aggregation::{CostLedger, OpClass, ReplicaRegistry, TableSnapshot, UtilityTable};
pub use baselines::{Knowledge, KnowledgeBase};
pub use churn::{ChurnModel, ChurnParams, ChurnTrace, WeibullParams};
pub use config::ScenarioConfig;
pub use error::{Error, PlanError, Result};
pub use harness::{run_scenario, sweep, PlanRecord, ScenarioRun, Simulation};
pub use metrics::{aggregate_report, Metric, OwnerMetrics, SlotRecord, SummaryRow};
pub use overlay::{NameId, Topology, TopologyParams};
pub use plan::{ReplicationPlan, Strategy};
pub use pyramid::{brute_force_rwd, solve_rwd, PlacementConfig, RwdInstance, RwdSolution};
pub use utility::{NodeState, UtilityVector};
pub use world::World;
