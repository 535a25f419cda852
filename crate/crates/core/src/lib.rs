//! Hotspot detection and VM migration planning for virtualized clusters.
//!
//! Physical nodes are ranked with crisp or fuzzy TOPSIS over mixed crisp, linguistic and fuzzy
//! telemetry. When a node crosses the administrator threshold, a second ranking over its VMs
//! picks the migration victim, and destinations are tried from the least loaded node upward.
//! A volume-based baseline planner and a deterministic discrete-time simulator are included for
//! comparison runs.
//!
//! The ranking math in [`fuzzy`] and [`topsis`] is generic over [`Scalar`] (`f32` or `f64`);
//! the cluster model, controller and simulator work in `f64`.

pub mod cluster;
pub mod controller;
pub mod fuzzy;
pub mod scalar;
pub mod simulator;
pub mod topsis;

pub use scalar::Scalar;

pub use cluster::{ClusterSnapshot, NodeSnapshot, VmSnapshot};
pub use controller::{ControllerConfig, MigrationDecision, Pipeline, PlanOutcome};
pub use fuzzy::{LinguisticRank, TriangularFuzzyNumber};
pub use topsis::{Cell, Criterion, DataKind, DecisionMatrix, Direction};

pub type Tfn = TriangularFuzzyNumber<f64>;
pub type Tfn32 = TriangularFuzzyNumber<f32>;
pub type Matrix = DecisionMatrix<f64>;
pub type Matrix32 = DecisionMatrix<f32>;
pub type Ranking = topsis::RankingResult<f64>;
pub type Ranking32 = topsis::RankingResult<f32>;
