//! Multi-robot task allocation under time windows and limited
//! communication.
//!
//! Agents live at hubs and fly out to serve one task at a time. Hubs sense
//! tasks within a radius and observe each other through a directed
//! communication graph. Policies decide which idle agent goes where at every
//! step; [`engine`] simulates the consequences and [`experiment`] runs
//! sweeps over many seeded trials.

pub mod comm_graph;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod information;
pub mod metrics;
pub mod policies;
pub mod scenario;
pub mod stochastics;
pub mod world;

pub use comm_graph::{CommGraph, TopologyConfig, TopologySpec};
pub use engine::{run_trial, run_trial_traced, Simulation, StepTrace, TrialOutcome, WorldSettings, WorldState};
pub use error::{Error, Result};
pub use experiment::{run_sweep, run_topology_study, SweepAxis, SweepSpec, TopologyStudySpec};
pub use metrics::{efficiency_ratio, fraction_late, TrialRecord};
pub use policies::{AssignmentProfile, Policy, PolicyKind};
pub use scenario::{ConflictLevel, ScenarioConfig};
pub use stochastics::{EpanechnikovDist, SeededRng, TravelDist, TravelModel};
pub use world::{AgentId, HubId, Point, Step, Task, TaskId};
