//! Deterministic discrete-time simulator of a network of autonomous mobile
//! sensing agents detecting spatio-temporally varying events in a 2D region.
//!
//! Agents roam either in a random mode (exploration) or a gradient mode
//! (exploitation of their locally estimated event density), switching
//! between the two from the magnitude of a detection-objective gradient.
//! They communicate by instantaneous flooding over a Boolean-model radio
//! graph. The crate ships scenario presets for three experiments, a
//! replication runner with 95% confidence intervals, and CSV reporting.

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod agent;
pub mod comms;
pub mod config;
pub mod density;
pub mod engine;
pub mod geometry;
pub mod runner;
pub mod scenario;
pub mod seeds;
pub mod sensing;

/// Discrete simulation time; one tick is one time unit.
pub type Tick = u64;

/// Unique agent identifier, dense from zero.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Unique event identifier, assigned in occurrence order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct EventId(pub u64);

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub use agent::{AgentState, AgentView, ExecutionMode, SwitchParams};
pub use comms::{EventRecord, Message, ReportedLocation};
pub use density::{DensityEstimate, GradientVector};
pub use engine::{
    aggregate, run, run_with_options, AggregateResult, EngineError, RunOptions, RunResult,
    SimParams,
};
pub use geometry::{distance, Grid, Point, Region};
pub use scenario::{preset, preset_for, Behavior, Experiment, ScenarioSpec};
pub use sensing::SensingParams;
