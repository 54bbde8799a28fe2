//! Deterministic discrete-event simulator.

pub mod attacker;
pub mod config;
pub mod engine;
pub mod topology;
pub mod trace;

pub use config::{ConfigError, DefenseMode, ScenarioConfig, TopologySpec};
pub use engine::{run_scenario, ProbeLog, ProbePurpose, RunError, RunOutput};
