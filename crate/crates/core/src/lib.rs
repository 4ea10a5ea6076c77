//! Desk-scale reinforcement-learning framework with explicit components:
//! simulators behind adapters, tabular agents with rollout and replay
//! buffers, an orchestrated training lifecycle, experiment tooling,
//! deterministic checkpointing, and monitoring utilities.

pub mod agent;
mod canon;
pub mod cli;
pub mod core;
pub mod env;
pub mod error;
pub mod experiment;
pub mod monitoring;
pub mod orchestrator;
pub mod persistence;
pub mod rng;

pub use error::{Error, Result};
