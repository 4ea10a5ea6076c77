//! Simulator interface: the probabilistic mechanism behind an environment,
//! reachable only through the adapter.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::core::Space;
use crate::env::core::RenderInfo;
use crate::error::Result;

/// Named environment parameters consumed at reset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnvParams(pub BTreeMap<String, f64>);

impl EnvParams {
    pub fn new() -> EnvParams {
        EnvParams::default()
    }

    pub fn set(mut self, name: &str, value: f64) -> EnvParams {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

/// Low-level control command an adapter translates an agent action into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Control {
    /// Relative move on a grid.
    Move { drow: i64, dcol: i64 },
    /// Pull one bandit arm.
    Pull { arm: u64 },
    /// Joint action of all agents.
    Joint { actions: Vec<u64> },
}

/// Raw output of one simulator advance: a numeric payload plus event flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTrace {
    pub payload: BTreeMap<String, f64>,
    pub events: BTreeSet<String>,
}

impl SimTrace {
    pub fn field(&self, name: &str) -> f64 {
        *self.payload.get(name).unwrap_or(&0.0)
    }

    pub fn has_event(&self, name: &str) -> bool {
        self.events.contains(name)
    }
}

/// A pluggable simulator. State lives inside the simulator; `snapshot` /
/// `restore` capture it byte-exactly, including any RNG stream, so a
/// restored simulator advances identically under the same controls.
pub trait Simulator: Send {
    fn id(&self) -> &'static str;

    /// Validates a parameter map against this simulator's declared schema.
    /// Unknown names and out-of-range values are rejected.
    fn validate_params(&self, params: &EnvParams) -> Result<()>;

    /// Reinitializes the simulator. A seed, when given, reseeds the internal
    /// RNG stream; otherwise the stream continues. Returns the initial trace.
    fn reset(&mut self, seed: Option<u64>, params: &EnvParams) -> Result<SimTrace>;

    fn advance(&mut self, control: &Control) -> Result<SimTrace>;

    fn snapshot(&self) -> Vec<u8>;

    fn restore(&mut self, bytes: &[u8]) -> Result<()>;

    /// (observation space, action space) under the current parameters.
    fn spaces(&self) -> (Space, Space);

    fn num_agents(&self) -> usize {
        1
    }

    fn render_info(&self) -> RenderInfo;
}
