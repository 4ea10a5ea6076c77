//! Simulator adapter: translates agent actions into simulator controls and
//! simulation traces back into observation/reward/termination fragments.

use crate::env::simulator::{Control, SimTrace, Simulator};
use crate::error::Result;

/// Observation, reward, and termination extracted from one trace.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFragments {
    pub obs: Vec<u64>,
    pub rewards: Vec<f64>,
    pub terminated: bool,
}

pub trait SimAdapter: Send {
    /// Maps one joint agent action to a simulator control.
    fn control_for(&self, actions: &[u64]) -> Result<Control>;

    /// Number of simulator micro-steps per agent action. Fixed per adapter;
    /// 1 for all built-ins.
    fn micro_steps(&self) -> u32 {
        1
    }

    /// Extracts observations and rewards from a trace. The action is passed
    /// through in case a simulator's reward depends on it; the built-ins
    /// compute reward from the trace alone.
    fn extract(&self, trace: &SimTrace, actions: &[u64]) -> StepFragments;
}

/// Advances the simulator through the adapter: one agent action maps to
/// `micro_steps()` simulator advances; fragments come from the final trace.
pub fn sim_step_via_adapter(
    adapter: &dyn SimAdapter,
    sim: &mut dyn Simulator,
    actions: &[u64],
) -> Result<(SimTrace, StepFragments)> {
    let control = adapter.control_for(actions)?;
    let mut trace = SimTrace::default();
    for _ in 0..adapter.micro_steps() {
        trace = sim
            .advance(&control)
            .map_err(|e| e.with_context(format!("simulator {} advance", sim.id())))?;
    }
    let fragments = adapter.extract(&trace, actions);
    Ok((trace, fragments))
}
