//! Two-agent coordination matrix game: one step per episode, team reward 1
//! when the actions match, delivered identically to both agents.

use crate::core::Space;
use crate::env::adapter::{SimAdapter, StepFragments};
use crate::env::core::RenderInfo;
use crate::env::simulator::{Control, EnvParams, SimTrace, Simulator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct MatrixGameSim;

impl Simulator for MatrixGameSim {
    fn id(&self) -> &'static str {
        "matrix_game"
    }

    fn validate_params(&self, params: &EnvParams) -> Result<()> {
        if let Some(name) = params.0.keys().next() {
            return Err(Error::InvalidParams(format!("unknown parameter `{name}`")));
        }
        Ok(())
    }

    fn reset(&mut self, _seed: Option<u64>, params: &EnvParams) -> Result<SimTrace> {
        self.validate_params(params)?;
        Ok(SimTrace::default())
    }

    fn advance(&mut self, control: &Control) -> Result<SimTrace> {
        let Control::Joint { actions } = control else {
            return Err(Error::Simulator("matrix game accepts Joint controls only".into()));
        };
        if actions.len() != 2 {
            return Err(Error::Simulator(format!(
                "matrix game needs 2 actions, got {}",
                actions.len()
            )));
        }
        let matched = actions[0] == actions[1];
        let mut trace = SimTrace::default();
        trace.payload.insert("a0".into(), actions[0] as f64);
        trace.payload.insert("a1".into(), actions[1] as f64);
        trace
            .payload
            .insert("payoff".into(), if matched { 1.0 } else { 0.0 });
        if matched {
            trace.events.insert("match".into());
        }
        Ok(trace)
    }

    fn snapshot(&self) -> Vec<u8> {
        Vec::new()
    }

    fn restore(&mut self, _bytes: &[u8]) -> Result<()> {
        Ok(())
    }

    fn spaces(&self) -> (Space, Space) {
        (
            Space::discrete(1).expect("nonzero"),
            Space::discrete(2).expect("nonzero"),
        )
    }

    fn num_agents(&self) -> usize {
        2
    }

    fn render_info(&self) -> RenderInfo {
        RenderInfo::Stateless { agents: 2 }
    }
}

/// Joint action passes straight through; both agents observe state 0 and
/// receive the team payoff; the episode ends after one step.
#[derive(Debug, Clone, Default)]
pub struct MatrixGameAdapter;

impl SimAdapter for MatrixGameAdapter {
    fn control_for(&self, actions: &[u64]) -> Result<Control> {
        Ok(Control::Joint {
            actions: actions.to_vec(),
        })
    }

    fn extract(&self, trace: &SimTrace, _actions: &[u64]) -> StepFragments {
        let payoff = trace.field("payoff");
        StepFragments {
            obs: vec![0, 0],
            rewards: vec![payoff, payoff],
            terminated: true,
        }
    }
}
