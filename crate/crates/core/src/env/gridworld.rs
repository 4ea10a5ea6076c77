//! Deterministic grid navigation simulator. State id = row * cols + col,
//! start fixed at (0,0), reward 1 on entering the goal, off-grid moves keep
//! position.

use serde::{Deserialize, Serialize};

use crate::core::Space;
use crate::env::adapter::{SimAdapter, StepFragments};
use crate::env::core::RenderInfo;
use crate::env::simulator::{Control, EnvParams, SimTrace, Simulator};
use crate::error::{Error, Result};

const MAX_GRID_SIZE: u64 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GridState {
    size: u64,
    goal: (u64, u64),
    pos: (u64, u64),
}

#[derive(Debug, Clone)]
pub struct GridWorldSim {
    state: GridState,
}

impl GridWorldSim {
    pub fn new() -> GridWorldSim {
        GridWorldSim {
            state: GridState {
                size: 4,
                goal: (3, 3),
                pos: (0, 0),
            },
        }
    }

    fn resolve(params: &EnvParams) -> Result<(u64, (u64, u64))> {
        let size = params.get("grid_size").unwrap_or(4.0);
        if size.fract() != 0.0 || !(2.0..=MAX_GRID_SIZE as f64).contains(&size) {
            return Err(Error::InvalidParams(format!(
                "grid_size {size} must be an integer in [2, {MAX_GRID_SIZE}]"
            )));
        }
        let size = size as u64;
        let goal_row = params.get("goal_row").unwrap_or((size - 1) as f64);
        let goal_col = params.get("goal_col").unwrap_or((size - 1) as f64);
        for (name, v) in [("goal_row", goal_row), ("goal_col", goal_col)] {
            if v.fract() != 0.0 || v < 0.0 || v >= size as f64 {
                return Err(Error::InvalidParams(format!(
                    "{name} {v} must be an integer in [0, {})",
                    size
                )));
            }
        }
        let goal = (goal_row as u64, goal_col as u64);
        if goal == (0, 0) {
            return Err(Error::InvalidParams("goal must differ from the start cell".into()));
        }
        Ok((size, goal))
    }
}

impl Default for GridWorldSim {
    fn default() -> Self {
        Self::new()
    }
}

impl Simulator for GridWorldSim {
    fn id(&self) -> &'static str {
        "gridworld"
    }

    fn validate_params(&self, params: &EnvParams) -> Result<()> {
        for name in params.0.keys() {
            if !matches!(name.as_str(), "grid_size" | "goal_row" | "goal_col") {
                return Err(Error::InvalidParams(format!("unknown parameter `{name}`")));
            }
        }
        Self::resolve(params).map(|_| ())
    }

    fn reset(&mut self, _seed: Option<u64>, params: &EnvParams) -> Result<SimTrace> {
        let (size, goal) = Self::resolve(params)?;
        self.state = GridState {
            size,
            goal,
            pos: (0, 0),
        };
        let mut trace = SimTrace::default();
        trace.payload.insert("row".into(), 0.0);
        trace.payload.insert("col".into(), 0.0);
        Ok(trace)
    }

    fn advance(&mut self, control: &Control) -> Result<SimTrace> {
        let Control::Move { drow, dcol } = control else {
            return Err(Error::Simulator("gridworld accepts Move controls only".into()));
        };
        let s = &mut self.state;
        let nr = s.pos.0 as i64 + drow;
        let nc = s.pos.1 as i64 + dcol;
        if nr >= 0 && nc >= 0 && (nr as u64) < s.size && (nc as u64) < s.size {
            s.pos = (nr as u64, nc as u64);
        }
        let mut trace = SimTrace::default();
        trace.payload.insert("row".into(), s.pos.0 as f64);
        trace.payload.insert("col".into(), s.pos.1 as f64);
        if s.pos == s.goal {
            trace.events.insert("goal_reached".into());
        }
        Ok(trace)
    }

    fn snapshot(&self) -> Vec<u8> {
        serde_json::to_vec(&self.state).expect("grid state serializes")
    }

    fn restore(&mut self, bytes: &[u8]) -> Result<()> {
        self.state = serde_json::from_slice(bytes)
            .map_err(|e| Error::Simulator(format!("bad gridworld snapshot: {e}")))?;
        Ok(())
    }

    fn spaces(&self) -> (Space, Space) {
        let n = self.state.size * self.state.size;
        (
            Space::discrete(n).expect("size >= 2"),
            Space::discrete(4).expect("nonzero"),
        )
    }

    fn render_info(&self) -> RenderInfo {
        RenderInfo::Grid {
            rows: self.state.size,
            cols: self.state.size,
            agents: vec![self.state.pos],
            goals: vec![self.state.goal],
        }
    }
}

/// Actions 0=up, 1=right, 2=down, 3=left; one micro-step per action.
#[derive(Debug, Clone, Default)]
pub struct GridWorldAdapter {
    cols: u64,
}

impl GridWorldAdapter {
    pub fn new(cols: u64) -> GridWorldAdapter {
        GridWorldAdapter { cols }
    }
}

impl SimAdapter for GridWorldAdapter {
    fn control_for(&self, actions: &[u64]) -> Result<Control> {
        let (drow, dcol) = match actions[0] {
            0 => (-1, 0),
            1 => (0, 1),
            2 => (1, 0),
            3 => (0, -1),
            a => {
                return Err(Error::InvalidAction { action: a, size: 4 });
            }
        };
        Ok(Control::Move { drow, dcol })
    }

    fn extract(&self, trace: &SimTrace, _actions: &[u64]) -> StepFragments {
        let obs = trace.field("row") as u64 * self.cols + trace.field("col") as u64;
        let goal = trace.has_event("goal_reached");
        StepFragments {
            obs: vec![obs],
            rewards: vec![if goal { 1.0 } else { 0.0 }],
            terminated: goal,
        }
    }
}
