//! Environment core: validates actions, drives the simulator through its
//! adapter, extracts observations and rewards, and enforces episode
//! boundaries and the step limit.

use serde::{Deserialize, Serialize};

use crate::core::Space;
use crate::env::adapter::{sim_step_via_adapter, SimAdapter};
use crate::env::bandit::{BanditAdapter, BanditSim};
use crate::env::gridworld::{GridWorldAdapter, GridWorldSim};
use crate::env::matrix_game::{MatrixGameAdapter, MatrixGameSim};
use crate::env::simulator::{EnvParams, Simulator};
use crate::error::{Error, Result};

/// Simulator-independent scene description for the renderer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RenderInfo {
    Grid {
        rows: u64,
        cols: u64,
        agents: Vec<(u64, u64)>,
        goals: Vec<(u64, u64)>,
    },
    Arms {
        count: u64,
    },
    Stateless {
        agents: u64,
    },
}

/// Output of one environment step, one entry per agent for obs and reward.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub obs: Vec<u64>,
    pub rewards: Vec<f64>,
    pub terminated: bool,
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Status {
    NotInitialized,
    Active,
    Finished,
}

/// Hex-encoded byte fields in serialized form.
mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(de)?;
        hex::decode(&s).map_err(serde::de::Error::custom)
    }
}

/// Serializable mid-episode environment state for checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSnapshot {
    #[serde(with = "hex_bytes")]
    pub sim: Vec<u8>,
    status: Status,
    step_count: u64,
    current_obs: Vec<u64>,
    params: EnvParams,
}

pub struct EnvCore {
    pub env_id: String,
    sim: Box<dyn Simulator>,
    adapter: Box<dyn SimAdapter>,
    pub observation_space: Space,
    pub action_space: Space,
    pub agent_ids: Vec<String>,
    pub max_episode_steps: u64,
    params: EnvParams,
    step_count: u64,
    status: Status,
    current_obs: Vec<u64>,
}

/// Builds a registered environment. Known ids: `gridworld4` (alias
/// `gridworld`), `bandit`, `matrix_game`.
pub fn make_env(env_id: &str, params: &EnvParams, max_episode_steps: u64) -> Result<EnvCore> {
    let (sim, adapter): (Box<dyn Simulator>, Box<dyn SimAdapter>) = match env_id {
        "gridworld4" | "gridworld" => {
            let size = params.get("grid_size").unwrap_or(4.0) as u64;
            (
                Box::new(GridWorldSim::new()),
                Box::new(GridWorldAdapter::new(size)),
            )
        }
        "bandit" => (Box::new(BanditSim::new()), Box::new(BanditAdapter)),
        "matrix_game" => (Box::new(MatrixGameSim), Box::new(MatrixGameAdapter)),
        other => {
            return Err(Error::ConfigInvalid {
                path: "env".into(),
                message: format!("unknown environment `{other}`"),
            })
        }
    };
    sim.validate_params(params)?;
    let agent_ids = (0..sim.num_agents())
        .map(|i| format!("agent_{i}"))
        .collect();
    let mut env = EnvCore {
        env_id: env_id.to_string(),
        observation_space: Space::discrete(1)?,
        action_space: Space::discrete(1)?,
        sim,
        adapter,
        agent_ids,
        max_episode_steps,
        params: params.clone(),
        step_count: 0,
        status: Status::NotInitialized,
        current_obs: Vec::new(),
    };
    let (obs_space, act_space) = env.sim.spaces();
    env.observation_space = obs_space;
    env.action_space = act_space;
    Ok(env)
}

impl EnvCore {
    /// Starts a new episode. A seed reseeds the simulator stream; new params
    /// replace the stored ones after validation against the simulator's
    /// schema. Returns the initial observation per agent.
    pub fn reset(&mut self, seed: Option<u64>, params: Option<EnvParams>) -> Result<Vec<u64>> {
        if let Some(p) = params {
            self.sim.validate_params(&p)?;
            // The adapter's observation mapping can depend on params.
            if matches!(self.env_id.as_str(), "gridworld" | "gridworld4") {
                let size = p.get("grid_size").unwrap_or(4.0) as u64;
                self.adapter = Box::new(GridWorldAdapter::new(size));
            }
            self.params = p;
        }
        let trace = self.sim.reset(seed, &self.params)?;
        let (obs_space, act_space) = self.sim.spaces();
        self.observation_space = obs_space;
        self.action_space = act_space;
        let fragments = self.adapter.extract(&trace, &[]);
        self.current_obs = fragments.obs;
        self.step_count = 0;
        self.status = Status::Active;
        Ok(self.current_obs.clone())
    }

    /// Action Manager -> Simulator Adapter -> Observation Manager -> Reward
    /// Manager pipeline for one joint action.
    pub fn step(&mut self, actions: &[u64]) -> Result<StepResult> {
        match self.status {
            Status::NotInitialized => return Err(Error::NotInitialized),
            Status::Finished => return Err(Error::EpisodeFinished),
            Status::Active => {}
        }
        if actions.len() != self.agent_ids.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} actions, got {}",
                self.agent_ids.len(),
                actions.len()
            )));
        }
        for &a in actions {
            if !self.action_space.contains(a) {
                return Err(Error::InvalidAction {
                    action: a,
                    size: self.action_space.size,
                });
            }
        }
        let (_trace, fragments) =
            sim_step_via_adapter(self.adapter.as_ref(), self.sim.as_mut(), actions)?;
        self.step_count += 1;
        let truncated = self.step_count >= self.max_episode_steps;
        let terminated = fragments.terminated;
        if terminated || truncated {
            self.status = Status::Finished;
        }
        self.current_obs = fragments.obs.clone();
        Ok(StepResult {
            obs: fragments.obs,
            rewards: fragments.rewards,
            terminated,
            truncated,
        })
    }

    /// Current scene description; does not advance the simulator.
    pub fn render_info(&self) -> Result<RenderInfo> {
        if self.status == Status::NotInitialized {
            return Err(Error::NotInitialized);
        }
        Ok(self.sim.render_info())
    }

    pub fn current_obs(&self) -> Result<&[u64]> {
        if self.status == Status::NotInitialized {
            return Err(Error::NotInitialized);
        }
        Ok(&self.current_obs)
    }

    pub fn episode_finished(&self) -> bool {
        self.status == Status::Finished
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn params(&self) -> &EnvParams {
        &self.params
    }

    pub fn snapshot(&self) -> EnvSnapshot {
        EnvSnapshot {
            sim: self.sim.snapshot(),
            status: self.status,
            step_count: self.step_count,
            current_obs: self.current_obs.clone(),
            params: self.params.clone(),
        }
    }

    pub fn restore(&mut self, snap: &EnvSnapshot) -> Result<()> {
        self.sim.restore(&snap.sim)?;
        self.status = snap.status;
        self.step_count = snap.step_count;
        self.current_obs = snap.current_obs.clone();
        self.params = snap.params.clone();
        if matches!(self.env_id.as_str(), "gridworld" | "gridworld4") {
            let size = self.params.get("grid_size").unwrap_or(4.0) as u64;
            self.adapter = Box::new(GridWorldAdapter::new(size));
        }
        let (obs_space, act_space) = self.sim.spaces();
        self.observation_space = obs_space;
        self.action_space = act_space;
        Ok(())
    }
}
