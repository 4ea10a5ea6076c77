//! Per-environment-instance experience collection.
//!
//! Each instance owns its environment and a dedicated action-selection RNG
//! stream derived from the experiment seed and the instance index, so the
//! merged event stream is identical regardless of how instances are placed
//! onto workers.

use std::collections::BTreeMap;

use crate::agent::{select_action, SelectMode, TabularParams};
use crate::core::{Hyperparameters, Transition};
use crate::env::{make_env, EnvCore, EnvParams};
use crate::error::{Error, Result};
use crate::orchestrator::config::{ExperimentConfig, LifecycleStrategy};
use crate::orchestrator::coordinator::{assemble_joint_action, split_experience};
use crate::persistence::InstanceState;
use crate::rng::{derive_stream, SplitMix64, TAG_ACTION, TAG_ENV};

/// Frozen copy of the acting parameters, keyed by agent id, broadcast to
/// every instance for one collection round.
#[derive(Debug, Clone)]
pub struct ActorSnapshot {
    pub actors: BTreeMap<String, TabularParams>,
}

/// Emitted when a step finishes an episode.
#[derive(Debug, Clone)]
pub struct EpisodeEnd {
    pub discounted_return: f64,
    pub undiscounted_return: f64,
    pub length: u64,
    /// Complete per-agent rollouts of the finished episode.
    pub rollouts: BTreeMap<String, Vec<Transition>>,
}

/// One collected environment step, in merge order.
#[derive(Debug, Clone)]
pub struct StepEvent {
    pub instance: usize,
    /// Zero-based global index of this step.
    pub global_step: u64,
    pub transitions: BTreeMap<String, Transition>,
    pub epsilon: f64,
    pub episode_end: Option<EpisodeEnd>,
}

/// Shared inputs of one collection round.
pub struct RoundCtx<'a> {
    pub snapshot: &'a ActorSnapshot,
    pub strategy: LifecycleStrategy,
    /// Steps each instance takes this round.
    pub steps: u64,
    /// Global step index at the start of the round.
    pub round_start: u64,
    pub hp: &'a Hyperparameters,
    /// Environment params for episode resets during this round.
    pub reset_params: &'a EnvParams,
}

pub struct InstanceCollector {
    pub instance: usize,
    env: EnvCore,
    action_rng: SplitMix64,
    gamma: f64,
    agent_ids: Vec<String>,
    episode_return: f64,
    episode_undiscounted: f64,
    episode_length: u64,
    discount: f64,
    rollouts: BTreeMap<String, Vec<Transition>>,
}

impl InstanceCollector {
    pub fn new(
        config: &ExperimentConfig,
        instance: usize,
        initial_params: &EnvParams,
    ) -> Result<InstanceCollector> {
        let mut env = make_env(&config.env_id, initial_params, config.max_episode_steps)?;
        env.reset(
            Some(derive_stream(config.seed, TAG_ENV, instance as u64)),
            None,
        )?;
        let agent_ids = env.agent_ids.clone();
        let rollouts = agent_ids_map(&agent_ids);
        Ok(InstanceCollector {
            instance,
            env,
            action_rng: SplitMix64::new(derive_stream(
                config.seed,
                TAG_ACTION,
                instance as u64,
            )),
            gamma: config.hp.gamma,
            agent_ids,
            episode_return: 0.0,
            episode_undiscounted: 0.0,
            episode_length: 0,
            discount: 1.0,
            rollouts,
        })
    }

    /// Runs one collection round under the configured lifecycle strategy.
    /// Both strategies produce the same logical event sequence.
    pub fn run_round(&mut self, ctx: &RoundCtx) -> Result<Vec<StepEvent>> {
        match ctx.strategy {
            LifecycleStrategy::Mediated => {
                // The coordinator drives: it asks for an action and applies
                // it, one step at a time.
                let mut events = Vec::with_capacity(ctx.steps as usize);
                let base = ctx.round_start + self.instance as u64 * ctx.steps;
                for j in 0..ctx.steps {
                    let global_step = base + j;
                    let epsilon = ctx.hp.epsilon_at(global_step);
                    events.push(self.step_once(
                        ctx.snapshot,
                        epsilon,
                        global_step,
                        ctx.reset_params,
                    )?);
                }
                Ok(events)
            }
            LifecycleStrategy::Delegated => {
                // The agent driver receives the environment handle and a
                // step budget and interacts on its own.
                let driver = DelegatedDriver {
                    snapshot: ctx.snapshot,
                };
                driver.interact(self, ctx)
            }
        }
    }

    fn step_once(
        &mut self,
        snapshot: &ActorSnapshot,
        epsilon: f64,
        global_step: u64,
        reset_params: &EnvParams,
    ) -> Result<StepEvent> {
        let obs = self.env.current_obs()?.to_vec();
        let mut per_agent = BTreeMap::new();
        for (i, agent) in self.agent_ids.iter().enumerate() {
            let params = snapshot
                .actors
                .get(agent)
                .ok_or_else(|| Error::MissingAgent(agent.clone()))?;
            let action = select_action(
                params,
                obs[i],
                &mut self.action_rng,
                SelectMode::Explore,
                epsilon,
            )?;
            per_agent.insert(agent.clone(), action);
        }
        let joint = assemble_joint_action(&self.agent_ids, &per_agent)?;
        let result = self.env.step(&joint)?;
        let transitions = split_experience(&self.agent_ids, &obs, &joint, &result);

        self.episode_return += self.discount * result.rewards[0];
        self.episode_undiscounted += result.rewards[0];
        self.discount *= self.gamma;
        self.episode_length += 1;
        for (agent, t) in &transitions {
            self.rollouts
                .get_mut(agent)
                .expect("rollout key per agent")
                .push(t.clone());
        }

        let episode_end = if result.terminated || result.truncated {
            let end = EpisodeEnd {
                discounted_return: self.episode_return,
                undiscounted_return: self.episode_undiscounted,
                length: self.episode_length,
                rollouts: std::mem::replace(
                    &mut self.rollouts,
                    agent_ids_map(&self.agent_ids),
                ),
            };
            self.episode_return = 0.0;
            self.episode_undiscounted = 0.0;
            self.episode_length = 0;
            self.discount = 1.0;
            // Autoreset: the simulator stream continues; params may have
            // moved to a new curriculum stage.
            self.env.reset(None, Some(reset_params.clone()))?;
            Some(end)
        } else {
            None
        };

        Ok(StepEvent {
            instance: self.instance,
            global_step,
            transitions,
            epsilon,
            episode_end,
        })
    }

    /// Serializable mid-run state for checkpoints.
    pub fn to_state(&self) -> InstanceState {
        InstanceState {
            env: self.env.snapshot(),
            action_rng: self.action_rng.state(),
            episode_return: self.episode_return,
            episode_undiscounted: self.episode_undiscounted,
            episode_length: self.episode_length,
            discount: self.discount,
            // Learner-side accumulators; the coordinator fills these in.
            td_sum: 0.0,
            td_count: 0,
            rollouts: self.rollouts.clone(),
        }
    }

    pub fn restore_state(&mut self, state: &InstanceState) -> Result<()> {
        self.env.restore(&state.env)?;
        self.action_rng = SplitMix64::from_state(state.action_rng);
        self.episode_return = state.episode_return;
        self.episode_undiscounted = state.episode_undiscounted;
        self.episode_length = state.episode_length;
        self.discount = state.discount;
        self.rollouts = agent_ids_map(&self.agent_ids);
        for (agent, rollout) in &state.rollouts {
            if !self.rollouts.contains_key(agent) {
                return Err(Error::InconsistentState(format!(
                    "checkpoint rollout for unknown agent `{agent}`"
                )));
            }
            self.rollouts.insert(agent.clone(), rollout.clone());
        }
        Ok(())
    }
}

fn agent_ids_map(agent_ids: &[String]) -> BTreeMap<String, Vec<Transition>> {
    agent_ids.iter().map(|a| (a.clone(), Vec::new())).collect()
}

/// Delegated lifecycle: the agent owns the interaction loop for one round.
struct DelegatedDriver<'a> {
    snapshot: &'a ActorSnapshot,
}

impl DelegatedDriver<'_> {
    fn interact(&self, env: &mut InstanceCollector, ctx: &RoundCtx) -> Result<Vec<StepEvent>> {
        let mut events = Vec::with_capacity(ctx.steps as usize);
        let base = ctx.round_start + env.instance as u64 * ctx.steps;
        let mut budget = ctx.steps;
        let mut j = 0;
        while budget > 0 {
            let global_step = base + j;
            let epsilon = ctx.hp.epsilon_at(global_step);
            events.push(env.step_once(self.snapshot, epsilon, global_step, ctx.reset_params)?);
            budget -= 1;
            j += 1;
        }
        Ok(events)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::ParamsKind;
    use crate::orchestrator::config::load_config;

    fn config(lifecycle: &str) -> ExperimentConfig {
        load_config(&format!(
            r#"{{"env": "gridworld4", "algorithm": "q_learning",
                 "lifecycle": "{lifecycle}",
                 "stop": {{"max_global_steps": 50}}}}"#
        ))
        .unwrap()
    }

    fn snapshot() -> ActorSnapshot {
        let mut actors = BTreeMap::new();
        actors.insert(
            "agent_0".to_string(),
            TabularParams::zeros(ParamsKind::QTable, 16, 4),
        );
        ActorSnapshot { actors }
    }

    fn collect(lifecycle: &str, steps: u64) -> Vec<StepEvent> {
        let cfg = config(lifecycle);
        let mut collector = InstanceCollector::new(&cfg, 0, &cfg.env_params).unwrap();
        let snap = snapshot();
        let ctx = RoundCtx {
            snapshot: &snap,
            strategy: cfg.lifecycle,
            steps,
            round_start: 0,
            hp: &cfg.hp,
            reset_params: &cfg.env_params,
        };
        collector.run_round(&ctx).unwrap()
    }

    #[test]
    fn strategies_collect_identical_events() {
        let a = collect("mediated", 40);
        let b = collect("delegated", 40);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.global_step, y.global_step);
            assert_eq!(x.transitions, y.transitions);
            assert_eq!(x.epsilon, y.epsilon);
            assert_eq!(
                x.episode_end.as_ref().map(|e| e.length),
                y.episode_end.as_ref().map(|e| e.length)
            );
        }
    }

    #[test]
    fn global_steps_are_consecutive_per_instance() {
        let events = collect("mediated", 10);
        let steps: Vec<u64> = events.iter().map(|e| e.global_step).collect();
        assert_eq!(steps, (0..10).collect::<Vec<u64>>());
    }

    #[test]
    fn state_round_trip_resumes_the_exact_stream() {
        let cfg = config("mediated");
        let snap = snapshot();
        let ctx = RoundCtx {
            snapshot: &snap,
            strategy: cfg.lifecycle,
            steps: 25,
            round_start: 0,
            hp: &cfg.hp,
            reset_params: &cfg.env_params,
        };
        let mut a = InstanceCollector::new(&cfg, 0, &cfg.env_params).unwrap();
        a.run_round(&ctx).unwrap();
        let saved = a.to_state();
        let tail_ctx = RoundCtx {
            round_start: 25,
            ..ctx
        };
        let expected = a.run_round(&tail_ctx).unwrap();

        let mut b = InstanceCollector::new(&cfg, 0, &cfg.env_params).unwrap();
        b.restore_state(&saved).unwrap();
        let tail_ctx = RoundCtx {
            snapshot: &snap,
            strategy: cfg.lifecycle,
            steps: 25,
            round_start: 25,
            hp: &cfg.hp,
            reset_params: &cfg.env_params,
        };
        let got = b.run_round(&tail_ctx).unwrap();
        for (x, y) in expected.iter().zip(&got) {
            assert_eq!(x.transitions, y.transitions);
            assert_eq!(x.global_step, y.global_step);
        }
    }

    #[test]
    fn distinct_instances_use_distinct_streams() {
        let cfg = config("mediated");
        let snap = snapshot();
        let run = |instance| {
            let mut c = InstanceCollector::new(&cfg, instance, &cfg.env_params).unwrap();
            let ctx = RoundCtx {
                snapshot: &snap,
                strategy: cfg.lifecycle,
                steps: 20,
                round_start: 0,
                hp: &cfg.hp,
                reset_params: &cfg.env_params,
            };
            c.run_round(&ctx)
                .unwrap()
                .into_iter()
                .map(|e| e.transitions["agent_0"].action)
                .collect::<Vec<u64>>()
        };
        assert_ne!(run(0), run(1));
    }
}
