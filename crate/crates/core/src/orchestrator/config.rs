//! Experiment configuration: strict-key JSON loading, default filling,
//! semantic validation, and the digest that ties checkpoints to the
//! learning-relevant part of a config.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::canon::to_canonical_string;
use crate::core::Hyperparameters;
use crate::env::{make_env, EnvParams};
use crate::error::{Error, Result};
use crate::persistence::CurriculumSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Reinforce,
    QLearning,
    A2c,
    CentralMarl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifecycleStrategy {
    Mediated,
    Delegated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BufferKind {
    Rollout,
    Replay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardThreshold {
    pub threshold: f64,
    /// Moving-average window over the last K completed episodes.
    pub window: u64,
}

/// Global stopping bounds; at least one must be set.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingCriteria {
    #[serde(default)]
    pub max_global_steps: Option<u64>,
    #[serde(default)]
    pub max_episodes: Option<u64>,
    #[serde(default)]
    pub reward_threshold: Option<RewardThreshold>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferSpec {
    pub kind: BufferKind,
    pub capacity: u64,
    pub batch_size: u64,
}

/// Fully resolved, validated description of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub env_id: String,
    pub env_params: EnvParams,
    pub algorithm: Algorithm,
    pub hp: Hyperparameters,
    pub lifecycle: LifecycleStrategy,
    pub stop: StoppingCriteria,
    pub seed: u64,
    pub num_workers: u64,
    pub num_envs: u64,
    /// Steps each environment instance takes per collection round.
    pub round_steps_per_env: u64,
    pub buffer: BufferSpec,
    pub checkpoint_interval_steps: u64,
    pub transfer_init: Option<PathBuf>,
    pub policy_mapping: BTreeMap<String, String>,
    pub curriculum: Option<CurriculumSchedule>,
    pub eval_episodes: u64,
    pub max_episode_steps: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHyperparameters {
    #[serde(default)]
    gamma: Option<f64>,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    alpha_critic: Option<f64>,
    #[serde(default)]
    epsilon_start: Option<f64>,
    #[serde(default)]
    epsilon_end: Option<f64>,
    #[serde(default)]
    epsilon_decay_steps: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBuffer {
    #[serde(default)]
    kind: Option<BufferKind>,
    #[serde(default)]
    capacity: Option<u64>,
    #[serde(default)]
    batch_size: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    env: String,
    #[serde(default)]
    env_params: Option<BTreeMap<String, f64>>,
    algorithm: Algorithm,
    #[serde(default)]
    hyperparameters: Option<RawHyperparameters>,
    #[serde(default)]
    lifecycle: Option<LifecycleStrategy>,
    stop: StoppingCriteria,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    num_workers: Option<u64>,
    #[serde(default)]
    num_envs: Option<u64>,
    #[serde(default)]
    round_steps_per_env: Option<u64>,
    #[serde(default)]
    buffer: Option<RawBuffer>,
    #[serde(default)]
    checkpoint_interval_steps: Option<u64>,
    #[serde(default)]
    transfer_init: Option<String>,
    #[serde(default)]
    policy_mapping: Option<BTreeMap<String, String>>,
    #[serde(default)]
    curriculum: Option<CurriculumSchedule>,
    #[serde(default)]
    eval_episodes: Option<u64>,
    #[serde(default)]
    max_episode_steps: Option<u64>,
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::ConfigInvalid {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses and validates a configuration document (strict keys, defaults
/// filled). Syntax errors carry line/column; semantic errors carry the
/// offending field path.
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::ConfigSyntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    load_config_value(&value)
}

/// Same as [`load_config`] for an already-parsed document (used by overlay
/// application in the experiment layer).
pub fn load_config_value(value: &serde_json::Value) -> Result<ExperimentConfig> {
    let de = serde_path_to_error::deserialize::<_, RawConfig>(value);
    let raw = de.map_err(|e| invalid(e.path().to_string(), e.inner().to_string()))?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig> {
    let hp_raw = raw.hyperparameters.unwrap_or(RawHyperparameters {
        gamma: None,
        alpha: None,
        alpha_critic: None,
        epsilon_start: None,
        epsilon_end: None,
        epsilon_decay_steps: None,
    });
    let defaults = Hyperparameters::default();
    let hp = Hyperparameters {
        gamma: hp_raw.gamma.unwrap_or(defaults.gamma),
        alpha: hp_raw.alpha.unwrap_or(defaults.alpha),
        alpha_critic: hp_raw.alpha_critic.unwrap_or(defaults.alpha_critic),
        epsilon_start: hp_raw.epsilon_start.unwrap_or(defaults.epsilon_start),
        epsilon_end: hp_raw.epsilon_end.unwrap_or(defaults.epsilon_end),
        epsilon_decay_steps: hp_raw
            .epsilon_decay_steps
            .unwrap_or(defaults.epsilon_decay_steps),
    };
    hp.validate()?;

    let default_kind = match raw.algorithm {
        Algorithm::QLearning => BufferKind::Replay,
        _ => BufferKind::Rollout,
    };
    let buffer_raw = raw.buffer.unwrap_or(RawBuffer {
        kind: None,
        capacity: None,
        batch_size: None,
    });
    let buffer = BufferSpec {
        kind: buffer_raw.kind.unwrap_or(default_kind),
        capacity: buffer_raw.capacity.unwrap_or(10_000),
        batch_size: buffer_raw.batch_size.unwrap_or(32),
    };
    match (raw.algorithm, buffer.kind) {
        (Algorithm::QLearning, BufferKind::Replay) => {}
        (Algorithm::QLearning, _) => {
            return Err(invalid("buffer.kind", "q_learning requires a replay buffer"))
        }
        (_, BufferKind::Rollout) => {}
        (algo, _) => {
            return Err(invalid(
                "buffer.kind",
                format!("{algo:?} requires rollout buffers"),
            ))
        }
    }
    if buffer.capacity == 0 {
        return Err(invalid("buffer.capacity", "must be >= 1"));
    }
    if buffer.batch_size == 0 {
        return Err(invalid("buffer.batch_size", "must be >= 1"));
    }

    let stop = raw.stop;
    if stop.max_global_steps.is_none()
        && stop.max_episodes.is_none()
        && stop.reward_threshold.is_none()
    {
        return Err(invalid("stop", "at least one stopping bound required"));
    }
    if let Some(t) = &stop.reward_threshold {
        if t.window == 0 {
            return Err(invalid("stop.reward_threshold.window", "must be >= 1"));
        }
    }

    let env_params = EnvParams(raw.env_params.unwrap_or_default());
    let max_episode_steps = raw.max_episode_steps.unwrap_or(100);
    if max_episode_steps == 0 {
        return Err(invalid("max_episode_steps", "must be >= 1"));
    }
    // Probe the environment; rejects unknown env ids and bad params.
    let env = make_env(&raw.env, &env_params, max_episode_steps)
        .map_err(|e| invalid("env", e.to_string()))?;
    let agent_ids = env.agent_ids.clone();

    let multi_agent = agent_ids.len() > 1;
    match (raw.algorithm, multi_agent) {
        (Algorithm::CentralMarl, false) => {
            return Err(invalid(
                "algorithm",
                "central_marl requires a multi-agent environment",
            ))
        }
        (Algorithm::CentralMarl, true) => {}
        (_, true) => {
            return Err(invalid(
                "algorithm",
                "multi-agent environments require central_marl",
            ))
        }
        (_, false) => {}
    }

    let policy_mapping = match raw.policy_mapping {
        Some(map) => {
            for agent in &agent_ids {
                if !map.contains_key(agent) {
                    return Err(invalid(
                        "policy_mapping",
                        format!("agent `{agent}` has no policy"),
                    ));
                }
            }
            for agent in map.keys() {
                if !agent_ids.contains(agent) {
                    return Err(invalid(
                        "policy_mapping",
                        format!("unknown agent `{agent}`"),
                    ));
                }
            }
            map
        }
        None => agent_ids
            .iter()
            .enumerate()
            .map(|(i, agent)| {
                let pid = if multi_agent {
                    format!("p{i}")
                } else {
                    "default".to_string()
                };
                (agent.clone(), pid)
            })
            .collect(),
    };

    if let Some(curriculum) = &raw.curriculum {
        curriculum.validate()?;
        if stop.max_global_steps.is_none() && stop.max_episodes.is_none() {
            return Err(invalid(
                "curriculum",
                "requires max_global_steps or max_episodes to define progress",
            ));
        }
        for stage in &curriculum.stages {
            let merged = merge_params(&env_params, &stage.params);
            make_env(&raw.env, &merged, max_episode_steps)
                .map_err(|e| invalid("curriculum", e.to_string()))?;
        }
    }

    let num_workers = raw.num_workers.unwrap_or(1);
    let num_envs = raw.num_envs.unwrap_or(1);
    if num_workers == 0 {
        return Err(invalid("num_workers", "must be >= 1"));
    }
    if num_envs == 0 {
        return Err(invalid("num_envs", "must be >= 1"));
    }
    let round_steps_per_env = raw.round_steps_per_env.unwrap_or(1);
    if round_steps_per_env == 0 {
        return Err(invalid("round_steps_per_env", "must be >= 1"));
    }
    let eval_episodes = raw.eval_episodes.unwrap_or(5);
    if eval_episodes == 0 {
        return Err(invalid("eval_episodes", "must be >= 1"));
    }

    Ok(ExperimentConfig {
        env_id: raw.env,
        env_params,
        algorithm: raw.algorithm,
        hp,
        lifecycle: raw.lifecycle.unwrap_or(LifecycleStrategy::Mediated),
        stop,
        seed: raw.seed.unwrap_or(0),
        num_workers,
        num_envs,
        round_steps_per_env,
        buffer,
        checkpoint_interval_steps: raw.checkpoint_interval_steps.unwrap_or(0),
        transfer_init: raw.transfer_init.map(PathBuf::from),
        policy_mapping,
        curriculum: raw.curriculum,
        eval_episodes,
        max_episode_steps,
    })
}

/// Base params overridden by stage params.
pub fn merge_params(base: &EnvParams, overlay: &EnvParams) -> EnvParams {
    let mut merged = base.clone();
    for (k, v) in &overlay.0 {
        merged.0.insert(k.clone(), *v);
    }
    merged
}

impl ExperimentConfig {
    pub fn agent_ids(&self) -> Vec<String> {
        let n = if self.env_id == "matrix_game" { 2 } else { 1 };
        (0..n).map(|i| format!("agent_{i}")).collect()
    }

    /// SHA-256 over the learning-relevant fields in canonical form.
    /// Operational fields (stopping bounds, checkpoint interval, transfer
    /// source, eval episode count, worker count) are excluded so an
    /// interrupted run can be resumed with a larger budget.
    pub fn digest(&self) -> String {
        let value = serde_json::json!({
            "algorithm": self.algorithm,
            "buffer": self.buffer,
            "curriculum": self.curriculum,
            "env": self.env_id,
            "env_params": self.env_params,
            "hyperparameters": self.hp,
            "lifecycle": self.lifecycle,
            "max_episode_steps": self.max_episode_steps,
            "num_envs": self.num_envs,
            "policy_mapping": self.policy_mapping,
            "round_steps_per_env": self.round_steps_per_env,
            "seed": self.seed,
        });
        let canonical = to_canonical_string(&value);
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hex::encode(hasher.finalize())
    }

    /// Distinct policy ids in deterministic order.
    pub fn policy_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.policy_mapping.values().cloned().collect();
        ids.sort();
        ids.dedup();
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_fills_documented_defaults() {
        let cfg = load_config(
            r#"{"env": "gridworld4", "algorithm": "q_learning", "stop": {"max_episodes": 10000}}"#,
        )
        .unwrap();
        assert_eq!(cfg.hp.gamma, 0.99);
        assert_eq!(cfg.hp.alpha, 0.1);
        assert_eq!(cfg.hp.epsilon_start, 1.0);
        assert_eq!(cfg.hp.epsilon_end, 0.05);
        assert_eq!(cfg.hp.epsilon_decay_steps, 5000);
        assert_eq!(cfg.buffer.kind, BufferKind::Replay);
        assert_eq!(cfg.buffer.capacity, 10_000);
        assert_eq!(cfg.buffer.batch_size, 32);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.num_workers, 1);
        assert_eq!(cfg.lifecycle, LifecycleStrategy::Mediated);
    }

    #[test]
    fn incompatible_buffer_kind_rejected() {
        let err = load_config(
            r#"{"env": "bandit", "algorithm": "reinforce",
                "buffer": {"kind": "replay"},
                "stop": {"max_episodes": 10}}"#,
        )
        .unwrap_err();
        match err {
            Error::ConfigInvalid { path, .. } => assert_eq!(path, "buffer.kind"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_names_the_offending_path() {
        let err = load_config(
            r#"{"env": "bandit", "algorithm": "reinforce",
                "hyperparameters": {"learning_ratee": 0.1},
                "stop": {"max_episodes": 10}}"#,
        )
        .unwrap_err();
        match err {
            Error::ConfigInvalid { path, message } => {
                assert!(path.contains("hyperparameters"), "path: {path}");
                assert!(message.contains("learning_ratee"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = load_config("{\n  \"env\": }").unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { line: 2, .. }));
    }

    #[test]
    fn stopping_bound_required() {
        let err = load_config(r#"{"env": "bandit", "algorithm": "reinforce", "stop": {}}"#)
            .unwrap_err();
        assert!(matches!(err, Error::ConfigInvalid { .. }));
    }

    #[test]
    fn marl_needs_multi_agent_env_and_vice_versa() {
        assert!(load_config(
            r#"{"env": "bandit", "algorithm": "central_marl", "stop": {"max_episodes": 1}}"#
        )
        .is_err());
        assert!(load_config(
            r#"{"env": "matrix_game", "algorithm": "q_learning", "stop": {"max_episodes": 1}}"#
        )
        .is_err());
        let cfg = load_config(
            r#"{"env": "matrix_game", "algorithm": "central_marl", "stop": {"max_episodes": 1}}"#,
        )
        .unwrap();
        assert_eq!(cfg.policy_mapping.len(), 2);
        assert_eq!(cfg.policy_ids(), vec!["p0".to_string(), "p1".to_string()]);
    }

    #[test]
    fn digest_tracks_learning_fields_only() {
        let base = r#"{"env": "gridworld4", "algorithm": "q_learning", "stop": {"max_episodes": 100}}"#;
        let a = load_config(base).unwrap();
        let mut b = a.clone();
        b.stop.max_episodes = Some(5000);
        b.num_workers = 4;
        b.eval_episodes = 99;
        assert_eq!(a.digest(), b.digest());
        let mut c = a.clone();
        c.hp.alpha = 0.2;
        assert_ne!(a.digest(), c.digest());
    }
}
