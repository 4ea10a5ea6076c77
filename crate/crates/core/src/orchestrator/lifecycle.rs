//! Run lifecycle: the training loop shared by all four algorithms, the stop
//! check, and policy evaluation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::agent::{
    a2c_update, buffer_drain, buffer_push_replay, buffer_push_rollout, buffer_sample,
    central_marl_update, q_update, reinforce_update, ParamsKind, ReplayBuffer, RolloutBuffer,
    SelectMode, TabularParams,
};
use crate::core::{discounted_return, RunProgress, Trajectory, Transition};
use crate::env::{make_env, EnvParams};
use crate::error::{Error, Result};
use crate::monitoring::{JsonlLogger, LogRecord};
use crate::orchestrator::collector::{ActorSnapshot, EpisodeEnd, InstanceCollector, RoundCtx};
use crate::orchestrator::config::{
    merge_params, Algorithm, ExperimentConfig, StoppingCriteria,
};
use crate::orchestrator::placement::{collect_parallel, plan_placement};
use crate::persistence::{
    load_checkpoint_file, save_checkpoint, schedule_params, CheckpointState, LoadMode,
    CHECKPOINT_VERSION,
};
use crate::rng::{derive_stream, SplitMix64, TAG_EVAL, TAG_SAMPLE};

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxGlobalSteps,
    MaxEpisodes,
    RewardThreshold,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::MaxGlobalSteps => "max_global_steps",
            StopReason::MaxEpisodes => "max_episodes",
            StopReason::RewardThreshold => "reward_threshold",
        })
    }
}

/// Evaluates the stopping criteria against current progress. Bounds are
/// checked in a fixed priority order: steps, episodes, reward threshold.
/// `recent_returns` holds the last completed episode returns, newest last.
pub fn check_stop(
    stop: &StoppingCriteria,
    progress: &RunProgress,
    recent_returns: &[f64],
) -> Option<StopReason> {
    if let Some(max) = stop.max_global_steps {
        if progress.global_step >= max {
            return Some(StopReason::MaxGlobalSteps);
        }
    }
    if let Some(max) = stop.max_episodes {
        if progress.episode_count >= max {
            return Some(StopReason::MaxEpisodes);
        }
    }
    if let Some(t) = stop.reward_threshold {
        let w = t.window as usize;
        if recent_returns.len() >= w {
            let tail = &recent_returns[recent_returns.len() - w..];
            let mean = tail.iter().sum::<f64>() / w as f64;
            if mean >= t.threshold {
                return Some(StopReason::RewardThreshold);
            }
        }
    }
    None
}

/// Where a run writes its artifacts.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out_dir: PathBuf,
    pub run_id: String,
    /// Checkpoint to resume from (exact continuation; digest-checked).
    pub resume_from: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EvalResult {
    pub episodes: u64,
    pub mean_return: f64,
    pub std_return: f64,
    pub min_return: f64,
    pub max_return: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub run_id: String,
    pub global_step: u64,
    pub episode_count: u64,
    pub stop_reason: StopReason,
    pub final_eval: EvalResult,
    pub log_path: PathBuf,
    pub checkpoint_path: PathBuf,
    pub tables: BTreeMap<String, TabularParams>,
}

/// Environment params in effect at a learning-progress fraction: base params
/// overlaid with the active curriculum stage, if any.
pub fn params_at(config: &ExperimentConfig, fraction: f64) -> Result<EnvParams> {
    match &config.curriculum {
        Some(schedule) => {
            let stage = schedule_params(schedule, fraction.clamp(0.0, 1.0))?;
            Ok(merge_params(&config.env_params, stage))
        }
        None => Ok(config.env_params.clone()),
    }
}

/// Learning-progress fraction in [0, 1], measured against the tightest
/// configured budget (steps first, then episodes).
pub fn progress_fraction(config: &ExperimentConfig, global_step: u64, episode_count: u64) -> f64 {
    if let Some(max) = config.stop.max_global_steps {
        if max == 0 {
            return 1.0;
        }
        return (global_step as f64 / max as f64).min(1.0);
    }
    if let Some(max) = config.stop.max_episodes {
        if max == 0 {
            return 1.0;
        }
        return (episode_count as f64 / max as f64).min(1.0);
    }
    0.0
}

/// Suffix of the critic table key for actor-critic policies.
const CRITIC_SUFFIX: &str = "/critic";

fn critic_key(policy_id: &str) -> String {
    format!("{policy_id}{CRITIC_SUFFIX}")
}

/// State/action table dimensions, sized to the largest observation space the
/// run can encounter across curriculum stages.
fn table_dims(config: &ExperimentConfig) -> Result<(u64, u64)> {
    let probe = |params: &EnvParams| -> Result<(u64, u64)> {
        let env = make_env(&config.env_id, params, config.max_episode_steps)?;
        Ok((env.observation_space.size, env.action_space.size))
    };
    let (mut states, actions) = probe(&config.env_params)?;
    if let Some(schedule) = &config.curriculum {
        for stage in &schedule.stages {
            let merged = merge_params(&config.env_params, &stage.params);
            let (s, a) = probe(&merged)?;
            if a != actions {
                return Err(Error::ConfigInvalid {
                    path: "curriculum".into(),
                    message: "action space must not change across stages".into(),
                });
            }
            states = states.max(s);
        }
    }
    Ok((states, actions))
}

/// Fresh zero-initialized tables for every policy id (plus critics for A2C).
pub fn init_tables(config: &ExperimentConfig) -> Result<BTreeMap<String, TabularParams>> {
    let (states, actions) = table_dims(config)?;
    let mut tables = BTreeMap::new();
    for pid in config.policy_ids() {
        match config.algorithm {
            Algorithm::QLearning => {
                tables.insert(pid, TabularParams::zeros(ParamsKind::QTable, states, actions));
            }
            Algorithm::Reinforce | Algorithm::CentralMarl => {
                tables.insert(
                    pid,
                    TabularParams::zeros(ParamsKind::PolicyLogits, states, actions),
                );
            }
            Algorithm::A2c => {
                tables.insert(
                    critic_key(&pid),
                    TabularParams::zeros(ParamsKind::VTable, states, 1),
                );
                tables.insert(
                    pid,
                    TabularParams::zeros(ParamsKind::PolicyLogits, states, actions),
                );
            }
        }
    }
    Ok(tables)
}

/// Acting-parameter view over the tables: one entry per agent, resolved
/// through the policy mapping. Critic tables are never actors.
pub fn actor_snapshot(
    tables: &BTreeMap<String, TabularParams>,
    config: &ExperimentConfig,
) -> Result<ActorSnapshot> {
    let mut actors = BTreeMap::new();
    for (agent, pid) in &config.policy_mapping {
        let table = tables.get(pid).ok_or_else(|| {
            Error::InconsistentState(format!("no table for policy `{pid}`"))
        })?;
        actors.insert(agent.clone(), table.clone());
    }
    Ok(ActorSnapshot { actors })
}

/// Per-instance accumulator for the Q-learning episode TD-error metric.
#[derive(Clone, Copy, Default)]
struct TdAccumulator {
    sum: f64,
    count: u64,
}

struct Trainer<'a> {
    config: &'a ExperimentConfig,
    tables: BTreeMap<String, TabularParams>,
    replay: Option<ReplayBuffer>,
    sample_rng: Option<SplitMix64>,
    td: Vec<TdAccumulator>,
    global_step: u64,
    episode_count: u64,
    recent_returns: Vec<f64>,
}

impl Trainer<'_> {
    /// Window the stop criterion needs, with a fixed fallback so checkpoints
    /// stay small.
    fn returns_window(&self) -> usize {
        self.config
            .stop
            .reward_threshold
            .map(|t| t.window as usize)
            .unwrap_or(100)
    }

    /// Applies one collected step to the learner. Q-learning updates every
    /// step from a replay sample; the on-policy algorithms update at episode
    /// boundaries from the completed rollout.
    fn absorb_event(
        &mut self,
        transitions: &BTreeMap<String, Transition>,
        episode_end: Option<&EpisodeEnd>,
        instance: usize,
    ) -> Result<Option<f64>> {
        let hp = &self.config.hp;
        let mut episode_metric = None;
        if self.config.algorithm == Algorithm::QLearning {
            let replay = self.replay.as_mut().expect("replay for q_learning");
            buffer_push_replay(replay, transitions["agent_0"].clone());
            let rng = self.sample_rng.as_mut().expect("sample rng for q_learning");
            let batch = buffer_sample(replay, self.config.buffer.batch_size as usize, rng)?;
            let pid = &self.config.policy_mapping["agent_0"];
            let table = self.tables.get_mut(pid).expect("q table");
            let stats = q_update(table, &batch, hp)?;
            self.td[instance].sum += stats.mean_td_error;
            self.td[instance].count += 1;
        }
        if let Some(end) = episode_end {
            match self.config.algorithm {
                Algorithm::QLearning => {
                    let acc = std::mem::take(&mut self.td[instance]);
                    episode_metric = Some(("mean_td_error", acc.sum / acc.count.max(1) as f64));
                }
                Algorithm::Reinforce => {
                    let mut staging = RolloutBuffer::new();
                    for t in &end.rollouts["agent_0"] {
                        buffer_push_rollout(&mut staging, t.clone());
                    }
                    let trajectory = Trajectory {
                        transitions: buffer_drain(&mut staging),
                        episode_id: self.episode_count,
                    };
                    let pid = &self.config.policy_mapping["agent_0"];
                    let table = self.tables.get_mut(pid).expect("policy table");
                    let stats = reinforce_update(table, &trajectory, hp)?;
                    episode_metric = Some(("mean_return", stats.mean_return));
                }
                Algorithm::A2c => {
                    let mut staging = RolloutBuffer::new();
                    for t in &end.rollouts["agent_0"] {
                        buffer_push_rollout(&mut staging, t.clone());
                    }
                    let rollout = buffer_drain(&mut staging);
                    let pid = self.config.policy_mapping["agent_0"].clone();
                    let mut actor = self.tables.remove(&pid).expect("actor table");
                    let mut critic =
                        self.tables.remove(&critic_key(&pid)).expect("critic table");
                    let outcome = a2c_update(&mut actor, &mut critic, &rollout, hp);
                    self.tables.insert(critic_key(&pid), critic);
                    self.tables.insert(pid, actor);
                    episode_metric = Some(("mean_advantage", outcome?.mean_advantage));
                }
                Algorithm::CentralMarl => {
                    // Agents update sequentially in id order; each sees the
                    // shared team return. Sequential application also covers
                    // agents sharing one policy table.
                    let mut mean_return = 0.0;
                    for (i, (agent, pid)) in self.config.policy_mapping.iter().enumerate() {
                        let mut staging = RolloutBuffer::new();
                        for t in &end.rollouts[agent] {
                            buffer_push_rollout(&mut staging, t.clone());
                        }
                        let mut actors = BTreeMap::new();
                        actors.insert(agent.clone(), self.tables.remove(pid).expect("actor"));
                        let mut rollouts = BTreeMap::new();
                        rollouts.insert(agent.clone(), buffer_drain(&mut staging));
                        let outcome = central_marl_update(&mut actors, &rollouts, hp);
                        self.tables
                            .insert(pid.clone(), actors.remove(agent).expect("actor back"));
                        let stats = outcome?;
                        if i == 0 {
                            mean_return = stats.mean_return;
                        }
                    }
                    episode_metric = Some(("mean_return", mean_return));
                }
            }
            self.episode_count += 1;
            self.recent_returns.push(end.discounted_return);
            let window = self.returns_window();
            if self.recent_returns.len() > window {
                let excess = self.recent_returns.len() - window;
                self.recent_returns.drain(..excess);
            }
        }
        Ok(episode_metric.map(|(_, v)| v))
    }

    fn episode_metric_key(&self) -> &'static str {
        match self.config.algorithm {
            Algorithm::QLearning => "mean_td_error",
            Algorithm::Reinforce | Algorithm::CentralMarl => "mean_return",
            Algorithm::A2c => "mean_advantage",
        }
    }

    fn to_checkpoint(
        &self,
        digest: &str,
        collectors: &[InstanceCollector],
        fraction: f64,
    ) -> CheckpointState {
        CheckpointState {
            version: CHECKPOINT_VERSION,
            config_digest: digest.to_string(),
            rng_algorithm: "splitmix64".into(),
            global_step: self.global_step,
            episode_count: self.episode_count,
            tables: self.tables.clone(),
            replay: self.replay.clone(),
            sample_rng: self.sample_rng.as_ref().map(|r| r.state()),
            instances: collectors
                .iter()
                .map(|c| {
                    let mut state = c.to_state();
                    state.td_sum = self.td[c.instance].sum;
                    state.td_count = self.td[c.instance].count;
                    state
                })
                .collect(),
            recent_returns: self.recent_returns.clone(),
            curriculum_progress: fraction,
        }
    }
}

/// Runs one complete training loop: collect a round from every instance,
/// feed the learner in merge order, log per-episode metrics, honor the
/// checkpoint interval and stopping criteria, then write the final
/// checkpoint and evaluate the greedy policy.
pub fn run_training(config: &ExperimentConfig, ctx: &RunContext) -> Result<RunResult> {
    std::fs::create_dir_all(&ctx.out_dir).map_err(|e| Error::io(&ctx.out_dir, e))?;
    let digest = config.digest();

    let mut trainer = Trainer {
        config,
        tables: init_tables(config)?,
        replay: match config.algorithm {
            Algorithm::QLearning => Some(ReplayBuffer::new(config.buffer.capacity as usize)?),
            _ => None,
        },
        sample_rng: match config.algorithm {
            Algorithm::QLearning => Some(SplitMix64::new(derive_stream(
                config.seed,
                TAG_SAMPLE,
                0,
            ))),
            _ => None,
        },
        td: vec![TdAccumulator::default(); config.num_envs as usize],
        global_step: 0,
        episode_count: 0,
        recent_returns: Vec::new(),
    };

    let initial_params = params_at(config, 0.0)?;
    let mut collectors: Vec<InstanceCollector> = (0..config.num_envs as usize)
        .map(|i| InstanceCollector::new(config, i, &initial_params))
        .collect::<Result<_>>()?;

    if let Some(path) = &ctx.resume_from {
        let state = load_checkpoint_file(path, LoadMode::Resume, &digest)?;
        if state.instances.len() != collectors.len() {
            return Err(Error::InconsistentState(format!(
                "checkpoint has {} instances, config asks for {}",
                state.instances.len(),
                collectors.len()
            )));
        }
        for (collector, saved) in collectors.iter_mut().zip(&state.instances) {
            collector.restore_state(saved)?;
            trainer.td[collector.instance] = TdAccumulator {
                sum: saved.td_sum,
                count: saved.td_count,
            };
        }
        trainer.tables = state.tables;
        trainer.replay = state.replay;
        trainer.sample_rng = state.sample_rng.map(SplitMix64::from_state);
        trainer.global_step = state.global_step;
        trainer.episode_count = state.episode_count;
        trainer.recent_returns = state.recent_returns;
    } else if let Some(path) = &config.transfer_init {
        transfer_tables(&mut trainer.tables, path)?;
    }

    let log_path = ctx.out_dir.join(format!("{}.log.jsonl", ctx.run_id));
    let mut logger = JsonlLogger::open(&log_path)?;
    let plan = plan_placement(config.num_envs, config.num_workers, config.seed);
    let metric_key = trainer.episode_metric_key();
    let interval = config.checkpoint_interval_steps;
    let mut last_checkpoint = trainer.global_step;

    let stop_reason = loop {
        let fraction = progress_fraction(config, trainer.global_step, trainer.episode_count);
        let progress = RunProgress {
            global_step: trainer.global_step,
            episode_count: trainer.episode_count,
            fraction_complete: fraction,
        };
        if let Some(reason) = check_stop(&config.stop, &progress, &trainer.recent_returns) {
            break reason;
        }
        if interval > 0 && trainer.global_step - last_checkpoint >= interval {
            let path = ctx
                .out_dir
                .join(format!("{}.step{}.ckpt.json", ctx.run_id, trainer.global_step));
            save_checkpoint(&trainer.to_checkpoint(&digest, &collectors, fraction), &path)?;
            last_checkpoint = trainer.global_step;
        }

        let reset_params = params_at(config, fraction)?;
        let snapshot = actor_snapshot(&trainer.tables, config)?;
        let round = RoundCtx {
            snapshot: &snapshot,
            strategy: config.lifecycle,
            steps: config.round_steps_per_env,
            round_start: trainer.global_step,
            hp: &config.hp,
            reset_params: &reset_params,
        };
        let events = collect_parallel(&plan, &mut collectors, &round)?;

        for event in &events {
            let metric =
                trainer.absorb_event(&event.transitions, event.episode_end.as_ref(), event.instance)?;
            trainer.global_step = event.global_step + 1;
            if let Some(end) = &event.episode_end {
                let episode = Some(trainer.episode_count);
                let at = |key: &str, value: f64| LogRecord {
                    run_id: ctx.run_id.clone(),
                    global_step: event.global_step + 1,
                    episode,
                    key: key.to_string(),
                    value,
                };
                logger.log_record(&at("episode_return", end.discounted_return))?;
                logger.log_record(&at("episode_length", end.length as f64))?;
                logger.log_record(&at(metric_key, metric.unwrap_or(0.0)))?;
                logger.log_record(&at("epsilon", event.epsilon))?;
            }
        }
    };

    let fraction = progress_fraction(config, trainer.global_step, trainer.episode_count);
    let checkpoint_path = ctx.out_dir.join(format!("{}.final.ckpt.json", ctx.run_id));
    save_checkpoint(
        &trainer.to_checkpoint(&digest, &collectors, fraction),
        &checkpoint_path,
    )?;

    let snapshot = actor_snapshot(&trainer.tables, config)?;
    let final_eval = run_evaluation(config, &snapshot, config.eval_episodes)?;

    Ok(RunResult {
        run_id: ctx.run_id.clone(),
        global_step: trainer.global_step,
        episode_count: trainer.episode_count,
        stop_reason,
        final_eval,
        log_path,
        checkpoint_path,
        tables: trainer.tables,
    })
}

/// Copies shape-compatible tables from a checkpoint into fresh tables
/// (transfer initialization: parameters only, no counters or streams).
fn transfer_tables(tables: &mut BTreeMap<String, TabularParams>, path: &Path) -> Result<()> {
    let state = load_checkpoint_file(path, LoadMode::Transfer, "")?;
    for (key, fresh) in tables.iter_mut() {
        if let Some(source) = state.tables.get(key) {
            if source.kind != fresh.kind
                || source.states != fresh.states
                || source.actions != fresh.actions
            {
                return Err(Error::InvalidParams(format!(
                    "transfer table `{key}` has incompatible shape"
                )));
            }
            *fresh = source.clone();
        }
    }
    Ok(())
}

/// Evaluates the policy greedily (exploit mode) over dedicated evaluation
/// episodes; training streams are untouched.
pub fn run_evaluation(
    config: &ExperimentConfig,
    actors: &ActorSnapshot,
    episodes: u64,
) -> Result<EvalResult> {
    run_evaluation_with_mode(config, actors, episodes, SelectMode::Exploit)
}

/// Evaluation with an explicit selection mode. Explore mode samples from the
/// policy distribution (epsilon 0 for Q-tables) using the evaluation stream.
pub fn run_evaluation_with_mode(
    config: &ExperimentConfig,
    actors: &ActorSnapshot,
    episodes: u64,
    mode: SelectMode,
) -> Result<EvalResult> {
    if episodes == 0 {
        return Err(Error::InvalidArgument(
            "evaluation needs at least one episode".into(),
        ));
    }
    // Evaluate on the target task: the last curriculum stage when present.
    let params = params_at(config, 1.0)?;
    let mut env = make_env(&config.env_id, &params, config.max_episode_steps)?;
    for agent in &env.agent_ids {
        let table = actors
            .actors
            .get(agent)
            .ok_or_else(|| Error::MissingAgent(agent.clone()))?;
        if table.kind == ParamsKind::VTable {
            return Err(Error::UnsupportedApproximator(
                "a critic V-table cannot act".into(),
            ));
        }
        if table.states < env.observation_space.size || table.actions != env.action_space.size {
            return Err(Error::InvalidParams(format!(
                "table for `{agent}` is {}x{}, environment needs {}x{}",
                table.states, table.actions, env.observation_space.size, env.action_space.size
            )));
        }
    }
    let agent_ids = env.agent_ids.clone();
    let mut rng = SplitMix64::new(derive_stream(config.seed, TAG_EVAL, u64::MAX));
    let mut returns = Vec::with_capacity(episodes as usize);
    for ep in 0..episodes {
        let mut obs = env.reset(Some(derive_stream(config.seed, TAG_EVAL, ep)), None)?;
        let mut rewards = Vec::new();
        loop {
            let actions: Vec<u64> = agent_ids
                .iter()
                .enumerate()
                .map(|(i, agent)| {
                    crate::agent::select_action(&actors.actors[agent], obs[i], &mut rng, mode, 0.0)
                })
                .collect::<Result<_>>()?;
            let result = env.step(&actions)?;
            rewards.push(result.rewards[0]);
            obs = result.obs;
            if result.terminated || result.truncated {
                break;
            }
        }
        returns.push(discounted_return(&rewards, config.hp.gamma)?);
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = if returns.len() > 1 {
        returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(EvalResult {
        episodes,
        mean_return: mean,
        std_return: var.sqrt(),
        min_return: returns.iter().cloned().fold(f64::INFINITY, f64::min),
        max_return: returns.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    })
}
