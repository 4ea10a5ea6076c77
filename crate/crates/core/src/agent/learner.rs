//! Learners for the four reconstructed patterns: REINFORCE, Q-learning,
//! advantage actor-critic, and centralized multi-agent policy updates.

use std::collections::BTreeMap;

use crate::agent::params::{softmax, ParamsKind, TabularParams};
use crate::core::{Hyperparameters, Trajectory, Transition};
use crate::error::{Error, Result};

/// Aggregates reported by one learner update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub mean_td_error: f64,
    pub mean_advantage: f64,
    pub mean_return: f64,
    pub entries_consumed: u64,
}

fn expect_kind(params: &TabularParams, kind: ParamsKind, what: &str) -> Result<()> {
    if params.kind != kind {
        return Err(Error::UnsupportedApproximator(format!(
            "{what} requires {kind:?} params"
        )));
    }
    Ok(())
}

/// Softmax score-function step: `logits[s, a'] += alpha * weight * (1[a'=a] - pi(a'|s))`.
fn policy_gradient_step(
    policy: &mut TabularParams,
    state: u64,
    action: u64,
    weight: f64,
    alpha: f64,
) -> Result<()> {
    let probs = softmax(policy.row(state)?);
    let row = policy.row_mut(state)?;
    for (a, p) in probs.iter().enumerate() {
        let indicator = if a as u64 == action { 1.0 } else { 0.0 };
        row[a] += alpha * weight * (indicator - p);
    }
    Ok(())
}

/// Per-step discounted suffix returns `G_t` of a reward sequence.
fn suffix_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (i, &r) in rewards.iter().enumerate().rev() {
        acc = r + gamma * acc;
        out[i] = acc;
    }
    out
}

/// REINFORCE: each visited (s, a) moves by the score-function gradient
/// weighted by the discounted return from that step. No baseline.
pub fn reinforce_update(
    policy: &mut TabularParams,
    trajectory: &Trajectory,
    hp: &Hyperparameters,
) -> Result<UpdateStats> {
    expect_kind(policy, ParamsKind::PolicyLogits, "reinforce_update")?;
    if trajectory.transitions.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let rewards: Vec<f64> = trajectory.transitions.iter().map(|t| t.reward).collect();
    let returns = suffix_returns(&rewards, hp.gamma);
    for (t, g) in trajectory.transitions.iter().zip(&returns) {
        policy_gradient_step(policy, t.obs, t.action, *g, hp.alpha)?;
    }
    Ok(UpdateStats {
        mean_return: returns.iter().sum::<f64>() / returns.len() as f64,
        entries_consumed: returns.len() as u64,
        ..UpdateStats::default()
    })
}

/// Tabular Q-learning over a batch, applied sequentially in batch order so
/// later transitions see earlier updates. Bootstrapping keys off
/// `terminated` only.
pub fn q_update(
    q: &mut TabularParams,
    batch: &[Transition],
    hp: &Hyperparameters,
) -> Result<UpdateStats> {
    expect_kind(q, ParamsKind::QTable, "q_update")?;
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let mut delta_sum = 0.0;
    for t in batch {
        let bootstrap = if t.terminated {
            0.0
        } else {
            q.row(t.next_obs)?
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let target = t.reward + hp.gamma * bootstrap;
        let row = q.row_mut(t.obs)?;
        let delta = target - row[t.action as usize];
        row[t.action as usize] += hp.alpha * delta;
        delta_sum += delta;
    }
    Ok(UpdateStats {
        mean_td_error: delta_sum / batch.len() as f64,
        entries_consumed: batch.len() as u64,
        ..UpdateStats::default()
    })
}

/// Advantage actor-critic. Per step the advantage
/// `A = r + gamma * V(s') * [not terminated] - V(s)` is computed from the
/// pre-update critic of that transition, then the actor takes a
/// score-function step weighted by `A` and the critic moves `V(s)` by
/// `alpha_critic * A`.
pub fn a2c_update(
    actor: &mut TabularParams,
    critic: &mut TabularParams,
    rollout: &[Transition],
    hp: &Hyperparameters,
) -> Result<UpdateStats> {
    expect_kind(actor, ParamsKind::PolicyLogits, "a2c_update")?;
    expect_kind(critic, ParamsKind::VTable, "a2c_update")?;
    if rollout.is_empty() {
        return Err(Error::InvalidArgument("empty rollout".into()));
    }
    let mut adv_sum = 0.0;
    for t in rollout {
        let v_next = if t.terminated {
            0.0
        } else {
            critic.row(t.next_obs)?[0]
        };
        let v = critic.row(t.obs)?[0];
        let advantage = t.reward + hp.gamma * v_next - v;
        policy_gradient_step(actor, t.obs, t.action, advantage, hp.alpha)?;
        critic.row_mut(t.obs)?[0] += hp.alpha_critic * advantage;
        adv_sum += advantage;
    }
    Ok(UpdateStats {
        mean_advantage: adv_sum / rollout.len() as f64,
        entries_consumed: rollout.len() as u64,
        ..UpdateStats::default()
    })
}

/// Centralized multi-agent update: the joint signal is the shared team
/// return per step; every agent's actor receives the reinforce-style update
/// weighted by it. Rollouts must be aligned step for step.
pub fn central_marl_update(
    actors: &mut BTreeMap<String, TabularParams>,
    rollouts: &BTreeMap<String, Vec<Transition>>,
    hp: &Hyperparameters,
) -> Result<UpdateStats> {
    if rollouts.is_empty() {
        return Err(Error::InvalidArgument("no rollouts".into()));
    }
    let len = rollouts.values().next().expect("non-empty").len();
    if len == 0 {
        return Err(Error::InvalidArgument("empty rollout".into()));
    }
    for (agent, rollout) in rollouts {
        if rollout.len() != len {
            return Err(Error::InvalidArgument(format!(
                "rollout for agent {agent} has {} steps, expected {len}",
                rollout.len()
            )));
        }
        if !actors.contains_key(agent) {
            return Err(Error::InvalidArgument(format!(
                "no actor registered for agent {agent}"
            )));
        }
    }
    // Team rewards are identical across agents; the shared return comes from
    // the first rollout.
    let rewards: Vec<f64> = rollouts
        .values()
        .next()
        .expect("non-empty")
        .iter()
        .map(|t| t.reward)
        .collect();
    let returns = suffix_returns(&rewards, hp.gamma);
    for (agent, rollout) in rollouts {
        let actor = actors.get_mut(agent).expect("checked above");
        expect_kind(actor, ParamsKind::PolicyLogits, "central_marl_update")?;
        for (t, g) in rollout.iter().zip(&returns) {
            policy_gradient_step(actor, t.obs, t.action, *g, hp.alpha)?;
        }
    }
    Ok(UpdateStats {
        mean_return: returns.iter().sum::<f64>() / returns.len() as f64,
        entries_consumed: (len * rollouts.len()) as u64,
        ..UpdateStats::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::params::evaluate;

    fn hp(gamma: f64, alpha: f64) -> Hyperparameters {
        Hyperparameters {
            gamma,
            alpha,
            alpha_critic: alpha,
            ..Hyperparameters::default()
        }
    }

    fn step(obs: u64, action: u64, reward: f64, next_obs: u64, terminated: bool) -> Transition {
        Transition {
            obs,
            action,
            reward,
            next_obs,
            terminated,
            truncated: false,
            agent_id: None,
        }
    }

    #[test]
    fn reinforce_single_step_matches_closed_form() {
        let mut policy = TabularParams::zeros(ParamsKind::PolicyLogits, 1, 2);
        let traj = Trajectory {
            transitions: vec![step(0, 0, 1.0, 0, true)],
            episode_id: 0,
        };
        let stats = reinforce_update(&mut policy, &traj, &hp(1.0, 1.0)).unwrap();
        assert_eq!(policy.data, vec![0.5, -0.5]);
        assert_eq!(stats.mean_return, 1.0);
        let p = evaluate(&policy, 0).unwrap();
        assert!((p[0] - 0.731_058_578_630_004_9).abs() < 1e-12);
    }

    #[test]
    fn reinforce_zero_return_is_a_no_op() {
        let mut policy = TabularParams::zeros(ParamsKind::PolicyLogits, 2, 3);
        let traj = Trajectory {
            transitions: vec![step(0, 1, 0.0, 1, false), step(1, 2, 0.0, 0, true)],
            episode_id: 0,
        };
        reinforce_update(&mut policy, &traj, &hp(0.99, 0.5)).unwrap();
        assert!(policy.data.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn reinforce_single_action_keeps_softmax_fixed() {
        let mut policy = TabularParams::zeros(ParamsKind::PolicyLogits, 1, 1);
        let traj = Trajectory {
            transitions: vec![step(0, 0, 1.0, 0, true)],
            episode_id: 0,
        };
        reinforce_update(&mut policy, &traj, &hp(1.0, 1.0)).unwrap();
        assert_eq!(evaluate(&policy, 0).unwrap(), vec![1.0]);
    }

    #[test]
    fn reinforce_rejects_empty_trajectory() {
        let mut policy = TabularParams::zeros(ParamsKind::PolicyLogits, 1, 2);
        let traj = Trajectory {
            transitions: vec![],
            episode_id: 0,
        };
        assert!(reinforce_update(&mut policy, &traj, &hp(1.0, 1.0)).is_err());
    }

    #[test]
    fn q_update_terminal_transition() {
        let mut q = TabularParams::zeros(ParamsKind::QTable, 2, 2);
        let stats = q_update(&mut q, &[step(0, 0, 1.0, 1, true)], &hp(0.99, 0.1)).unwrap();
        assert!((stats.mean_td_error - 1.0).abs() < 1e-12);
        assert!((q.row(0).unwrap()[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn q_update_bootstraps_from_max() {
        let mut q = TabularParams::zeros(ParamsKind::QTable, 2, 2);
        q.row_mut(0).unwrap()[0] = 0.5;
        q.row_mut(1).unwrap()[1] = 1.0;
        let stats = q_update(&mut q, &[step(0, 0, 0.0, 1, false)], &hp(0.99, 0.5)).unwrap();
        assert!((stats.mean_td_error - 0.49).abs() < 1e-12);
        assert!((q.row(0).unwrap()[0] - 0.745).abs() < 1e-12);
    }

    #[test]
    fn q_update_fixed_point_unchanged() {
        let mut q = TabularParams::zeros(ParamsKind::QTable, 2, 2);
        q.row_mut(0).unwrap()[0] = 1.0;
        let before = q.data.clone();
        // delta = 1 + 0 - 1 = 0 for this terminal transition.
        q_update(&mut q, &[step(0, 0, 1.0, 1, true)], &hp(0.99, 0.1)).unwrap();
        assert_eq!(q.data, before);
    }

    #[test]
    fn a2c_terminal_step_moves_both_tables() {
        let mut actor = TabularParams::zeros(ParamsKind::PolicyLogits, 1, 2);
        let mut critic = TabularParams::zeros(ParamsKind::VTable, 1, 1);
        let h = hp(0.99, 0.1);
        let stats = a2c_update(&mut actor, &mut critic, &[step(0, 1, 1.0, 0, true)], &h).unwrap();
        assert!((stats.mean_advantage - 1.0).abs() < 1e-12);
        assert!((critic.row(0).unwrap()[0] - h.alpha_critic).abs() < 1e-12);
        let p = evaluate(&actor, 0).unwrap();
        assert!(p[1] > 0.5);
    }

    #[test]
    fn a2c_zero_advantage_is_a_fixed_point() {
        let mut actor = TabularParams::zeros(ParamsKind::PolicyLogits, 2, 2);
        let mut critic = TabularParams::zeros(ParamsKind::VTable, 2, 1);
        critic.row_mut(0).unwrap()[0] = 0.3;
        critic.row_mut(1).unwrap()[0] = 0.3;
        let actor_before = actor.data.clone();
        let critic_before = critic.data.clone();
        a2c_update(&mut actor, &mut critic, &[step(0, 0, 0.0, 1, false)], &hp(1.0, 0.1)).unwrap();
        assert_eq!(actor.data, actor_before);
        assert_eq!(critic.data, critic_before);
    }

    #[test]
    fn a2c_gamma_zero_reduces_to_reward_minus_value() {
        let mut actor = TabularParams::zeros(ParamsKind::PolicyLogits, 1, 2);
        let mut critic = TabularParams::zeros(ParamsKind::VTable, 1, 1);
        critic.row_mut(0).unwrap()[0] = 0.25;
        let stats = a2c_update(&mut actor, &mut critic, &[step(0, 0, 1.0, 0, false)], &hp(0.0, 0.1)).unwrap();
        assert!((stats.mean_advantage - 0.75).abs() < 1e-12);
    }

    fn marl_fixture() -> (BTreeMap<String, TabularParams>, BTreeMap<String, Vec<Transition>>) {
        let mut actors = BTreeMap::new();
        actors.insert("a".to_string(), TabularParams::zeros(ParamsKind::PolicyLogits, 1, 2));
        actors.insert("b".to_string(), TabularParams::zeros(ParamsKind::PolicyLogits, 1, 2));
        let mut rollouts = BTreeMap::new();
        rollouts.insert("a".to_string(), vec![step(0, 1, 1.0, 0, true)]);
        rollouts.insert("b".to_string(), vec![step(0, 1, 1.0, 0, true)]);
        (actors, rollouts)
    }

    #[test]
    fn marl_team_reward_moves_both_actors() {
        let (mut actors, rollouts) = marl_fixture();
        central_marl_update(&mut actors, &rollouts, &hp(1.0, 0.1)).unwrap();
        for actor in actors.values() {
            let p = evaluate(actor, 0).unwrap();
            assert!(p[1] > 0.5);
        }
    }

    #[test]
    fn marl_zero_signal_changes_nothing() {
        let (mut actors, mut rollouts) = marl_fixture();
        for r in rollouts.values_mut() {
            r[0].reward = 0.0;
        }
        central_marl_update(&mut actors, &rollouts, &hp(1.0, 0.1)).unwrap();
        for actor in actors.values() {
            assert!(actor.data.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn marl_misaligned_rollouts_rejected() {
        let (mut actors, mut rollouts) = marl_fixture();
        rollouts.get_mut("b").unwrap().clear();
        assert!(central_marl_update(&mut actors, &rollouts, &hp(1.0, 0.1)).is_err());
    }

    #[test]
    fn marl_symmetry_preserved() {
        // Identical experience and identical initial actors stay identical.
        let (mut actors, rollouts) = marl_fixture();
        for _ in 0..10 {
            central_marl_update(&mut actors, &rollouts, &hp(1.0, 0.1)).unwrap();
        }
        let a = actors.get("a").unwrap();
        let b = actors.get("b").unwrap();
        assert_eq!(a.data, b.data);
    }
}
