//! Foundational domain types shared by every other module: spaces,
//! transitions, trajectories, hyperparameters, and run progress, plus the
//! pure return computation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kind of a space. Only discrete spaces exist at desk scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceKind {
    Discrete,
}

/// A finite set of integer ids `0..size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Space {
    pub kind: SpaceKind,
    pub size: u64,
}

impl Space {
    pub fn discrete(size: u64) -> Result<Space> {
        if size == 0 {
            return Err(Error::InvalidArgument("space size must be >= 1".into()));
        }
        Ok(Space {
            kind: SpaceKind::Discrete,
            size,
        })
    }

    pub fn contains(&self, value: u64) -> bool {
        value < self.size
    }
}

/// True iff `value` is a member of `space`.
pub fn space_contains(space: &Space, value: u64) -> bool {
    space.contains(value)
}

/// One agent-environment interaction step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: u64,
    pub action: u64,
    pub reward: f64,
    pub next_obs: u64,
    pub terminated: bool,
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent_id: Option<String>,
}

impl Transition {
    pub fn is_terminal(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// The ordered transitions of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
    pub episode_id: u64,
}

impl Trajectory {
    /// Checks the chaining invariant: consecutive transitions connect via
    /// `next_obs == obs`, and only the final transition may carry an end flag.
    pub fn validate(&self) -> Result<()> {
        for pair in self.transitions.windows(2) {
            if pair[0].next_obs != pair[1].obs {
                return Err(Error::InvalidArgument(format!(
                    "broken trajectory chain: next_obs {} followed by obs {}",
                    pair[0].next_obs, pair[1].obs
                )));
            }
            if pair[0].is_terminal() {
                return Err(Error::InvalidArgument(
                    "transition after episode end".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Learning hyperparameters shared by all algorithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub gamma: f64,
    pub alpha: f64,
    pub alpha_critic: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: u64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            gamma: 0.99,
            alpha: 0.1,
            alpha_critic: 0.1,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 5000,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: &str| {
            Err(Error::ConfigInvalid {
                path: format!("hyperparameters.{path}"),
                message: message.into(),
            })
        };
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma", "must lie in [0, 1]");
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return bad("alpha", "must be finite and non-negative");
        }
        if !self.alpha_critic.is_finite() || self.alpha_critic < 0.0 {
            return bad("alpha_critic", "must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start)
            || !(0.0..=1.0).contains(&self.epsilon_end)
            || self.epsilon_end > self.epsilon_start
        {
            return bad("epsilon_end", "need 0 <= epsilon_end <= epsilon_start <= 1");
        }
        if self.epsilon_decay_steps == 0 {
            return bad("epsilon_decay_steps", "must be >= 1");
        }
        Ok(())
    }

    /// Linear epsilon schedule over global steps, constant after decay.
    pub fn epsilon_at(&self, global_step: u64) -> f64 {
        if global_step >= self.epsilon_decay_steps {
            return self.epsilon_end;
        }
        let frac = global_step as f64 / self.epsilon_decay_steps as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

/// Progress counters for one run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunProgress {
    pub global_step: u64,
    pub episode_count: u64,
    pub fraction_complete: f64,
}

/// Discounted sum of rewards: `sum_k gamma^k * rewards[k]`.
/// The empty sequence returns 0.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!(
            "gamma {gamma} outside [0, 1]"
        )));
    }
    let mut total = 0.0;
    let mut weight = 1.0;
    for &r in rewards {
        total += weight * r;
        weight *= gamma;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn discounted_return_examples() {
        assert_eq!(discounted_return(&[1.0, 1.0, 1.0], 0.5).unwrap(), 1.75);
        assert_eq!(discounted_return(&[], 0.99).unwrap(), 0.0);
        let g = discounted_return(&[0.0, 0.0, 1.0], 0.99).unwrap();
        assert!((g - 0.9801).abs() < 1e-12);
    }

    #[test]
    fn discounted_return_rejects_bad_gamma() {
        assert!(discounted_return(&[1.0], 1.5).is_err());
        assert!(discounted_return(&[1.0], -0.1).is_err());
    }

    #[test]
    fn space_membership() {
        let s = Space::discrete(4).unwrap();
        assert!(space_contains(&s, 3));
        assert!(!space_contains(&s, 4));
        assert!(space_contains(&Space::discrete(1).unwrap(), 0));
        assert!(Space::discrete(0).is_err());
    }

    #[test]
    fn epsilon_schedule_is_linear_then_flat() {
        let hp = Hyperparameters::default();
        assert_eq!(hp.epsilon_at(0), 1.0);
        assert!((hp.epsilon_at(2500) - 0.525).abs() < 1e-12);
        assert_eq!(hp.epsilon_at(5000), 0.05);
        assert_eq!(hp.epsilon_at(50_000), 0.05);
    }

    #[test]
    fn trajectory_rejects_broken_chain() {
        let t = |obs, next_obs, terminal| Transition {
            obs,
            action: 0,
            reward: 0.0,
            next_obs,
            terminated: terminal,
            truncated: false,
            agent_id: None,
        };
        let bad = Trajectory {
            transitions: vec![t(0, 1, false), t(2, 3, false)],
            episode_id: 0,
        };
        assert!(bad.validate().is_err());
        let early_end = Trajectory {
            transitions: vec![t(0, 1, true), t(1, 2, false)],
            episode_id: 0,
        };
        assert!(early_end.validate().is_err());
    }

    fn arbitrary_episode() -> impl Strategy<Value = Trajectory> {
        (1usize..30, 0u64..16).prop_flat_map(|(len, start)| {
            proptest::collection::vec((0u64..16, 0u64..4, -1.0f64..1.0), len).prop_map(
                move |steps| {
                    let mut obs = start;
                    let n = steps.len();
                    let transitions = steps
                        .into_iter()
                        .enumerate()
                        .map(|(i, (next_obs, action, reward))| {
                            let t = Transition {
                                obs,
                                action,
                                reward,
                                next_obs,
                                terminated: i == n - 1,
                                truncated: false,
                                agent_id: None,
                            };
                            obs = next_obs;
                            t
                        })
                        .collect();
                    Trajectory {
                        transitions,
                        episode_id: 0,
                    }
                },
            )
        })
    }

    proptest! {
        #[test]
        fn generated_episodes_satisfy_chaining(traj in arbitrary_episode()) {
            prop_assert!(traj.validate().is_ok());
        }

        #[test]
        fn gamma_zero_keeps_only_immediate_reward(
            rewards in proptest::collection::vec(-10.0f64..10.0, 1..20)
        ) {
            let g = discounted_return(&rewards, 0.0).unwrap();
            prop_assert_eq!(g, rewards[0]);
        }

        #[test]
        fn return_is_linear_in_rewards(
            rewards in proptest::collection::vec(-10.0f64..10.0, 0..20),
            scale in -4.0f64..4.0,
            gamma in 0.0f64..=1.0,
        ) {
            let scaled: Vec<f64> = rewards.iter().map(|r| scale * r).collect();
            let lhs = discounted_return(&scaled, gamma).unwrap();
            let rhs = scale * discounted_return(&rewards, gamma).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
        }
    }
}
