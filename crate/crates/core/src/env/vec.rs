//! Vectorized environment execution with reset-next-step autoreset: a
//! finished instance returns its terminal observation, is reset immediately,
//! and the fresh initial observation appears on the following step.

use crate::env::core::{EnvCore, StepResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct VecStepResult {
    pub step: StepResult,
    /// Set when the episode ended this step and the instance was reset; the
    /// next observation comes from the fresh episode.
    pub episode_start_next: bool,
}

pub struct VecEnv {
    envs: Vec<EnvCore>,
}

impl VecEnv {
    pub fn new(envs: Vec<EnvCore>) -> VecEnv {
        VecEnv { envs }
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    /// Resets every instance with its own seed.
    pub fn reset_all(&mut self, seeds: &[Option<u64>]) -> Result<Vec<Vec<u64>>> {
        if seeds.len() != self.envs.len() {
            return Err(Error::InvalidArgument(format!(
                "{} seeds for {} instances",
                seeds.len(),
                self.envs.len()
            )));
        }
        self.envs
            .iter_mut()
            .zip(seeds)
            .map(|(env, &seed)| env.reset(seed, None))
            .collect()
    }

    /// Steps every instance independently; results are returned in instance
    /// order. Finished instances auto-reset before the next `vec_step`.
    pub fn vec_step(&mut self, actions: &[Vec<u64>]) -> Result<Vec<VecStepResult>> {
        if actions.len() != self.envs.len() {
            return Err(Error::InvalidArgument(format!(
                "{} actions for {} instances",
                actions.len(),
                self.envs.len()
            )));
        }
        let mut results = Vec::with_capacity(self.envs.len());
        for (env, action) in self.envs.iter_mut().zip(actions) {
            let step = env.step(action)?;
            let done = step.terminated || step.truncated;
            if done {
                env.reset(None, None)?;
            }
            results.push(VecStepResult {
                step,
                episode_start_next: done,
            });
        }
        Ok(results)
    }

    /// Current observation of one instance (the fresh initial observation
    /// after an autoreset).
    pub fn current_obs(&self, instance: usize) -> Result<&[u64]> {
        self.envs[instance].current_obs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::core::make_env;
    use crate::env::simulator::EnvParams;

    fn venv(n: usize) -> VecEnv {
        let envs = (0..n)
            .map(|_| make_env("gridworld4", &EnvParams::new(), 100).unwrap())
            .collect();
        VecEnv::new(envs)
    }

    #[test]
    fn instances_step_independently() {
        let mut v = venv(2);
        v.reset_all(&[Some(0), Some(1)]).unwrap();
        let results = v.vec_step(&[vec![1], vec![1]]).unwrap();
        for r in &results {
            assert_eq!(r.step.obs, vec![1]);
            assert_eq!(r.step.rewards, vec![0.0]);
        }
    }

    #[test]
    fn autoreset_follows_reset_next_step() {
        let mut v = venv(1);
        v.reset_all(&[Some(0)]).unwrap();
        // Shortest path to the goal.
        for a in [1u64, 1, 1, 2, 2] {
            let r = v.vec_step(&[vec![a]]).unwrap();
            assert!(!r[0].episode_start_next);
        }
        let r = v.vec_step(&[vec![2]]).unwrap();
        assert!(r[0].step.terminated);
        assert_eq!(r[0].step.obs, vec![15], "terminal observation is returned");
        assert!(r[0].episode_start_next);
        // Fresh episode from the start state on the following step.
        assert_eq!(v.current_obs(0).unwrap(), &[0]);
        let r = v.vec_step(&[vec![1]]).unwrap();
        assert_eq!(r[0].step.obs, vec![1]);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let mut v = venv(2);
        v.reset_all(&[Some(0), Some(1)]).unwrap();
        let err = v.vec_step(&[vec![0], vec![0], vec![0]]).unwrap_err();
        assert!(matches!(err, crate::Error::InvalidArgument(_)));
    }
}
