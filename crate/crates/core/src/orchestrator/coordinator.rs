//! Multi-agent coordination: joint action assembly and per-agent experience
//! splitting.

use std::collections::BTreeMap;

use crate::core::Transition;
use crate::env::StepResult;
use crate::error::{Error, Result};

/// Orders per-agent action choices into the environment's joint action
/// vector. Every agent must be present.
pub fn assemble_joint_action(
    agent_ids: &[String],
    per_agent: &BTreeMap<String, u64>,
) -> Result<Vec<u64>> {
    agent_ids
        .iter()
        .map(|id| {
            per_agent
                .get(id)
                .copied()
                .ok_or_else(|| Error::MissingAgent(id.clone()))
        })
        .collect()
}

/// Splits a joint step result into one transition per agent. `agent_id` is
/// set only in the multi-agent case.
pub fn split_experience(
    agent_ids: &[String],
    prev_obs: &[u64],
    joint_action: &[u64],
    result: &StepResult,
) -> BTreeMap<String, Transition> {
    let multi = agent_ids.len() > 1;
    agent_ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            (
                id.clone(),
                Transition {
                    obs: prev_obs[i],
                    action: joint_action[i],
                    reward: result.rewards[i],
                    next_obs: result.obs[i],
                    terminated: result.terminated,
                    truncated: result.truncated,
                    agent_id: multi.then(|| id.clone()),
                },
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agents() -> Vec<String> {
        vec!["agent_0".to_string(), "agent_1".to_string()]
    }

    #[test]
    fn joint_action_follows_agent_order() {
        let mut per_agent = BTreeMap::new();
        per_agent.insert("agent_1".to_string(), 0);
        per_agent.insert("agent_0".to_string(), 1);
        assert_eq!(
            assemble_joint_action(&agents(), &per_agent).unwrap(),
            vec![1, 0]
        );
    }

    #[test]
    fn missing_agent_is_an_error() {
        let mut per_agent = BTreeMap::new();
        per_agent.insert("agent_0".to_string(), 1);
        assert!(matches!(
            assemble_joint_action(&agents(), &per_agent),
            Err(Error::MissingAgent(a)) if a == "agent_1"
        ));
    }

    #[test]
    fn split_assigns_per_agent_fields() {
        let result = StepResult {
            obs: vec![0, 0],
            rewards: vec![1.0, 1.0],
            terminated: true,
            truncated: false,
        };
        let split = split_experience(&agents(), &[0, 0], &[1, 1], &result);
        assert_eq!(split.len(), 2);
        let t = &split["agent_1"];
        assert_eq!(t.action, 1);
        assert_eq!(t.reward, 1.0);
        assert!(t.terminated);
        assert_eq!(t.agent_id.as_deref(), Some("agent_1"));
    }

    #[test]
    fn single_agent_split_omits_agent_id() {
        let result = StepResult {
            obs: vec![4],
            rewards: vec![0.0],
            terminated: false,
            truncated: false,
        };
        let split = split_experience(&["agent_0".to_string()], &[0], &[2], &result);
        assert_eq!(split["agent_0"].agent_id, None);
        assert_eq!(split["agent_0"].next_obs, 4);
    }
}
