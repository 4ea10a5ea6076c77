//! Brute-force dynamic-programming oracle: exact value iteration over a
//! fully enumerated tabular model. Independent of the environment
//! implementations; the built-in models are enumerated here by hand.

use crate::error::{Error, Result};

const MAX_SWEEPS: u64 = 1_000_000;

/// One possible outcome of taking an action: (probability, next state,
/// reward, terminal).
pub type Outcome = (f64, u64, f64, bool);

/// Explicit finite MDP: `outcomes[s][a]` enumerates every outcome of taking
/// action `a` in state `s`. Terminal states have no outgoing value.
#[derive(Debug, Clone)]
pub struct MdpModel {
    pub num_states: u64,
    pub num_actions: u64,
    pub outcomes: Vec<Vec<Vec<Outcome>>>,
    pub terminal: Vec<bool>,
}

impl MdpModel {
    /// Deterministic grid with start at (0,0), absorbing goal, reward 1 on
    /// goal entry, off-grid moves keep position. Actions: 0=up, 1=right,
    /// 2=down, 3=left. State id = row * cols + col.
    pub fn gridworld(rows: u64, cols: u64, goal: (u64, u64)) -> MdpModel {
        let n = rows * cols;
        let goal_id = goal.0 * cols + goal.1;
        let mut outcomes = Vec::with_capacity(n as usize);
        let mut terminal = vec![false; n as usize];
        terminal[goal_id as usize] = true;
        for s in 0..n {
            let (r, c) = (s / cols, s % cols);
            let mut per_action = Vec::with_capacity(4);
            for a in 0..4u64 {
                let (nr, nc) = match a {
                    0 => (r.wrapping_sub(1), c),
                    1 => (r, c + 1),
                    2 => (r + 1, c),
                    _ => (r, c.wrapping_sub(1)),
                };
                let (nr, nc) = if nr < rows && nc < cols { (nr, nc) } else { (r, c) };
                let ns = nr * cols + nc;
                let entered_goal = ns == goal_id && s != goal_id;
                per_action.push(vec![(
                    1.0,
                    ns,
                    if entered_goal { 1.0 } else { 0.0 },
                    entered_goal,
                )]);
            }
            outcomes.push(per_action);
        }
        MdpModel {
            num_states: n,
            num_actions: 4,
            outcomes,
            terminal,
        }
    }

    /// One-state bandit: pulling arm `a` pays 1 with probability `probs[a]`
    /// and the episode terminates.
    pub fn bandit(probs: &[f64]) -> MdpModel {
        let per_action: Vec<Vec<Outcome>> = probs
            .iter()
            .map(|&p| vec![(p, 0, 1.0, true), (1.0 - p, 0, 0.0, true)])
            .collect();
        MdpModel {
            num_states: 1,
            num_actions: probs.len() as u64,
            outcomes: vec![per_action],
            terminal: vec![false],
        }
    }
}

/// Iterates Bellman optimality backups until the max change drops below
/// `tol`. Returns (V*, Q*) with Q* indexed `[state][action]`.
pub fn value_iteration_oracle(
    model: &MdpModel,
    gamma: f64,
    tol: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("gamma {gamma} outside [0, 1]")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let ns = model.num_states as usize;
    let na = model.num_actions as usize;
    let mut v = vec![0.0; ns];
    let mut q = vec![vec![0.0; na]; ns];
    for sweep in 0..MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for s in 0..ns {
            if model.terminal[s] {
                continue;
            }
            let mut best = f64::NEG_INFINITY;
            for (a, q_entry) in q[s].iter_mut().enumerate() {
                let mut qsa = 0.0;
                for &(p, ns_id, r, terminal) in &model.outcomes[s][a] {
                    let bootstrap = if terminal { 0.0 } else { v[ns_id as usize] };
                    qsa += p * (r + gamma * bootstrap);
                }
                *q_entry = qsa;
                best = best.max(qsa);
            }
            max_change = max_change.max((best - v[s]).abs());
            v[s] = best;
        }
        if max_change < tol {
            return Ok((v, q));
        }
        let _ = sweep;
    }
    Err(Error::NoConvergence(MAX_SWEEPS))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gridworld_start_value_has_closed_form() {
        // Manhattan distance from (0,0) to (3,3) is 6; optimal value gamma^5.
        let model = MdpModel::gridworld(4, 4, (3, 3));
        let (v, q) = value_iteration_oracle(&model, 0.99, 1e-10).unwrap();
        let expected = 0.99f64.powi(5);
        assert!((v[0] - expected).abs() < 1e-9, "V*(start)={}", v[0]);
        // State 14 = (3,2); moving right enters the goal.
        assert!((q[14][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bandit_q_star_is_expected_immediate_reward() {
        let model = MdpModel::bandit(&[0.2, 0.8]);
        let (_, q) = value_iteration_oracle(&model, 0.99, 1e-12).unwrap();
        assert!((q[0][0] - 0.2).abs() < 1e-12);
        assert!((q[0][1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        let model = MdpModel::bandit(&[0.5]);
        assert!(value_iteration_oracle(&model, 1.5, 1e-6).is_err());
        assert!(value_iteration_oracle(&model, 0.9, 0.0).is_err());
    }

    #[test]
    fn gridworld_values_decay_with_distance() {
        let model = MdpModel::gridworld(4, 4, (3, 3));
        let (v, _) = value_iteration_oracle(&model, 0.99, 1e-10).unwrap();
        for s in 0..16u64 {
            if s == 15 {
                continue;
            }
            let (r, c) = (s / 4, s % 4);
            let d = (3 - r) + (3 - c);
            let expected = 0.99f64.powi(d as i32 - 1);
            assert!((v[s as usize] - expected).abs() < 1e-9);
        }
    }
}
