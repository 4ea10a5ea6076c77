//! Tabular function approximators: policy logits, Q-tables, and V-tables,
//! with action selection and evaluation over them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamsKind {
    PolicyLogits,
    QTable,
    VTable,
}

/// Dense states x actions table (states x 1 for a V-table), row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularParams {
    pub kind: ParamsKind,
    pub states: u64,
    pub actions: u64,
    pub data: Vec<f64>,
}

impl TabularParams {
    /// All-zero initialization: uniform initial policy under softmax,
    /// zero initial value estimates.
    pub fn zeros(kind: ParamsKind, states: u64, actions: u64) -> TabularParams {
        let cols = match kind {
            ParamsKind::VTable => 1,
            _ => actions,
        };
        TabularParams {
            kind,
            states,
            actions: cols,
            data: vec![0.0; (states * cols) as usize],
        }
    }

    pub fn row(&self, state: u64) -> Result<&[f64]> {
        if state >= self.states {
            return Err(Error::InvalidArgument(format!(
                "state {state} outside table with {} states",
                self.states
            )));
        }
        let w = self.actions as usize;
        let s = state as usize;
        Ok(&self.data[s * w..(s + 1) * w])
    }

    pub fn row_mut(&mut self, state: u64) -> Result<&mut [f64]> {
        if state >= self.states {
            return Err(Error::InvalidArgument(format!(
                "state {state} outside table with {} states",
                self.states
            )));
        }
        let w = self.actions as usize;
        let s = state as usize;
        Ok(&mut self.data[s * w..(s + 1) * w])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectMode {
    Explore,
    Exploit,
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Ties break toward the lowest index.
fn argmax(values: &[f64]) -> u64 {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best as u64
}

fn sample_categorical(probs: &[f64], rng: &mut SplitMix64) -> u64 {
    let u = rng.next_f64();
    let mut cum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i as u64;
        }
    }
    probs.len() as u64 - 1
}

/// Selects an action from the approximator.
///
/// Policy logits sample from the softmax when exploring and take the argmax
/// when exploiting. Q-tables are epsilon-greedy when exploring and pure
/// argmax when exploiting. Exploit mode consumes no randomness.
pub fn select_action(
    params: &TabularParams,
    obs: u64,
    rng: &mut SplitMix64,
    mode: SelectMode,
    epsilon: f64,
) -> Result<u64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!(
            "epsilon {epsilon} outside [0, 1]"
        )));
    }
    match params.kind {
        ParamsKind::VTable => Err(Error::UnsupportedApproximator(
            "a critic V-table selects no actions".into(),
        )),
        ParamsKind::PolicyLogits => {
            let row = params.row(obs)?;
            match mode {
                SelectMode::Explore => Ok(sample_categorical(&softmax(row), rng)),
                SelectMode::Exploit => Ok(argmax(row)),
            }
        }
        ParamsKind::QTable => {
            let row = params.row(obs)?;
            match mode {
                SelectMode::Explore => {
                    if rng.next_f64() < epsilon {
                        Ok(rng.gen_range(params.actions))
                    } else {
                        Ok(argmax(row))
                    }
                }
                SelectMode::Exploit => Ok(argmax(row)),
            }
        }
    }
}

/// Evaluates the approximator at a state: softmax probabilities for policy
/// logits, the Q row for a Q-table, the single V(s) entry for a V-table.
pub fn evaluate(params: &TabularParams, obs: u64) -> Result<Vec<f64>> {
    let row = params.row(obs)?;
    Ok(match params.kind {
        ParamsKind::PolicyLogits => softmax(row),
        _ => row.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(kind: ParamsKind, rows: Vec<Vec<f64>>) -> TabularParams {
        let states = rows.len() as u64;
        let actions = rows[0].len() as u64;
        TabularParams {
            kind,
            states,
            actions,
            data: rows.into_iter().flatten().collect(),
        }
    }

    #[test]
    fn q_argmax_with_zero_epsilon() {
        let q = table(ParamsKind::QTable, vec![vec![0.1, 0.9]]);
        let mut rng = SplitMix64::new(0);
        let a = select_action(&q, 0, &mut rng, SelectMode::Explore, 0.0).unwrap();
        assert_eq!(a, 1);
    }

    #[test]
    fn logits_tie_breaks_to_lowest_id() {
        let pi = table(ParamsKind::PolicyLogits, vec![vec![0.0, 0.0]]);
        let mut rng = SplitMix64::new(0);
        let a = select_action(&pi, 0, &mut rng, SelectMode::Exploit, 0.0).unwrap();
        assert_eq!(a, 0);
    }

    #[test]
    fn q_tie_among_leaders_takes_lowest() {
        let q = table(ParamsKind::QTable, vec![vec![0.5, 0.5, 0.2]]);
        let mut rng = SplitMix64::new(0);
        let a = select_action(&q, 0, &mut rng, SelectMode::Explore, 0.0).unwrap();
        assert_eq!(a, 0);
    }

    #[test]
    fn vtable_selects_no_actions() {
        let v = TabularParams::zeros(ParamsKind::VTable, 4, 4);
        let mut rng = SplitMix64::new(0);
        let err = select_action(&v, 0, &mut rng, SelectMode::Exploit, 0.0).unwrap_err();
        assert!(matches!(err, crate::Error::UnsupportedApproximator(_)));
    }

    #[test]
    fn evaluate_examples() {
        let pi = table(ParamsKind::PolicyLogits, vec![vec![0.0, 0.0]]);
        assert_eq!(evaluate(&pi, 0).unwrap(), vec![0.5, 0.5]);

        let pi = table(ParamsKind::PolicyLogits, vec![vec![3f64.ln(), 0.0]]);
        let p = evaluate(&pi, 0).unwrap();
        assert!((p[0] - 0.75).abs() < 1e-12);
        assert!((p[1] - 0.25).abs() < 1e-12);

        let v = table(ParamsKind::VTable, vec![vec![0.7]]);
        assert_eq!(evaluate(&v, 0).unwrap(), vec![0.7]);
    }

    #[test]
    fn exploit_consumes_no_randomness() {
        let q = table(ParamsKind::QTable, vec![vec![0.0, 1.0]]);
        let mut rng = SplitMix64::new(3);
        let before = rng.state();
        select_action(&q, 0, &mut rng, SelectMode::Exploit, 1.0).unwrap();
        assert_eq!(rng.state(), before);
    }

    proptest! {
        #[test]
        fn softmax_is_a_distribution(row in proptest::collection::vec(-30.0f64..30.0, 1..8)) {
            let p = softmax(&row);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }

        #[test]
        fn argmax_invariant_under_positive_scaling(
            row in proptest::collection::vec(-5.0f64..5.0, 2..6),
            scale in 0.1f64..10.0,
        ) {
            let q = table(ParamsKind::QTable, vec![row.clone()]);
            let scaled = table(ParamsKind::QTable, vec![row.iter().map(|v| v * scale).collect()]);
            let mut rng = SplitMix64::new(0);
            let a = select_action(&q, 0, &mut rng, SelectMode::Exploit, 0.0).unwrap();
            let b = select_action(&scaled, 0, &mut rng, SelectMode::Exploit, 0.0).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
