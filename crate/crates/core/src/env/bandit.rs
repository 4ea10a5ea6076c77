//! Multi-armed Bernoulli bandit simulator: one dummy state, every episode
//! is a single pull.

use serde::{Deserialize, Serialize};

use crate::core::Space;
use crate::env::adapter::{SimAdapter, StepFragments};
use crate::env::core::RenderInfo;
use crate::env::simulator::{Control, EnvParams, SimTrace, Simulator};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

const MAX_ARMS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BanditState {
    probs: Vec<f64>,
    rng: SplitMix64,
}

#[derive(Debug, Clone)]
pub struct BanditSim {
    state: BanditState,
}

impl BanditSim {
    pub fn new() -> BanditSim {
        BanditSim {
            state: BanditState {
                probs: vec![0.2, 0.8],
                rng: SplitMix64::new(0),
            },
        }
    }

    /// Arm probabilities come from contiguous keys `p0`, `p1`, ...
    /// Default payout probabilities are [0.2, 0.8].
    fn resolve(params: &EnvParams) -> Result<Vec<f64>> {
        let mut probs = Vec::new();
        for i in 0..MAX_ARMS {
            match params.get(&format!("p{i}")) {
                Some(p) => {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::InvalidParams(format!(
                            "p{i} = {p} outside [0, 1]"
                        )));
                    }
                    probs.push(p);
                }
                None => break,
            }
        }
        if probs.is_empty() {
            if params.0.keys().any(|k| k.starts_with('p')) {
                return Err(Error::InvalidParams(
                    "arm probabilities must start at p0 and be contiguous".into(),
                ));
            }
            probs = vec![0.2, 0.8];
        }
        Ok(probs)
    }
}

impl Default for BanditSim {
    fn default() -> Self {
        Self::new()
    }
}

impl Simulator for BanditSim {
    fn id(&self) -> &'static str {
        "bandit"
    }

    fn validate_params(&self, params: &EnvParams) -> Result<()> {
        let probs = Self::resolve(params)?;
        for name in params.0.keys() {
            let ok = (0..probs.len()).any(|i| name == &format!("p{i}"));
            if !ok {
                return Err(Error::InvalidParams(format!("unknown parameter `{name}`")));
            }
        }
        Ok(())
    }

    fn reset(&mut self, seed: Option<u64>, params: &EnvParams) -> Result<SimTrace> {
        self.state.probs = Self::resolve(params)?;
        if let Some(s) = seed {
            self.state.rng = SplitMix64::new(s);
        }
        Ok(SimTrace::default())
    }

    fn advance(&mut self, control: &Control) -> Result<SimTrace> {
        let Control::Pull { arm } = control else {
            return Err(Error::Simulator("bandit accepts Pull controls only".into()));
        };
        let arm = *arm as usize;
        if arm >= self.state.probs.len() {
            return Err(Error::Simulator(format!("arm {arm} out of range")));
        }
        let payout = if self.state.rng.next_f64() < self.state.probs[arm] {
            1.0
        } else {
            0.0
        };
        let mut trace = SimTrace::default();
        trace.payload.insert("arm".into(), arm as f64);
        trace.payload.insert("payout".into(), payout);
        if payout > 0.0 {
            trace.events.insert("win".into());
        }
        Ok(trace)
    }

    fn snapshot(&self) -> Vec<u8> {
        serde_json::to_vec(&self.state).expect("bandit state serializes")
    }

    fn restore(&mut self, bytes: &[u8]) -> Result<()> {
        self.state = serde_json::from_slice(bytes)
            .map_err(|e| Error::Simulator(format!("bad bandit snapshot: {e}")))?;
        Ok(())
    }

    fn spaces(&self) -> (Space, Space) {
        (
            Space::discrete(1).expect("nonzero"),
            Space::discrete(self.state.probs.len() as u64).expect("nonzero"),
        )
    }

    fn render_info(&self) -> RenderInfo {
        RenderInfo::Arms {
            count: self.state.probs.len() as u64,
        }
    }
}

/// Action `a` maps to `pull(a)`; the single observation is always 0 and the
/// episode terminates after one pull.
#[derive(Debug, Clone, Default)]
pub struct BanditAdapter;

impl SimAdapter for BanditAdapter {
    fn control_for(&self, actions: &[u64]) -> Result<Control> {
        Ok(Control::Pull { arm: actions[0] })
    }

    fn extract(&self, trace: &SimTrace, _actions: &[u64]) -> StepFragments {
        StepFragments {
            obs: vec![0],
            rewards: vec![trace.field("payout")],
            terminated: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_mean_tracks_configured_probability() {
        // Law-of-large-numbers check against the configured p.
        let mut sim = BanditSim::new();
        sim.reset(Some(123), &EnvParams::new()).unwrap();
        let n = 100_000;
        for (arm, p) in [(0u64, 0.2), (1u64, 0.8)] {
            let mut total = 0.0;
            for _ in 0..n {
                total += sim.advance(&Control::Pull { arm }).unwrap().field("payout");
            }
            let mean = total / n as f64;
            assert!((mean - p).abs() < 0.01, "arm {arm}: mean {mean}");
        }
    }

    #[test]
    fn snapshot_includes_rng_stream() {
        let mut sim = BanditSim::new();
        sim.reset(Some(5), &EnvParams::new()).unwrap();
        sim.advance(&Control::Pull { arm: 0 }).unwrap();
        let snap = sim.snapshot();
        let a: Vec<f64> = (0..20)
            .map(|_| sim.advance(&Control::Pull { arm: 1 }).unwrap().field("payout"))
            .collect();
        let mut other = BanditSim::new();
        other.restore(&snap).unwrap();
        let b: Vec<f64> = (0..20)
            .map(|_| other.advance(&Control::Pull { arm: 1 }).unwrap().field("payout"))
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn param_validation() {
        let sim = BanditSim::new();
        assert!(sim
            .validate_params(&EnvParams::new().set("p0", 0.5).set("p1", 1.5))
            .is_err());
        assert!(sim.validate_params(&EnvParams::new().set("p1", 0.5)).is_err());
        assert!(sim
            .validate_params(&EnvParams::new().set("p0", 0.3).set("p1", 0.6))
            .is_ok());
    }
}
