//! Progress-indexed environment parameter schedule for curriculum learning.

use serde::{Deserialize, Serialize};

use crate::env::EnvParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurriculumStage {
    /// Learning-progress fraction in [0, 1] at which this stage activates.
    pub threshold: f64,
    pub params: EnvParams,
}

/// Ordered stages with strictly increasing thresholds; stage 0 must start
/// at threshold 0 so every progress value matches some stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CurriculumSchedule {
    pub stages: Vec<CurriculumStage>,
}

impl CurriculumSchedule {
    pub fn validate(&self) -> Result<()> {
        let invalid = |message: String| Error::ConfigInvalid {
            path: "curriculum".into(),
            message,
        };
        if self.stages.is_empty() {
            return Err(invalid("at least one stage required".into()));
        }
        if self.stages[0].threshold != 0.0 {
            return Err(invalid("first stage threshold must be 0".into()));
        }
        for pair in self.stages.windows(2) {
            if pair[1].threshold <= pair[0].threshold {
                return Err(invalid("thresholds must be strictly increasing".into()));
            }
        }
        if let Some(last) = self.stages.last() {
            if !(0.0..=1.0).contains(&last.threshold) {
                return Err(invalid("thresholds must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }
}

/// Params of the stage with the greatest threshold <= progress (inclusive
/// boundary). Stage 0 guarantees a match.
pub fn schedule_params(schedule: &CurriculumSchedule, progress: f64) -> Result<&EnvParams> {
    if !(0.0..=1.0).contains(&progress) {
        return Err(Error::InvalidArgument(format!(
            "progress {progress} outside [0, 1]"
        )));
    }
    Ok(schedule
        .stages
        .iter()
        .rev()
        .find(|stage| stage.threshold <= progress)
        .map(|stage| &stage.params)
        .expect("stage 0 matches"))
}
