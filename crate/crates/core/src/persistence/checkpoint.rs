//! Checkpoint save/restore. The file is a single canonical JSON document
//! (sorted keys, 17-significant-digit floats) with extension `.ckpt.json`,
//! self-describing via its `version` and `config_digest` fields, written
//! atomically via temp-file-plus-rename.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::{ReplayBuffer, TabularParams};
use crate::canon::to_canonical_string;
use crate::core::Transition;
use crate::env::EnvSnapshot;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u64 = 1;

/// Per-environment-instance collection state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceState {
    pub env: EnvSnapshot,
    /// SplitMix64 state word of the instance's action-selection stream.
    pub action_rng: u64,
    pub episode_return: f64,
    pub episode_undiscounted: f64,
    pub episode_length: u64,
    /// Current gamma^t factor within the episode.
    pub discount: f64,
    /// Running TD-error sum/count of the unfinished episode (Q-learning).
    pub td_sum: f64,
    pub td_count: u64,
    /// In-flight per-agent rollouts of the unfinished episode.
    pub rollouts: BTreeMap<String, Vec<Transition>>,
}

/// Complete serialized experiment state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointState {
    pub version: u64,
    pub config_digest: String,
    /// Named RNG algorithm whose state words are stored below.
    pub rng_algorithm: String,
    pub global_step: u64,
    pub episode_count: u64,
    pub tables: BTreeMap<String, TabularParams>,
    pub replay: Option<ReplayBuffer>,
    /// Learner-side batch-sampling stream state.
    pub sample_rng: Option<u64>,
    pub instances: Vec<InstanceState>,
    /// Last completed episode returns, newest last (stop-criterion window).
    pub recent_returns: Vec<f64>,
    pub curriculum_progress: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    /// Restore everything; the checkpoint digest must match the resuming
    /// config.
    Resume,
    /// Restore approximator tables only; digest check skipped.
    Transfer,
}

/// Canonical byte form. Identical states produce identical bytes.
pub fn serialize_checkpoint(state: &CheckpointState) -> Result<String> {
    let value = serde_json::to_value(state)
        .map_err(|e| Error::Persistence(format!("serialize checkpoint: {e}")))?;
    Ok(to_canonical_string(&value) + "\n")
}

/// Writes the checkpoint atomically: the target path either keeps its old
/// content or holds the complete new document, never a partial write.
pub fn save_checkpoint(state: &CheckpointState, path: &Path) -> Result<()> {
    let text = serialize_checkpoint(state)?;
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text.as_bytes()).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Reads `version` and `config_digest` without deserializing the tables.
pub fn read_checkpoint_header(text: &str) -> Result<(u64, String)> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::Persistence(format!("corrupt checkpoint: {e}")))?;
    let version = value
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Persistence("missing version field".into()))?;
    let digest = value
        .get("config_digest")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::Persistence("missing config_digest field".into()))?
        .to_string();
    Ok((version, digest))
}

/// Parses a checkpoint document. `expected_digest` is the resuming config's
/// digest; it is checked in resume mode only.
pub fn load_checkpoint(
    text: &str,
    mode: LoadMode,
    expected_digest: &str,
) -> Result<CheckpointState> {
    let (version, digest) = read_checkpoint_header(text)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    if mode == LoadMode::Resume && digest != expected_digest {
        return Err(Error::ConfigMismatch);
    }
    serde_json::from_str(text).map_err(|e| Error::Persistence(format!("corrupt checkpoint: {e}")))
}

pub fn load_checkpoint_file(
    path: &Path,
    mode: LoadMode,
    expected_digest: &str,
) -> Result<CheckpointState> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_checkpoint(&text, mode, expected_digest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::ParamsKind;
    use crate::env::{make_env, EnvParams};

    fn sample_state() -> CheckpointState {
        let mut env = make_env("gridworld4", &EnvParams::new(), 100).unwrap();
        env.reset(Some(0), None).unwrap();
        env.step(&[1]).unwrap();
        let mut tables = BTreeMap::new();
        tables.insert(
            "default".to_string(),
            TabularParams::zeros(ParamsKind::QTable, 16, 4),
        );
        let mut replay = ReplayBuffer::new(8).unwrap();
        replay.push(Transition {
            obs: 0,
            action: 1,
            reward: 0.0,
            next_obs: 1,
            terminated: false,
            truncated: false,
            agent_id: None,
        });
        CheckpointState {
            version: CHECKPOINT_VERSION,
            config_digest: "abc123".into(),
            rng_algorithm: "splitmix64".into(),
            global_step: 1,
            episode_count: 0,
            tables,
            replay: Some(replay),
            sample_rng: Some(42),
            instances: vec![InstanceState {
                env: env.snapshot(),
                action_rng: 7,
                episode_return: 0.0,
                episode_undiscounted: 0.0,
                episode_length: 1,
                discount: 0.99,
                td_sum: 0.0,
                td_count: 0,
                rollouts: BTreeMap::new(),
            }],
            recent_returns: vec![0.5, 1.0],
            curriculum_progress: 0.25,
        }
    }

    #[test]
    fn round_trip_is_field_for_field() {
        let state = sample_state();
        let text = serialize_checkpoint(&state).unwrap();
        let back = load_checkpoint(&text, LoadMode::Resume, "abc123").unwrap();
        assert_eq!(state, back);
    }

    #[test]
    fn serialization_is_byte_stable() {
        let state = sample_state();
        assert_eq!(
            serialize_checkpoint(&state).unwrap(),
            serialize_checkpoint(&state).unwrap()
        );
    }

    #[test]
    fn digest_mismatch_rejected_in_resume_mode_only() {
        let text = serialize_checkpoint(&sample_state()).unwrap();
        assert!(matches!(
            load_checkpoint(&text, LoadMode::Resume, "other"),
            Err(Error::ConfigMismatch)
        ));
        assert!(load_checkpoint(&text, LoadMode::Transfer, "other").is_ok());
    }

    #[test]
    fn version_mismatch_rejected() {
        let mut state = sample_state();
        state.version = 99;
        let text = serialize_checkpoint(&state).unwrap();
        assert!(matches!(
            load_checkpoint(&text, LoadMode::Resume, "abc123"),
            Err(Error::VersionMismatch { found: 99, .. })
        ));
    }

    #[test]
    fn corrupt_stream_is_a_persistence_error() {
        let text = serialize_checkpoint(&sample_state()).unwrap();
        let short = &text[..text.len() / 2];
        assert!(matches!(
            load_checkpoint(short, LoadMode::Resume, "abc123"),
            Err(Error::Persistence(_))
        ));
    }

    #[test]
    fn header_readable_without_full_parse() {
        let text = serialize_checkpoint(&sample_state()).unwrap();
        let (version, digest) = read_checkpoint_header(&text).unwrap();
        assert_eq!(version, CHECKPOINT_VERSION);
        assert_eq!(digest, "abc123");
    }

    #[test]
    fn save_is_atomic_and_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.ckpt.json");
        save_checkpoint(&sample_state(), &path).unwrap();
        assert!(path.exists());
        let leftovers: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| n.ends_with(".tmp"))
            .collect();
        assert!(leftovers.is_empty());
    }
}
