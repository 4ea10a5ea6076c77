//! Append-only JSON-lines metrics logger. One record per line, canonical
//! key order, floats at 17 significant digits, so identical runs produce
//! byte-identical log files.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::json;

use crate::canon::to_canonical_string;
use crate::error::{Error, Result};

/// One scalar metric sample.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct LogRecord {
    pub run_id: String,
    pub global_step: u64,
    #[serde(default)]
    pub episode: Option<u64>,
    pub key: String,
    pub value: f64,
}

impl LogRecord {
    /// Canonical line form, keys exactly
    /// {episode, global_step, key, run_id, value}.
    pub fn to_line(&self) -> String {
        to_canonical_string(&json!({
            "episode": self.episode,
            "global_step": self.global_step,
            "key": self.key,
            "run_id": self.run_id,
            "value": self.value,
        }))
    }
}

pub struct JsonlLogger {
    writer: BufWriter<File>,
    path: PathBuf,
}

impl JsonlLogger {
    /// Opens (or creates) the sink in append mode, so a resumed run
    /// continues the same file.
    pub fn open(path: &Path) -> Result<JsonlLogger> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(JsonlLogger {
            writer: BufWriter::new(file),
            path: path.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one record and flushes, so every prefix of the file is valid.
    pub fn log_record(&mut self, record: &LogRecord) -> Result<()> {
        if record.key.is_empty() {
            return Err(Error::InvalidRecord("empty key".into()));
        }
        if !record.value.is_finite() {
            return Err(Error::InvalidRecord(format!(
                "non-finite value for key `{}`",
                record.key
            )));
        }
        let line = record.to_line();
        self.writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.write_all(b"\n"))
            .and_then(|_| self.writer.flush())
            .map_err(|e| Error::Log(format!("write to {}: {e}", self.path.display())))
    }
}
