//! Monitoring and visualization utilities: the JSON-lines metrics logger,
//! the reporter (summaries and learning curves), the renderer, and the
//! frame recorder.

mod logger;
mod recorder;
mod render;
mod report;

pub use logger::{JsonlLogger, LogRecord};
pub use recorder::{parse_ppm, Recorder};
pub use render::{render, Frame, RenderMode};
pub use report::{
    learning_curve, summarize, summarize_file, summary_to_csv, summary_to_table, KeySummary,
    Series,
};
