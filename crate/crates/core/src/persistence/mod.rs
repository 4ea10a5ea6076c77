//! Data persistence utilities: deterministic checkpoint save/restore and
//! the curriculum parameter schedule.

mod checkpoint;
mod curriculum;

pub use checkpoint::{
    load_checkpoint, load_checkpoint_file, read_checkpoint_header, save_checkpoint,
    serialize_checkpoint, CheckpointState, InstanceState, LoadMode, CHECKPOINT_VERSION,
};
pub use curriculum::{schedule_params, CurriculumSchedule, CurriculumStage};
