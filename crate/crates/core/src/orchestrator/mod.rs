//! Training orchestration: configuration, instance placement, experience
//! collection, multi-agent coordination, and the run lifecycle.

pub mod config;

mod collector;
mod coordinator;
mod lifecycle;
mod placement;

pub use collector::{ActorSnapshot, EpisodeEnd, InstanceCollector, RoundCtx, StepEvent};
pub use config::{
    load_config, load_config_value, merge_params, Algorithm, BufferKind, BufferSpec,
    ExperimentConfig, LifecycleStrategy, RewardThreshold, StoppingCriteria,
};
pub use coordinator::{assemble_joint_action, split_experience};
pub use lifecycle::{
    actor_snapshot, check_stop, init_tables, params_at, progress_fraction, run_evaluation,
    run_evaluation_with_mode, run_training, EvalResult, RunContext, RunResult, StopReason,
};
pub use placement::{collect_parallel, plan_placement, PlacementPlan, WorkerSlot};
