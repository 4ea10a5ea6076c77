//! The agent component group: tabular function approximators, rollout and
//! replay buffers, the four pattern learners, and the dynamic-programming
//! oracle used for verification.

mod buffer;
mod learner;
mod oracle;
mod params;

pub use buffer::{buffer_drain, buffer_push_replay, buffer_push_rollout, buffer_sample, ReplayBuffer, RolloutBuffer};
pub use learner::{
    a2c_update, central_marl_update, q_update, reinforce_update, UpdateStats,
};
pub use oracle::{value_iteration_oracle, MdpModel};
pub use params::{evaluate, select_action, softmax, ParamsKind, SelectMode, TabularParams};
