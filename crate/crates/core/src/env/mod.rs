//! The environment component group: an environment core routing actions
//! through a simulator adapter to pluggable simulators, plus vectorized
//! execution with autoreset.

mod adapter;
mod bandit;
mod core;
mod gridworld;
mod matrix_game;
mod simulator;
mod vec;

pub use adapter::{sim_step_via_adapter, SimAdapter, StepFragments};
pub use bandit::{BanditAdapter, BanditSim};
pub use core::{make_env, EnvCore, EnvSnapshot, RenderInfo, StepResult};
pub use gridworld::{GridWorldAdapter, GridWorldSim};
pub use matrix_game::{MatrixGameAdapter, MatrixGameSim};
pub use simulator::{Control, EnvParams, SimTrace, Simulator};
pub use vec::{VecEnv, VecStepResult};
