//! Planar tank simulation: discrete fish kinematics, arenas and episode stepping.

mod action;
mod arena;
mod pose;
mod state;
mod trajectory;

pub use action::{ActionPair, Move, Turn};
pub use arena::Arena;
pub use pose::{apply_action, AgentPose, Kinematics};
pub use state::{Fish, Role, StepOutput, WorldState};
pub use trajectory::{read_trajectory, TrajectoryRow, TrajectoryWriter};
