//! Actor-critic network and the clipped-surrogate policy optimizer.

mod buffer;
mod config;
mod gae;
mod policy;
mod update;

pub use buffer::{RolloutBuffer, Segment, Transition};
pub use config::{LrSchedule, PpoConfig};
pub use gae::{compute_gae, normalize_advantages};
pub use policy::{PolicyHeads, PolicyNet, PolicyOutput};
pub use update::{max_ratio_deviation, ppo_update, surrogate_loss, LossReport, SurrogateBatch, SurrogateTerms};
