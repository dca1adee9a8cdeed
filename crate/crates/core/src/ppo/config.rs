use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LrSchedule {
    Linear,
    Constant,
}

/// Trainer hyperparameters. Key names follow the trainer configuration table;
/// `num_epoch` and `value_loss_coef` are not in it and use common defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub trainer_type: String,
    pub num_layers: usize,
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub learning_rate_schedule: LrSchedule,
    pub batch_size: usize,
    pub buffer_size: usize,
    pub beta: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub num_epoch: usize,
    pub value_loss_coef: f64,
    /// Vector-observation normalization. Observations here are images, so only `false` is accepted.
    pub normalize: bool,
    pub vis_encode_type: String,
    pub max_steps: u64,
    pub time_horizon: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            trainer_type: "ppo".into(),
            num_layers: 3,
            hidden_units: 512,
            learning_rate: 3e-4,
            learning_rate_schedule: LrSchedule::Linear,
            batch_size: 256,
            buffer_size: 2048,
            beta: 0.01,
            epsilon: 0.2,
            lambda: 0.95,
            num_epoch: 3,
            value_loss_coef: 0.5,
            normalize: false,
            vis_encode_type: "simple".into(),
            max_steps: 1_000_000,
            time_horizon: 128,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.trainer_type == "ppo", Config, "ppo.trainer_type must be \"ppo\", got {:?}", self.trainer_type);
        ensure!(self.vis_encode_type == "simple", Config, "ppo.vis_encode_type must be \"simple\", got {:?}", self.vis_encode_type);
        ensure!(!self.normalize, Config, "ppo.normalize has no meaning for image observations; set it to false");
        ensure!(self.num_layers >= 1 && self.hidden_units >= 1, Config, "ppo.num_layers and ppo.hidden_units must be >= 1");
        ensure!(self.learning_rate > 0.0 && self.learning_rate.is_finite(), Config, "ppo.learning_rate must be positive");
        ensure!(self.batch_size >= 1 && self.batch_size <= self.buffer_size, Config, "ppo.batch_size must be in 1..=buffer_size");
        ensure!(self.time_horizon >= 1, Config, "ppo.time_horizon must be >= 1");
        ensure!(self.num_epoch >= 1, Config, "ppo.num_epoch must be >= 1");
        ensure!((0.0..1.0).contains(&self.epsilon), Config, "ppo.epsilon must be in [0, 1)");
        ensure!((0.0..=1.0).contains(&self.lambda), Config, "ppo.lambda must be in [0, 1]");
        ensure!(self.beta >= 0.0 && self.value_loss_coef >= 0.0, Config, "ppo.beta and ppo.value_loss_coef must be >= 0");
        ensure!(self.max_steps >= 1, Config, "ppo.max_steps must be >= 1");
        Ok(())
    }

    /// Learning rate after `step` environment steps.
    pub fn lr_at(&self, step: u64) -> f64 {
        match self.learning_rate_schedule {
            LrSchedule::Constant => self.learning_rate,
            LrSchedule::Linear => self.learning_rate * (1.0 - step as f64 / self.max_steps as f64).max(0.0),
        }
    }
}
