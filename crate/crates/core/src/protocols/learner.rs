use serde::Serialize;

use crate::autodiff::AdamState;
use crate::checkpoint::{Checkpoint, CheckpointMeta};
use crate::config::ExperimentConfig;
use crate::error::{ensure, Result};
use crate::icm::{IcmNets, RewardScale};
use crate::ppo::{max_ratio_deviation, ppo_update, PolicyNet, RolloutBuffer, Transition};
use crate::render::{Observation, Pigment};
use crate::rng::RngStream;
use crate::world::ActionPair;

const OPT_POLICY: &str = "opt.policy";
const OPT_ICM: &str = "opt.icm";
/// Frames per forward pass when scoring a whole buffer.
const CHUNK: usize = 256;

/// One row of the training metrics log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpdateReport {
    pub fish_id: u32,
    pub pigment: Pigment,
    pub env_step: u64,
    pub update: u64,
    pub mean_intrinsic_reward: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub learning_rate: f64,
    pub clip_fraction: f64,
    /// Largest `|ρ − 1|` over the buffer before the first gradient step.
    pub ratio_deviation: f64,
    pub forward_loss: f64,
    pub inverse_loss: f64,
}

/// A fish under training: policy, curiosity module, their optimizers and the rollout in progress.
#[derive(Debug, Clone)]
pub struct Learner {
    pub fish_id: u32,
    pub pigment: Pigment,
    pub seed: u64,
    pub policy: PolicyNet<f32>,
    pub adam: AdamState<f32>,
    pub icm: IcmNets<f32>,
    pub icm_adam: AdamState<f32>,
    pub buffer: RolloutBuffer,
    pub env_step: u64,
    pub updates: u64,
    reward_scale: RewardScale,
}

impl Learner {
    pub fn new(cfg: &ExperimentConfig, fish_id: u32, pigment: Pigment, seed: u64) -> Self {
        let mut init = RngStream::derive(seed, "init", 0);
        let policy = PolicyNet::new(cfg.ppo.hidden_units, cfg.ppo.num_layers, &mut init);
        let icm = IcmNets::new(&cfg.curiosity, &mut init);
        Self {
            fish_id,
            pigment,
            seed,
            adam: AdamState::new(&policy.params),
            icm_adam: AdamState::new(&icm.params),
            policy,
            icm,
            buffer: RolloutBuffer::new(cfg.ppo.buffer_size, cfg.ppo.time_horizon),
            env_step: 0,
            updates: 0,
            reward_scale: RewardScale::default(),
        }
    }

    /// Action-sampling stream for one rearing episode.
    pub fn action_rng(&self, episode: u64) -> RngStream {
        RngStream::derive(self.seed, "act", episode)
    }

    /// Records one transition and closes the segment when the horizon, the
    /// buffer end or the episode end is reached. Episode ends are time limits,
    /// so the segment bootstraps from the value of `next_obs`.
    pub fn record(&mut self, obs: Observation, action: ActionPair, log_prob: f64, value: f64, next_obs: &Observation, done: bool) -> Result<()> {
        self.buffer.push(Transition { obs, action, log_prob, value })?;
        self.env_step += 1;
        if self.buffer.must_close(done) {
            let bootstrap = self.policy.act(next_obs)?.value as f64;
            self.buffer.close_segment(next_obs.clone(), bootstrap, false)?;
        }
        Ok(())
    }

    pub fn ready(&self) -> bool {
        self.buffer.is_full()
    }

    /// Curiosity rewards for the full buffer, then the ICM and PPO updates. Clears the buffer.
    pub fn update(&mut self, cfg: &ExperimentConfig) -> Result<UpdateReport> {
        ensure!(self.buffer.is_full(), Contract, "update before the buffer is full");
        let icm_cfg = &cfg.curiosity;
        let mut rewards = self.icm.rewards(&self.buffer, icm_cfg.strength, CHUNK)?;
        let mean_reward = rewards.iter().sum::<f64>() / rewards.len() as f64;
        if icm_cfg.normalize_rewards {
            rewards.iter().for_each(|&r| self.reward_scale.observe(r));
            let s = self.reward_scale.std();
            rewards.iter_mut().for_each(|r| *r /= s);
        }
        self.buffer.set_rewards(rewards)?;
        let ratio_deviation = max_ratio_deviation(&self.policy, &self.buffer, CHUNK)?;

        let lr = cfg.ppo.lr_at(self.env_step);
        let icm_lr = icm_cfg.learning_rate * lr / cfg.ppo.learning_rate;
        let mut rng = RngStream::derive(self.seed, "update", self.updates);
        let (forward_loss, inverse_loss) =
            self.icm.update(&mut self.icm_adam, &self.buffer, icm_cfg, cfg.ppo.num_epoch, cfg.ppo.batch_size, icm_lr, &mut rng)?;
        let loss = ppo_update(&mut self.policy, &mut self.adam, &mut self.buffer, &cfg.ppo, icm_cfg.gamma, lr, &mut rng)?;
        self.updates += 1;
        Ok(UpdateReport {
            fish_id: self.fish_id,
            pigment: self.pigment,
            env_step: self.env_step,
            update: self.updates,
            mean_intrinsic_reward: mean_reward,
            policy_loss: loss.policy_loss,
            value_loss: loss.value_loss,
            entropy: loss.entropy,
            learning_rate: lr,
            clip_fraction: loss.clip_fraction,
            ratio_deviation,
            forward_loss,
            inverse_loss,
        })
    }

    /// Networks plus optimizer moments; rollout contents are not saved.
    pub fn to_checkpoint(&self, config_hash: u64) -> Checkpoint {
        let mut c = Checkpoint::new(CheckpointMeta {
            fish_id: self.fish_id,
            pigment: self.pigment,
            env_step: self.env_step,
            updates: self.updates,
            seed: self.seed,
            config_hash,
            policy_adam_t: self.adam.t,
            icm_adam_t: self.icm_adam.t,
        });
        c.push_store(&self.policy.params);
        c.push_store(&self.icm.params);
        c.push_adam(OPT_POLICY, &self.policy.params, &self.adam);
        c.push_adam(OPT_ICM, &self.icm.params, &self.icm_adam);
        c
    }

    /// Resumes training from a checkpoint; optimizer moments restart at zero if absent.
    pub fn from_checkpoint(cfg: &ExperimentConfig, ckpt: &Checkpoint) -> Result<Self> {
        let m = &ckpt.meta;
        let mut l = Self::new(cfg, m.fish_id, m.pigment, m.seed);
        ckpt.load_store(&mut l.policy.params)?;
        ckpt.load_store(&mut l.icm.params)?;
        if let Some(a) = ckpt.load_adam(OPT_POLICY, &l.policy.params, m.policy_adam_t)? {
            l.adam = a;
        }
        if let Some(a) = ckpt.load_adam(OPT_ICM, &l.icm.params, m.icm_adam_t)? {
            l.icm_adam = a;
        }
        l.env_step = m.env_step;
        l.updates = m.updates;
        Ok(l)
    }
}

/// Loads only the policy weights of a checkpoint for evaluation.
pub fn load_frozen_policy(cfg: &ExperimentConfig, ckpt: &Checkpoint) -> Result<PolicyNet<f32>> {
    let mut policy = PolicyNet::new(cfg.ppo.hidden_units, cfg.ppo.num_layers, &mut RngStream::new(0));
    ckpt.load_store(&mut policy.params)?;
    Ok(policy)
}
