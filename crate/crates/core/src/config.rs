//! Experiment configuration: one TOML file with `[ppo]`, `[curiosity]`,
//! `[world]` and `[protocol]` sections. Every key has a default, so an empty
//! file is the reference configuration; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ensure, Error, Result};
use crate::icm::IcmConfig;
use crate::ppo::PpoConfig;
use crate::world::{Arena, Kinematics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub forward_step: f64,
    pub turn_deg: f64,
    /// Tail animation advance per step, radians.
    pub phase_step: f64,
    pub cup_radius: f64,
    pub tank_length: f64,
    pub tank_width: f64,
    /// Shoal centers sit at `(±shoal_offset, 0)`.
    pub shoal_offset: f64,
    pub shoal_spacing: f64,
    /// Side of the square self-segregation arena.
    pub segregation_size: f64,
    /// Ring radius for multi-fish spawns.
    pub spawn_ring: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            forward_step: 0.05,
            turn_deg: 2.0,
            phase_step: 0.4,
            cup_radius: 5.0,
            tank_length: 30.0,
            tank_width: 10.0,
            shoal_offset: 12.0,
            shoal_spacing: 1.5,
            segregation_size: 14.0,
            spawn_ring: 1.0,
        }
    }
}

impl WorldConfig {
    pub fn kinematics(&self) -> Kinematics {
        Kinematics { forward_step: self.forward_step, turn_deg: self.turn_deg, phase_step: self.phase_step }
    }

    pub fn cup(&self) -> Arena {
        Arena::Cup { radius: self.cup_radius }
    }

    pub fn choice_tank(&self) -> Arena {
        Arena::Tank { length: self.tank_length, width: self.tank_width }
    }

    pub fn segregation_tank(&self) -> Arena {
        Arena::Tank { length: self.segregation_size, width: self.segregation_size }
    }
}

/// How rearing cupmates behave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Peers {
    /// Every cupmate is a learner.
    Policy,
    /// Each learner is reared alone with same-pigment cupmates that act uniformly at random.
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Base seed; per-fish seeds derive from it unless `fish_seeds` is given.
    pub seed: u64,
    pub fish_per_group: usize,
    /// Explicit per-fish seeds, orange group first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fish_seeds: Option<Vec<u64>>,
    pub steps_per_episode: usize,
    pub checkpoint_every: u64,
    pub peers: Peers,
    pub afc_trials: usize,
    pub afc_steps: usize,
    pub seg_trials: usize,
    pub seg_steps: usize,
    /// Trials whose full trajectories are written to CSV.
    pub trajectory_log_trials: usize,
    /// Trials stepped together so their frames share one network pass.
    pub eval_batch: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            fish_per_group: 4,
            fish_seeds: None,
            steps_per_episode: 1000,
            checkpoint_every: 100_000,
            peers: Peers::Policy,
            afc_trials: 1000,
            afc_steps: 3000,
            seg_trials: 1000,
            seg_steps: 3000,
            trajectory_log_trials: 10,
            eval_batch: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ppo: PpoConfig,
    pub curiosity: IcmConfig,
    pub world: WorldConfig,
    pub protocol: ProtocolConfig,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 8 bytes of the SHA-256 of the canonical serialization.
    pub fn hash(&self) -> u64 {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }

    /// Hash of the settings that shape training: every section except the
    /// evaluation-only protocol keys. Stamped into checkpoints.
    pub fn training_hash(&self) -> u64 {
        let p = &self.protocol;
        let mut stripped = self.clone();
        stripped.protocol = ProtocolConfig {
            seed: p.seed,
            fish_per_group: p.fish_per_group,
            fish_seeds: p.fish_seeds.clone(),
            steps_per_episode: p.steps_per_episode,
            checkpoint_every: p.checkpoint_every,
            peers: p.peers,
            ..ProtocolConfig::default()
        };
        stripped.hash()
    }

    /// Rearing episodes per fish; `max_steps` must be a whole number of episodes.
    pub fn rearing_episodes(&self) -> u64 {
        self.ppo.max_steps / self.protocol.steps_per_episode as u64
    }

    pub fn fish_count(&self) -> usize {
        2 * self.protocol.fish_per_group
    }

    /// One seed per fish, orange group first.
    pub fn fish_seeds(&self) -> Vec<u64> {
        match &self.protocol.fish_seeds {
            Some(s) => s.clone(),
            None => (0..self.fish_count() as u64).map(|i| self.protocol.seed.wrapping_mul(1000).wrapping_add(i)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ppo.validate()?;
        self.curiosity.validate()?;
        let w = &self.world;
        let p = &self.protocol;
        let body = crate::render::FishBody::new(crate::render::Pigment::Orange);
        let half = body.half_length();
        ensure!(w.forward_step >= 0.0 && w.turn_deg >= 0.0, Config, "world.forward_step and world.turn_deg must be >= 0");
        ensure!(w.cup_radius > body.length, Config, "world.cup_radius must exceed the fish length");
        ensure!(w.tank_length > 2.0 * w.shoal_offset, Config, "world.tank_length must exceed twice world.shoal_offset");
        ensure!(w.tank_width > 2.0 * half && w.segregation_size > 2.0 * half, Config, "tank sides must exceed the fish length");
        ensure!(w.spawn_ring >= 0.0 && w.shoal_spacing > 0.0, Config, "world.spawn_ring and world.shoal_spacing must be positive");
        ensure!(p.fish_per_group >= 1, Config, "protocol.fish_per_group must be >= 1");
        ensure!(p.steps_per_episode >= 1, Config, "protocol.steps_per_episode must be >= 1");
        ensure!(
            self.ppo.max_steps % p.steps_per_episode as u64 == 0,
            Config,
            "ppo.max_steps ({}) must be a multiple of protocol.steps_per_episode ({})",
            self.ppo.max_steps,
            p.steps_per_episode
        );
        ensure!(
            p.checkpoint_every >= 1 && p.checkpoint_every % p.steps_per_episode as u64 == 0,
            Config,
            "protocol.checkpoint_every ({}) must be a positive multiple of protocol.steps_per_episode ({})",
            p.checkpoint_every,
            p.steps_per_episode
        );
        ensure!(p.afc_trials >= 1 && p.afc_steps >= 1 && p.seg_trials >= 1 && p.seg_steps >= 1, Config, "trial counts and lengths must be >= 1");
        ensure!(p.eval_batch >= 1, Config, "protocol.eval_batch must be >= 1");
        let seeds = self.fish_seeds();
        ensure!(seeds.len() == self.fish_count(), Config, "protocol.fish_seeds needs {} entries, got {}", self.fish_count(), seeds.len());
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        ensure!(sorted.len() == seeds.len(), Config, "protocol.fish_seeds contains a repeated seed");
        Ok(())
    }
}
