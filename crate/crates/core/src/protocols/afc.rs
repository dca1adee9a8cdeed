use rayon::prelude::*;

use super::controller::Controller;
use crate::config::ExperimentConfig;
use crate::error::{ensure, Result};
use crate::render::{CameraModel, Observation, Pigment};
use crate::rng::RngStream;
use crate::stats::{preference_proportion, Point, Preference};
use crate::world::{AgentPose, WorldState};

pub const SHOAL_SIZE: usize = 11;

/// Eleven stationary fish in rows of 3, 4 and 4 (nearest row first), rows
/// `spacing` apart along the tank axis, centroid exactly at `center`, all facing `facing`.
pub fn shoal_layout(center: Point, spacing: f64, facing: Point) -> Vec<AgentPose> {
    let away = if center[0] >= facing[0] { 1.0 } else { -1.0 };
    let mut pts = Vec::with_capacity(SHOAL_SIZE);
    for (row, n) in [3usize, 4, 4].into_iter().enumerate() {
        for k in 0..n {
            let lateral = (k as f64 - (n - 1) as f64 / 2.0) * spacing;
            pts.push([away * row as f64 * spacing, lateral]);
        }
    }
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / SHOAL_SIZE as f64;
    let cz = pts.iter().map(|p| p[1]).sum::<f64>() / SHOAL_SIZE as f64;
    pts.iter()
        .map(|p| {
            let (x, z) = (center[0] + p[0] - cx, center[1] + p[1] - cz);
            AgentPose::new(x, z, (facing[0] - x).atan2(facing[1] - z).to_degrees())
        })
        .collect()
}

/// Shoal geometry of the choice tank; identical for every trial and pigment assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct AfcLayout {
    pub left_center: Point,
    pub right_center: Point,
    pub left: Vec<AgentPose>,
    pub right: Vec<AgentPose>,
}

pub fn afc_layout(cfg: &ExperimentConfig) -> AfcLayout {
    let w = &cfg.world;
    let (l, r) = ([-w.shoal_offset, 0.0], [w.shoal_offset, 0.0]);
    AfcLayout {
        left_center: l,
        right_center: r,
        left: shoal_layout(l, w.shoal_spacing, [0.0, 0.0]),
        right: shoal_layout(r, w.shoal_spacing, [0.0, 0.0]),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AfcSpec {
    pub trials: usize,
    pub steps: usize,
    pub seed: u64,
    /// Trials stepped together.
    pub batch: usize,
    /// Trials with an index below this keep their full pose record.
    pub keep_poses: usize,
}

impl AfcSpec {
    pub fn from_config(cfg: &ExperimentConfig, seed: u64) -> Self {
        let p = &cfg.protocol;
        Self { trials: p.afc_trials, steps: p.afc_steps, seed, batch: p.eval_batch, keep_poses: p.trajectory_log_trials }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AfcTrial {
    pub trial: usize,
    /// Familiar shoal on the left: even trial indices.
    pub familiar_left: bool,
    pub familiar_center: Point,
    pub novel_center: Point,
    pub preference: Preference,
    /// Focal pose after every step, when kept.
    pub poses: Option<Vec<AgentPose>>,
}

/// Choice tank with the focal fish at index 0, then the left and right shoals.
pub fn afc_world(cfg: &ExperimentConfig, layout: &AfcLayout, pigment: Pigment, familiar_left: bool, steps: usize) -> WorldState {
    let mut w = WorldState::new(cfg.world.choice_tank(), steps, cfg.world.kinematics());
    w.add_agent(pigment);
    let (lp, rp) = if familiar_left { (pigment, pigment.other()) } else { (pigment.other(), pigment) };
    for &p in &layout.left {
        w.add_shoal_fish(lp, p);
    }
    for &p in &layout.right {
        w.add_shoal_fish(rp, p);
    }
    w
}

/// Runs the choice test for one focal fish of `pigment`.
///
/// Trial `i` draws its spawn heading and actions from streams derived from
/// `(spec.seed, i)`, so any trial can be reproduced in isolation.
pub fn run_2afc(cfg: &ExperimentConfig, pigment: Pigment, controller: &dyn Controller, spec: &AfcSpec) -> Result<Vec<AfcTrial>> {
    ensure!(spec.trials >= 1 && spec.steps >= 1 && spec.batch >= 1, Contract, "2AFC needs at least one trial, step and batch slot");
    let layout = afc_layout(cfg);
    let cam = CameraModel::default();
    let starts: Vec<usize> = (0..spec.trials).step_by(spec.batch).collect();
    let batches: Vec<Vec<AfcTrial>> = starts
        .par_iter()
        .map(|&s| run_batch(cfg, &layout, pigment, controller, spec, &cam, s..(s + spec.batch).min(spec.trials)))
        .collect::<Result<_>>()?;
    Ok(batches.into_iter().flatten().collect())
}

fn run_batch(
    cfg: &ExperimentConfig,
    layout: &AfcLayout,
    pigment: Pigment,
    controller: &dyn Controller,
    spec: &AfcSpec,
    cam: &CameraModel,
    trials: std::ops::Range<usize>,
) -> Result<Vec<AfcTrial>> {
    let mut worlds = Vec::with_capacity(trials.len());
    let mut rngs = Vec::with_capacity(trials.len());
    for t in trials.clone() {
        let mut w = afc_world(cfg, layout, pigment, t % 2 == 0, spec.steps);
        w.reset_episode(&mut RngStream::derive(spec.seed, "afc-spawn", t as u64));
        worlds.push(w);
        rngs.push(RngStream::derive(spec.seed, "afc-act", t as u64));
    }
    let mut tracks: Vec<Vec<AgentPose>> = vec![Vec::with_capacity(spec.steps); trials.len()];
    for _ in 0..spec.steps {
        let frames: Vec<Observation> = if controller.needs_frames() { worlds.iter().map(|w| w.observe(0, cam)).collect() } else { Vec::new() };
        let refs: Vec<&Observation> = frames.iter().collect();
        let poses: Vec<AgentPose> = worlds.iter().map(|w| w.fish[0].pose).collect();
        let actions = controller.act(&refs, &poses, &mut rngs)?;
        ensure!(actions.len() == worlds.len(), Contract, "controller returned {} actions for {} trials", actions.len(), worlds.len());
        for ((w, a), track) in worlds.iter_mut().zip(actions).zip(&mut tracks) {
            w.step(&[(0, a)])?;
            track.push(w.fish[0].pose);
        }
    }
    trials
        .zip(tracks)
        .map(|(t, track)| {
            let familiar_left = t % 2 == 0;
            let (familiar_center, novel_center) =
                if familiar_left { (layout.left_center, layout.right_center) } else { (layout.right_center, layout.left_center) };
            let pts: Vec<Point> = track.iter().map(|p| [p.x, p.z]).collect();
            Ok(AfcTrial {
                trial: t,
                familiar_left,
                familiar_center,
                novel_center,
                preference: preference_proportion(&pts, familiar_center, novel_center)?,
                poses: (t < spec.keep_poses).then_some(track),
            })
        })
        .collect()
}
