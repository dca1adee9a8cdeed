use rayon::prelude::*;

use super::controller::Controller;
use crate::config::ExperimentConfig;
use crate::error::{ensure, Result};
use crate::render::{render_view, CameraModel, Observation, Pigment};
use crate::rng::RngStream;
use crate::stats::{mean_distance_matrix, segregation_distances, Point};
use crate::world::{AgentPose, WorldState};

/// One tested fish and the controller that drives it.
pub struct SegSubject<'c> {
    pub fish_id: u32,
    pub pigment: Pigment,
    pub controller: &'c dyn Controller,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegSpec {
    pub trials: usize,
    pub steps: usize,
    pub seed: u64,
    pub batch: usize,
    pub keep_poses: usize,
}

impl SegSpec {
    pub fn from_config(cfg: &ExperimentConfig, seed: u64) -> Self {
        let p = &cfg.protocol;
        Self { trials: p.seg_trials, steps: p.seg_steps, seed, batch: p.eval_batch, keep_poses: p.trajectory_log_trials }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegTrial {
    pub trial: usize,
    /// `(in, out)` mean distances per subject, in subject order.
    pub pairs: Vec<(f64, f64)>,
    /// Time-averaged pairwise distances between subjects.
    pub distances: Vec<Vec<f64>>,
    /// All subject poses after every step, when kept.
    pub poses: Option<Vec<Vec<AgentPose>>>,
}

/// Runs the self-segregation test: every subject swims in one square tank.
///
/// Subjects must split evenly between the two pigments, with at least two of each.
pub fn run_segregation(cfg: &ExperimentConfig, subjects: &[SegSubject<'_>], spec: &SegSpec) -> Result<Vec<SegTrial>> {
    let orange = subjects.iter().filter(|s| s.pigment == Pigment::Orange).count();
    let blue = subjects.len() - orange;
    ensure!(orange == blue && orange >= 2, Config, "segregation needs equal pigment groups of at least 2, got {orange} orange and {blue} blue");
    ensure!(spec.trials >= 1 && spec.steps >= 1 && spec.batch >= 1, Contract, "segregation needs at least one trial, step and batch slot");
    let cam = CameraModel::default();
    let starts: Vec<usize> = (0..spec.trials).step_by(spec.batch).collect();
    let batches: Vec<Vec<SegTrial>> = starts
        .par_iter()
        .map(|&s| run_batch(cfg, subjects, spec, &cam, s..(s + spec.batch).min(spec.trials)))
        .collect::<Result<_>>()?;
    Ok(batches.into_iter().flatten().collect())
}

fn run_batch(cfg: &ExperimentConfig, subjects: &[SegSubject<'_>], spec: &SegSpec, cam: &CameraModel, trials: std::ops::Range<usize>) -> Result<Vec<SegTrial>> {
    let n = subjects.len();
    let pigments: Vec<Pigment> = subjects.iter().map(|s| s.pigment).collect();
    let mut worlds = Vec::with_capacity(trials.len());
    // rngs[k][b]: subject k in trial b.
    let mut rngs: Vec<Vec<RngStream>> = (0..n).map(|_| Vec::with_capacity(trials.len())).collect();
    for t in trials.clone() {
        let mut w = WorldState::new(cfg.world.segregation_tank(), spec.steps, cfg.world.kinematics());
        w.spawn_ring = cfg.world.spawn_ring;
        for &p in &pigments {
            w.add_agent(p);
        }
        w.reset_episode(&mut RngStream::derive(spec.seed, "seg-spawn", t as u64));
        worlds.push(w);
        for (k, r) in rngs.iter_mut().enumerate() {
            r.push(RngStream::derive(spec.seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15), "seg-act", t as u64));
        }
    }
    let mut tracks: Vec<Vec<Vec<Point>>> = vec![Vec::with_capacity(spec.steps); trials.len()];
    let mut kept: Vec<Vec<Vec<AgentPose>>> = vec![Vec::new(); trials.len()];
    for _ in 0..spec.steps {
        let scenes: Vec<_> = worlds.iter().map(WorldState::scene).collect();
        let mut actions = vec![Vec::with_capacity(n); worlds.len()];
        for (k, subject) in subjects.iter().enumerate() {
            let frames: Vec<Observation> =
                if subject.controller.needs_frames() { scenes.iter().map(|s| render_view(s, k, cam)).collect() } else { Vec::new() };
            let refs: Vec<&Observation> = frames.iter().collect();
            let poses: Vec<AgentPose> = worlds.iter().map(|w| w.fish[k].pose).collect();
            let acts = subject.controller.act(&refs, &poses, &mut rngs[k])?;
            ensure!(acts.len() == worlds.len(), Contract, "controller returned {} actions for {} trials", acts.len(), worlds.len());
            for (b, a) in acts.into_iter().enumerate() {
                actions[b].push((k, a));
            }
        }
        for (b, w) in worlds.iter_mut().enumerate() {
            w.step(&actions[b])?;
            tracks[b].push(w.fish.iter().map(|f| [f.pose.x, f.pose.z]).collect());
            if trials.start + b < spec.keep_poses {
                kept[b].push(w.fish.iter().map(|f| f.pose).collect());
            }
        }
    }
    trials
        .zip(tracks.into_iter().zip(kept))
        .map(|(t, (track, poses))| {
            let pairs = (0..n).map(|k| segregation_distances(&track, &pigments, k)).collect::<Result<Vec<_>>>()?;
            Ok(SegTrial { trial: t, pairs, distances: mean_distance_matrix(&track)?, poses: (t < spec.keep_poses).then_some(poses) })
        })
        .collect()
}
