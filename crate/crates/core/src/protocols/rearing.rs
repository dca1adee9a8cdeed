use rayon::prelude::*;

use super::learner::{Learner, UpdateReport};
use crate::config::{ExperimentConfig, Peers};
use crate::error::{ensure, Result};
use crate::render::{CameraModel, Pigment};
use crate::rng::RngStream;
use crate::world::{ActionPair, WorldState};

/// Progress notifications from [`run_rearing`]; may arrive from several threads.
#[derive(Debug)]
pub enum RearingEvent<'a> {
    Update(&'a UpdateReport),
    /// Periodic or final snapshot of one learner.
    Checkpoint { learner: &'a Learner, last: bool },
}

/// Fresh learners for every fish, orange group first.
pub fn initial_learners(cfg: &ExperimentConfig) -> Result<Vec<Learner>> {
    cfg.validate()?;
    let seeds = cfg.fish_seeds();
    let per = cfg.protocol.fish_per_group;
    Ok(seeds
        .iter()
        .enumerate()
        .map(|(i, &s)| Learner::new(cfg, i as u32, if i < per { Pigment::Orange } else { Pigment::Blue }, s))
        .collect())
}

/// Trains every learner to `ppo.max_steps` environment steps.
///
/// With policy peers, each pigment group shares one cup and all of its
/// members learn; with scripted peers, each learner has its own cup of
/// randomly acting cupmates. Learners may arrive part-trained (resume); all
/// members of a cup must then share the same step count, on an episode boundary.
pub fn run_rearing(cfg: &ExperimentConfig, learners: Vec<Learner>, on_event: &(dyn Fn(RearingEvent<'_>) -> Result<()> + Sync)) -> Result<Vec<Learner>> {
    cfg.validate()?;
    let mut seeds: Vec<u64> = learners.iter().map(|l| l.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    ensure!(seeds.len() == learners.len(), Config, "fish seeds must be distinct");
    let cups: Vec<(Vec<Learner>, usize)> = match cfg.protocol.peers {
        Peers::Policy => {
            let (orange, blue): (Vec<Learner>, Vec<Learner>) = learners.into_iter().partition(|l| l.pigment == Pigment::Orange);
            [orange, blue].into_iter().filter(|g| !g.is_empty()).map(|g| (g, 0)).collect()
        }
        Peers::Scripted => learners.into_iter().map(|l| (vec![l], cfg.protocol.fish_per_group - 1)).collect(),
    };
    let done: Vec<Vec<Learner>> = cups.into_par_iter().map(|(group, peers)| rear_cup(cfg, group, peers, on_event)).collect::<Result<_>>()?;
    let mut all: Vec<Learner> = done.into_iter().flatten().collect();
    all.sort_by_key(|l| l.fish_id);
    Ok(all)
}

fn rear_cup(
    cfg: &ExperimentConfig,
    mut learners: Vec<Learner>,
    peers: usize,
    on_event: &(dyn Fn(RearingEvent<'_>) -> Result<()> + Sync),
) -> Result<Vec<Learner>> {
    let spe = cfg.protocol.steps_per_episode as u64;
    let start = learners[0].env_step;
    let pigment = learners[0].pigment;
    ensure!(learners.iter().all(|l| l.env_step == start && l.pigment == pigment), Contract, "cupmates must share pigment and step count");
    ensure!(start % spe == 0, Contract, "resume point {start} is not an episode boundary");
    let cup_seed = learners[0].seed;
    let mut world = WorldState::new(cfg.world.cup(), spe as usize, cfg.world.kinematics());
    world.spawn_ring = cfg.world.spawn_ring;
    for _ in 0..learners.len() + peers {
        world.add_agent(pigment);
    }
    let agents: Vec<usize> = world.agents().collect();
    let cam = CameraModel::default();
    for l in &mut learners {
        l.buffer.clear();
    }
    for episode in start / spe..cfg.rearing_episodes() {
        world.reset_episode(&mut RngStream::derive(cup_seed, "reset", episode));
        let mut act_rngs: Vec<RngStream> = learners.iter().map(|l| l.action_rng(episode)).collect();
        let mut peer_rng = RngStream::derive(cup_seed, "peers", episode);
        let mut obs = world.observe_agents(&cam);
        loop {
            let mut actions = Vec::with_capacity(agents.len());
            let mut picks = Vec::with_capacity(learners.len());
            for (k, l) in learners.iter().enumerate() {
                let out = l.policy.act(&obs[k])?;
                let (a, lp) = out.sample(&mut act_rngs[k])?;
                actions.push((agents[k], a));
                picks.push((a, lp, out.value as f64));
            }
            for &i in &agents[learners.len()..] {
                actions.push((i, ActionPair::from_index(peer_rng.below(ActionPair::COUNT))));
            }
            let step = world.step_and_observe(&actions, &cam)?;
            let mut frames = std::mem::take(&mut obs).into_iter();
            for (k, l) in learners.iter_mut().enumerate() {
                let (a, lp, v) = picks[k];
                l.record(frames.next().expect("one frame per agent"), a, lp, v, &step.observations[k], step.done)?;
                if l.ready() {
                    let report = l.update(cfg)?;
                    on_event(RearingEvent::Update(&report))?;
                }
            }
            obs = step.observations;
            if step.done {
                break;
            }
        }
        let steps = (episode + 1) * spe;
        let last = episode + 1 == cfg.rearing_episodes();
        if last || steps % cfg.protocol.checkpoint_every == 0 {
            for l in &learners {
                on_event(RearingEvent::Checkpoint { learner: l, last })?;
            }
        }
    }
    Ok(learners)
}
