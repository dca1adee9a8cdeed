use std::f64::consts::TAU;

use super::action::ActionPair;
use super::arena::Arena;
use super::pose::{apply_action, AgentPose, Kinematics};
use crate::error::{ensure, Result};
use crate::render::{render_view, CameraModel, FishBody, Observation, Pigment, SceneFish, SceneGraph};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Moves according to the actions passed to [`WorldState::step`].
    Agent,
    /// Scripted shoal member pinned to its home pose; only its tail animates.
    Shoal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fish {
    pub body: FishBody,
    pub pose: AgentPose,
    pub phase: f64,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub arena: Arena,
    pub fish: Vec<Fish>,
    pub step: usize,
    pub episode_len: usize,
    pub kinematics: Kinematics,
    /// Radius of the ring agents spawn on when more than one is present.
    pub spawn_ring: f64,
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub done: bool,
    /// Fresh frames for the agents, in agent order.
    pub observations: Vec<Observation>,
}

impl WorldState {
    pub fn new(arena: Arena, episode_len: usize, kinematics: Kinematics) -> Self {
        Self { arena, fish: Vec::new(), step: 0, episode_len, kinematics, spawn_ring: 1.0 }
    }

    pub fn add_agent(&mut self, pigment: Pigment) -> usize {
        self.fish.push(Fish { body: FishBody::new(pigment), pose: AgentPose::new(0.0, 0.0, 0.0), phase: 0.0, role: Role::Agent });
        self.fish.len() - 1
    }

    pub fn add_shoal_fish(&mut self, pigment: Pigment, pose: AgentPose) -> usize {
        self.fish.push(Fish { body: FishBody::new(pigment), pose, phase: 0.0, role: Role::Shoal });
        self.fish.len() - 1
    }

    pub fn agents(&self) -> impl Iterator<Item = usize> + '_ {
        self.fish.iter().enumerate().filter(|(_, f)| f.role == Role::Agent).map(|(i, _)| i)
    }

    pub fn agent_count(&self) -> usize {
        self.agents().count()
    }

    pub fn scene(&self) -> SceneGraph {
        SceneGraph {
            arena: self.arena,
            fish: self.fish.iter().map(|f| SceneFish { body: f.body, pose: f.pose, phase: f.phase }).collect(),
        }
    }

    pub fn observe(&self, fish: usize, cam: &CameraModel) -> Observation {
        render_view(&self.scene(), fish, cam)
    }

    pub fn observe_agents(&self, cam: &CameraModel) -> Vec<Observation> {
        let scene = self.scene();
        self.agents().map(|i| render_view(&scene, i, cam)).collect()
    }

    /// New episode: a lone agent starts exactly at the center, several agents
    /// start evenly spaced on a small ring with a random rotation; every agent
    /// gets an independent uniform heading. Shoal fish keep their poses.
    pub fn reset_episode(&mut self, rng: &mut RngStream) {
        let agents: Vec<usize> = self.agents().collect();
        let n = agents.len();
        let rot = if n > 1 { rng.uniform() * TAU } else { 0.0 };
        for (k, &i) in agents.iter().enumerate() {
            let heading = rng.uniform_range(0.0, 360.0);
            let (x, z) = if n > 1 {
                let a = rot + TAU * k as f64 / n as f64;
                (self.spawn_ring * a.cos(), self.spawn_ring * a.sin())
            } else {
                (0.0, 0.0)
            };
            self.fish[i].pose = self.arena.clamp(AgentPose::new(x, z, heading), self.fish[i].body.half_length());
        }
        for f in &mut self.fish {
            f.phase = 0.0;
        }
        self.step = 0;
    }

    /// Simultaneous update of every agent from the pre-step snapshot.
    ///
    /// `actions` pairs fish indices with actions; order does not matter but
    /// every agent must appear exactly once.
    pub fn step(&mut self, actions: &[(usize, ActionPair)]) -> Result<bool> {
        let n_agents = self.agent_count();
        ensure!(actions.len() == n_agents, Contract, "expected {n_agents} actions, got {}", actions.len());
        let mut chosen: Vec<Option<ActionPair>> = vec![None; self.fish.len()];
        for &(i, a) in actions {
            ensure!(i < self.fish.len() && self.fish[i].role == Role::Agent, Contract, "fish {i} is not an agent");
            ensure!(chosen[i].is_none(), Contract, "duplicate action for fish {i}");
            chosen[i] = Some(a);
        }
        ensure!(self.step < self.episode_len, Contract, "episode already finished");
        let before: Vec<AgentPose> = self.fish.iter().map(|f| f.pose).collect();
        for (i, f) in self.fish.iter_mut().enumerate() {
            if let Some(a) = chosen[i] {
                f.pose = self.arena.clamp(apply_action(before[i], a, &self.kinematics), f.body.half_length());
            }
            f.phase = (f.phase + self.kinematics.phase_step) % TAU;
        }
        self.step += 1;
        Ok(self.step >= self.episode_len)
    }

    pub fn step_and_observe(&mut self, actions: &[(usize, ActionPair)], cam: &CameraModel) -> Result<StepOutput> {
        let done = self.step(actions)?;
        Ok(StepOutput { done, observations: self.observe_agents(cam) })
    }
}
