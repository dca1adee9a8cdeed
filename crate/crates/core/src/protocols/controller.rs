use crate::error::{ensure, Result};
use crate::ppo::PolicyNet;
use crate::render::Observation;
use crate::rng::RngStream;
use crate::stats::Point;
use crate::world::{ActionPair, AgentPose, Move, Turn};

/// Chooses actions for one fish across a batch of independent trials.
pub trait Controller: Sync {
    /// Whether `act` reads the rendered frames; scripted controllers skip rendering.
    fn needs_frames(&self) -> bool {
        true
    }

    /// One action per trial. `frames` is empty when `needs_frames` is false.
    fn act(&self, frames: &[&Observation], poses: &[AgentPose], rngs: &mut [RngStream]) -> Result<Vec<ActionPair>>;
}

/// Samples from a frozen policy's action distribution.
pub struct PolicyController<'p>(pub &'p PolicyNet<f32>);

impl Controller for PolicyController<'_> {
    fn act(&self, frames: &[&Observation], _poses: &[AgentPose], rngs: &mut [RngStream]) -> Result<Vec<ActionPair>> {
        ensure!(frames.len() == rngs.len(), Dimension, "{} frames for {} trials", frames.len(), rngs.len());
        let outs = self.0.evaluate(frames)?;
        outs.iter().zip(rngs.iter_mut()).map(|(o, r)| o.sample(r).map(|(a, _)| a)).collect()
    }
}

/// Turns toward a fixed point, then swims to it.
pub struct SeekPoint {
    pub target: Point,
    /// Heading error below which the fish swims straight, degrees.
    pub tolerance_deg: f64,
}

impl SeekPoint {
    pub fn new(target: Point) -> Self {
        Self { target, tolerance_deg: 3.0 }
    }
}

impl Controller for SeekPoint {
    fn needs_frames(&self) -> bool {
        false
    }

    fn act(&self, _frames: &[&Observation], poses: &[AgentPose], _rngs: &mut [RngStream]) -> Result<Vec<ActionPair>> {
        Ok(poses
            .iter()
            .map(|p| {
                let want = (self.target[0] - p.x).atan2(self.target[1] - p.z).to_degrees();
                // Signed error in (-180, 180]; positive means a left (counter-clockwise) turn.
                let err = (want - p.heading + 540.0).rem_euclid(360.0) - 180.0;
                let turn = if err > self.tolerance_deg {
                    Turn::Left
                } else if err < -self.tolerance_deg {
                    Turn::Right
                } else {
                    Turn::None
                };
                ActionPair::new(Move::Forward, turn)
            })
            .collect())
    }
}

/// Never moves.
pub struct Still;

impl Controller for Still {
    fn needs_frames(&self) -> bool {
        false
    }

    fn act(&self, _frames: &[&Observation], poses: &[AgentPose], _rngs: &mut [RngStream]) -> Result<Vec<ActionPair>> {
        Ok(vec![ActionPair::IDLE; poses.len()])
    }
}
