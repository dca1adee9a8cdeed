use super::action::{ActionPair, Move, Turn};

/// Position on the motion plane and heading in degrees, `[0, 360)`.
///
/// Heading 0 faces +z; Forward moves by `(sin h, cos h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentPose {
    pub x: f64,
    pub z: f64,
    pub heading: f64,
}

pub(crate) fn normalize_heading(h: f64) -> f64 {
    let r = h.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs.
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

impl AgentPose {
    pub fn new(x: f64, z: f64, heading: f64) -> Self {
        Self { x, z, heading: normalize_heading(heading) }
    }

    pub fn distance(&self, other: &AgentPose) -> f64 {
        (self.x - other.x).hypot(self.z - other.z)
    }

    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        (self.x - p[0]).hypot(self.z - p[1])
    }
}

/// Per-step motion constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub forward_step: f64,
    pub turn_deg: f64,
    pub phase_step: f64,
}

impl Default for Kinematics {
    fn default() -> Self {
        Self { forward_step: 0.05, turn_deg: 2.0, phase_step: 0.4 }
    }
}

/// Rotation first (Left = +turn), then translation along the new heading.
pub fn apply_action(pose: AgentPose, action: ActionPair, kin: &Kinematics) -> AgentPose {
    let heading = match action.turn {
        Turn::Left => pose.heading + kin.turn_deg,
        Turn::Right => pose.heading - kin.turn_deg,
        Turn::None => pose.heading,
    };
    let heading = normalize_heading(heading);
    match action.movement {
        Move::Stay => AgentPose { heading, ..pose },
        Move::Forward => {
            let h = heading.to_radians();
            AgentPose { x: pose.x + kin.forward_step * h.sin(), z: pose.z + kin.forward_step * h.cos(), heading }
        }
    }
}
