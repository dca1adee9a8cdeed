use super::pose::AgentPose;

/// Walled swimming area centered on the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Arena {
    /// Circular rearing cup.
    Cup { radius: f64 },
    /// Rectangular tank; `length` runs along x, `width` along z.
    Tank { length: f64, width: f64 },
}

impl Arena {
    /// Projects a pose back inside the walls, inset by `half_length`. Heading is untouched.
    pub fn clamp(&self, pose: AgentPose, half_length: f64) -> AgentPose {
        match *self {
            Arena::Cup { radius } => {
                let lim = (radius - half_length).max(0.0);
                let r = pose.x.hypot(pose.z);
                if r <= lim {
                    pose
                } else {
                    AgentPose { x: pose.x * lim / r, z: pose.z * lim / r, heading: pose.heading }
                }
            }
            Arena::Tank { length, width } => {
                let (lx, lz) = ((length / 2.0 - half_length).max(0.0), (width / 2.0 - half_length).max(0.0));
                AgentPose { x: pose.x.clamp(-lx, lx), z: pose.z.clamp(-lz, lz), heading: pose.heading }
            }
        }
    }

    pub fn contains(&self, pose: &AgentPose, half_length: f64) -> bool {
        const EPS: f64 = 1e-9;
        match *self {
            Arena::Cup { radius } => pose.x.hypot(pose.z) <= radius - half_length + EPS,
            Arena::Tank { length, width } => {
                pose.x.abs() <= length / 2.0 - half_length + EPS && pose.z.abs() <= width / 2.0 - half_length + EPS
            }
        }
    }
}
