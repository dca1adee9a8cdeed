use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::world::AgentPose;

/// Peak tail yaw of the swimming animation.
pub const TAIL_AMPLITUDE_DEG: f64 = 20.0;

const RINGS: usize = 6;
const SECTORS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pigment {
    Orange,
    Blue,
}

impl Pigment {
    pub fn color(self) -> [f32; 3] {
        match self {
            Pigment::Orange => [1.0, 0.5, 0.1],
            Pigment::Blue => [0.1, 0.15, 1.0],
        }
    }

    pub fn other(self) -> Self {
        match self {
            Pigment::Orange => Pigment::Blue,
            Pigment::Blue => Pigment::Orange,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pigment::Orange => "orange",
            Pigment::Blue => "blue",
        }
    }
}

impl fmt::Display for Pigment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pigment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "orange" => Ok(Pigment::Orange),
            "blue" => Ok(Pigment::Blue),
            other => Err(Error::Data(format!("unknown pigment {other:?}"))),
        }
    }
}

/// Body dimensions and color of one fish.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FishBody {
    pub length: f64,
    pub height: f64,
    pub width: f64,
    pub pigment: Pigment,
}

impl FishBody {
    pub fn new(pigment: Pigment) -> Self {
        Self { length: 1.2, height: 0.7, width: 0.3, pigment }
    }

    pub fn half_length(&self) -> f64 {
        self.length / 2.0
    }

    /// Triangles in body coordinates `(lateral, up, forward)`, origin on the floor under the body center.
    pub(crate) fn local_triangles(&self, tail_yaw_deg: f64) -> Vec<[[f64; 3]; 3]> {
        let (a, b, c) = (self.length / 2.0, self.height / 2.0, self.width / 2.0);
        let point = |ring: usize, sector: usize| -> [f64; 3] {
            // ring 0 is the snout, ring RINGS the tail end.
            let theta = PI * ring as f64 / RINGS as f64;
            let phi = 2.0 * PI * sector as f64 / SECTORS as f64;
            let r = theta.sin();
            [c * r * phi.cos(), b + b * r * phi.sin(), a * theta.cos()]
        };
        let mut tris = Vec::with_capacity(2 * RINGS * SECTORS + 1);
        for ring in 0..RINGS {
            for s in 0..SECTORS {
                let s1 = (s + 1) % SECTORS;
                let (p00, p01, p10, p11) = (point(ring, s), point(ring, s1), point(ring + 1, s), point(ring + 1, s1));
                if ring > 0 {
                    tris.push([p00, p01, p11]);
                }
                if ring + 1 < RINGS {
                    tris.push([p00, p11, p10]);
                }
            }
        }
        // Hinged tail fin: a vertical triangle rotated about the hinge's up axis.
        let hinge = -0.8 * a;
        let fin = 0.3;
        let yaw = tail_yaw_deg.to_radians();
        let tip = |up: f64| [-fin * yaw.sin(), b + up, hinge - fin * yaw.cos()];
        tris.push([[0.0, b, hinge], tip(0.25), tip(-0.25)]);
        tris
    }
}

/// Pose plus tail deflection used to draw a fish.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FishRenderPose {
    pub pose: AgentPose,
    pub tail_yaw_deg: f64,
}

/// Swimming animation: only the tail moves; the body origin never does.
pub fn animate_fish(base: AgentPose, phase: f64) -> FishRenderPose {
    FishRenderPose { pose: base, tail_yaw_deg: TAIL_AMPLITUDE_DEG * phase.sin() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn animation_moves_only_the_tail() {
        let base = AgentPose::new(1.5, -2.0, 37.0);
        assert_eq!(animate_fish(base, 0.0).tail_yaw_deg, 0.0);
        assert!((animate_fish(base, PI / 2.0).tail_yaw_deg - 20.0).abs() < 1e-12);
        for k in 0..50 {
            assert_eq!(animate_fish(base, k as f64 * 0.37).pose, base);
        }
    }

    #[test]
    fn mesh_spans_the_body_dimensions() {
        let body = FishBody::new(Pigment::Blue);
        assert_eq!((body.length, body.height), (1.2, 0.7));
        let tris = body.local_triangles(0.0);
        let pts: Vec<[f64; 3]> = tris[..tris.len() - 1].iter().flatten().copied().collect();
        let ext = |i: usize| {
            let lo = pts.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        };
        assert!((ext(2) - 1.2).abs() < 1e-9);
        assert!((ext(1) - 0.7).abs() < 1e-9);
        assert!(ext(0) <= 0.3 + 1e-9);
    }

    #[test]
    fn pigments_are_separable_in_every_channel() {
        let (o, b) = (Pigment::Orange.color(), Pigment::Blue.color());
        for c in 0..3 {
            assert!((o[c] - b[c]).abs() >= 0.3);
        }
    }
}
