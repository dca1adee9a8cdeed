use crate::nn::FRAME;
use crate::world::AgentPose;

/// Pinhole camera riding on a fish's head.
///
/// Pixel `(i, j)` samples the ray through image-plane coordinates `(i, j)`, so
/// the optical axis lands exactly on pixel `(32, 32)` and row 32 is the
/// horizon at eye height. The vertical field of view equals the horizontal one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub fov_deg: f64,
    pub size: usize,
    pub eye_height: f64,
    /// Distance from the body origin to the eye along the heading.
    pub eye_forward: f64,
    pub near: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self { fov_deg: 140.0, size: FRAME, eye_height: 0.35, eye_forward: 0.6, near: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelHit {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

/// Camera-space coordinates: x right, y up, z along the view direction.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CamFrame {
    eye: [f64; 3],
    fwd: [f64; 2],
    right: [f64; 2],
}

impl CamFrame {
    pub(crate) fn to_camera(&self, p: [f64; 3]) -> [f64; 3] {
        let d = [p[0] - self.eye[0], p[1] - self.eye[1], p[2] - self.eye[2]];
        [d[0] * self.right[0] + d[2] * self.right[1], d[1], d[0] * self.fwd[0] + d[2] * self.fwd[1]]
    }
}

impl CameraModel {
    pub fn focal(&self) -> f64 {
        (self.size as f64 / 2.0) / (self.fov_deg.to_radians() / 2.0).tan()
    }

    pub fn center(&self) -> f64 {
        self.size as f64 / 2.0
    }

    /// Heading 0 looks along +z and headings grow toward +x, which is the viewer's left.
    pub(crate) fn frame(&self, viewer: &AgentPose) -> CamFrame {
        let h = viewer.heading.to_radians();
        let fwd = [h.sin(), h.cos()];
        let right = [-h.cos(), h.sin()];
        let eye = [viewer.x + fwd[0] * self.eye_forward, self.eye_height, viewer.z + fwd[1] * self.eye_forward];
        CamFrame { eye, fwd, right }
    }

    /// Continuous image coordinates of a camera-space point (no bounds check).
    pub(crate) fn project_cam(&self, p: [f64; 3]) -> (f64, f64) {
        let f = self.focal();
        (self.center() + f * p[0] / p[2], self.center() - f * p[1] / p[2])
    }

    /// Pixel position and depth of a world point, if it lies inside the frustum.
    pub fn project_point(&self, viewer: &AgentPose, world: [f64; 3]) -> Option<PixelHit> {
        const EDGE: f64 = 1e-6;
        let p = self.frame(viewer).to_camera(world);
        if p[2] <= self.near {
            return None;
        }
        let (u, v) = self.project_cam(p);
        let s = self.size as f64;
        if u < -EDGE || v < -EDGE || u > s + EDGE || v > s + EDGE {
            return None;
        }
        // Points exactly on the far frustum edge are reported on the last pixel.
        let clamp = |x: f64| x.clamp(0.0, s - 1e-9);
        Some(PixelHit { u: clamp(u), v: clamp(v), depth: p[2] })
    }
}
