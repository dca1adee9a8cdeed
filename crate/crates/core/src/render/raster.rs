use super::camera::{CamFrame, CameraModel};
use super::mesh::{animate_fish, FishBody};
use super::Observation;
use crate::world::{AgentPose, Arena};

/// One fish as the renderer sees it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneFish {
    pub body: FishBody,
    pub pose: AgentPose,
    pub phase: f64,
}

/// Immutable snapshot of everything drawable. Walls, floor and background are white.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneGraph {
    pub arena: Arena,
    pub fish: Vec<SceneFish>,
}

/// Bounding radius of a fish around its mid-body point, tail included.
const FISH_RADIUS: f64 = 1.0;

fn outside_frustum(cam: &CameraModel, c: [f64; 3]) -> bool {
    let half = (cam.fov_deg / 2.0).to_radians();
    let (s, co) = (half.sin(), half.cos());
    c[2] < -FISH_RADIUS || c[0].abs() * co - c[2] * s > FISH_RADIUS || c[1].abs() * co - c[2] * s > FISH_RADIUS
}

fn world_vertex(pose: &AgentPose, local: [f64; 3]) -> [f64; 3] {
    let h = pose.heading.to_radians();
    let (sh, ch) = (h.sin(), h.cos());
    [pose.x - local[0] * ch + local[2] * sh, local[1], pose.z + local[0] * sh + local[2] * ch]
}

/// Sutherland-Hodgman clip of a camera-space triangle against `z >= near`.
fn clip_near(tri: [[f64; 3]; 3], near: f64) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(4);
    for i in 0..3 {
        let (a, b) = (tri[i], tri[(i + 1) % 3]);
        let (ain, bin) = (a[2] >= near, b[2] >= near);
        if ain {
            out.push(a);
        }
        if ain != bin {
            let t = (near - a[2]) / (b[2] - a[2]);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), near]);
        }
    }
    out
}

struct Raster<'o> {
    img: &'o mut Observation,
    depth: Vec<f64>,
    size: usize,
}

impl Raster<'_> {
    /// Fills a screen-space triangle `(u, v, 1/z)`; samples sit at integer pixel coordinates.
    fn fill(&mut self, p: [[f64; 3]; 3], color: [f32; 3]) {
        let edge = |a: [f64; 3], b: [f64; 3], x: f64, y: f64| (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
        let area = edge(p[0], p[1], p[2][0], p[2][1]);
        if area == 0.0 || !area.is_finite() {
            return;
        }
        let max = (self.size - 1) as f64;
        let lo_u = p.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min).ceil().max(0.0);
        let hi_u = p.iter().map(|q| q[0]).fold(f64::NEG_INFINITY, f64::max).floor().min(max);
        let lo_v = p.iter().map(|q| q[1]).fold(f64::INFINITY, f64::min).ceil().max(0.0);
        let hi_v = p.iter().map(|q| q[1]).fold(f64::NEG_INFINITY, f64::max).floor().min(max);
        if lo_u > hi_u || lo_v > hi_v {
            return;
        }
        for j in lo_v as usize..=hi_v as usize {
            let y = j as f64;
            for i in lo_u as usize..=hi_u as usize {
                let x = i as f64;
                let w0 = edge(p[1], p[2], x, y) / area;
                let w1 = edge(p[2], p[0], x, y) / area;
                let w2 = edge(p[0], p[1], x, y) / area;
                if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                    continue;
                }
                let inv_z = w0 * p[0][2] + w1 * p[1][2] + w2 * p[2][2];
                let z = 1.0 / inv_z;
                let k = j * self.size + i;
                if z < self.depth[k] {
                    self.depth[k] = z;
                    self.img.set_pixel(i, j, color);
                }
            }
        }
    }
}

/// Frame seen from `viewer`, leaving out the fish at index `exclude`.
pub fn render_from(scene: &SceneGraph, viewer: &AgentPose, exclude: Option<usize>, cam: &CameraModel) -> Observation {
    let frame: CamFrame = cam.frame(viewer);
    let mut img = Observation::white();
    let size = cam.size;
    let mut r = Raster { img: &mut img, depth: vec![f64::INFINITY; size * size], size };
    for (idx, fish) in scene.fish.iter().enumerate() {
        if Some(idx) == exclude {
            continue;
        }
        let center = frame.to_camera([fish.pose.x, fish.body.height / 2.0, fish.pose.z]);
        if outside_frustum(cam, center) {
            continue;
        }
        let rp = animate_fish(fish.pose, fish.phase);
        let color = fish.body.pigment.color();
        for tri in fish.body.local_triangles(rp.tail_yaw_deg) {
            let cam_tri = tri.map(|v| frame.to_camera(world_vertex(&rp.pose, v)));
            let poly = clip_near(cam_tri, cam.near);
            if poly.len() < 3 {
                continue;
            }
            let scr: Vec<[f64; 3]> = poly
                .iter()
                .map(|q| {
                    let (u, v) = cam.project_cam(*q);
                    [u, v, 1.0 / q[2]]
                })
                .collect();
            for k in 1..scr.len() - 1 {
                r.fill([scr[0], scr[k], scr[k + 1]], color);
            }
        }
    }
    img
}

/// Egocentric frame of fish `viewer`; its own body is never drawn.
pub fn render_view(scene: &SceneGraph, viewer: usize, cam: &CameraModel) -> Observation {
    render_from(scene, &scene.fish[viewer].pose, Some(viewer), cam)
}
