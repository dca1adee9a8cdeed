//! Renderer scene contracts on constructed scenes.

use super::Outcome;
use fishtank::render::{render_from, render_view, CameraModel, FishBody, Pigment, SceneFish, SceneGraph, WHITE};
use fishtank::world::{AgentPose, Arena};
use fishtank::RngStream;
use std::collections::HashSet;

pub const DETERMINISM_FRAMES: usize = 1000;

fn fish(pigment: Pigment, x: f64, z: f64, heading: f64, phase: f64) -> SceneFish {
    SceneFish { body: FishBody::new(pigment), pose: AgentPose::new(x, z, heading), phase }
}

fn cup(fish: Vec<SceneFish>) -> SceneGraph {
    SceneGraph { arena: Arena::Cup { radius: 5.0 }, fish }
}

fn random_pose(rng: &mut RngStream, reach: f64) -> AgentPose {
    AgentPose::new(rng.uniform_range(-reach, reach), rng.uniform_range(-reach, reach), rng.uniform_range(0.0, 360.0))
}

/// A lone fish in either arena sees nothing but white, from anywhere and facing anywhere.
pub fn empty_arena_is_white() -> Outcome {
    let cam = CameraModel::default();
    let mut rng = RngStream::new(21);
    let arenas = [Arena::Cup { radius: 5.0 }, Arena::Tank { length: 30.0, width: 10.0 }, Arena::Tank { length: 14.0, width: 14.0 }];
    for arena in arenas {
        for k in 0..100 {
            let p = random_pose(&mut rng, 3.0);
            let scene = SceneGraph { arena, fish: vec![fish(Pigment::Orange, p.x, p.z, p.heading, k as f64)] };
            require!(render_view(&scene, 0, &cam).is_all(WHITE), "{arena:?}: non-white pixel seen from {p:?}");
        }
    }
    Ok("300 viewpoints all white".into())
}

/// Rendering from a fish's own pose equals rendering the scene with that fish removed.
pub fn viewer_is_excluded() -> Outcome {
    let cam = CameraModel::default();
    let mut rng = RngStream::new(22);
    for _ in 0..200 {
        let fish: Vec<SceneFish> = (0..5)
            .map(|k| {
                let p = random_pose(&mut rng, 3.5);
                let pigment = if k % 2 == 0 { Pigment::Orange } else { Pigment::Blue };
                SceneFish { body: FishBody::new(pigment), pose: p, phase: rng.uniform_range(0.0, 6.3) }
            })
            .collect();
        let scene = cup(fish.clone());
        for v in 0..fish.len() {
            let mut without = fish.clone();
            without.remove(v);
            let want = render_from(&cup(without), &fish[v].pose, None, &cam);
            require!(render_view(&scene, v, &cam) == want, "viewer {v} contributed pixels");
        }
    }
    Ok("1000 views match their viewer-free scenes".into())
}

/// A near orange fish broadside 0.7 units from the eye hides a blue fish 2 units away behind it.
pub fn nearer_fish_occludes() -> Outcome {
    let cam = CameraModel::default();
    let viewer = AgentPose::new(0.0, 0.0, 0.0);
    let near = fish(Pigment::Orange, 0.0, 1.3, 90.0, 0.0);
    let far = fish(Pigment::Blue, 0.0, 2.6, 90.0, 0.0);
    let (orange, blue) = (Pigment::Orange.color(), Pigment::Blue.color());

    let alone = render_from(&cup(vec![far]), &viewer, None, &cam);
    let covered: Vec<(usize, usize)> = (0..64).flat_map(|v| (0..64).map(move |u| (u, v))).filter(|&(u, v)| alone.pixel(u, v) == blue).collect();
    require!(covered.len() >= 20, "far fish covers only {} pixels on its own", covered.len());

    for scene in [cup(vec![near, far]), cup(vec![far, near])] {
        let both = render_from(&scene, &viewer, None, &cam);
        require!(both.count_color(blue) == 0, "{} far-fish pixels leak past the near fish", both.count_color(blue));
        require!(covered.iter().all(|&(u, v)| both.pixel(u, v) == orange), "a covered ray is not orange");
    }
    // With the colors swapped the near fish still wins, so the order of drawing is irrelevant.
    let swapped = cup(vec![fish(Pigment::Blue, 0.0, 1.3, 90.0, 0.0), fish(Pigment::Orange, 0.0, 2.6, 90.0, 0.0)]);
    require!(render_from(&swapped, &viewer, None, &cam).count_color(orange) == 0, "far orange fish leaks past the near blue fish");
    Ok(format!("{} covered rays all show the near fish", covered.len()))
}

/// Re-rendering any (scene, pose), serially or on worker threads, reproduces its hash.
pub fn frames_are_deterministic() -> Outcome {
    use rayon::prelude::*;
    let cam = CameraModel::default();
    let mut rng = RngStream::new(23);
    let scenes: Vec<SceneGraph> = (0..DETERMINISM_FRAMES)
        .map(|_| {
            cup((0..4)
                .map(|j| {
                    let p = random_pose(&mut rng, 3.5);
                    let pigment = if j < 2 { Pigment::Orange } else { Pigment::Blue };
                    SceneFish { body: FishBody::new(pigment), pose: p, phase: rng.uniform_range(0.0, 6.3) }
                })
                .collect())
        })
        .collect();
    let serial: Vec<[u8; 32]> = scenes.iter().map(|s| render_view(s, 0, &cam).hash()).collect();
    let again: Vec<[u8; 32]> = scenes.iter().map(|s| render_view(&s.clone(), 0, &cam).hash()).collect();
    let parallel: Vec<[u8; 32]> = scenes.par_iter().map(|s| render_view(s, 0, &cam).hash()).collect();
    for k in 0..DETERMINISM_FRAMES {
        require!(serial[k] == again[k] && serial[k] == parallel[k], "frame {k} rendered differently on repeat");
    }
    let distinct = serial.iter().collect::<HashSet<_>>().len();
    Ok(format!("{DETERMINISM_FRAMES} frames reproduced ({distinct} distinct hashes)"))
}

/// Rendered blobs carry the flat pigment colors, which differ by at least 0.3 per channel.
pub fn pigments_render_separably() -> Outcome {
    let cam = CameraModel::default();
    let viewer = AgentPose::new(0.0, 0.0, 0.0);
    let scene = cup(vec![fish(Pigment::Orange, 0.8, 1.6, 90.0, 0.0), fish(Pigment::Blue, -0.8, 1.6, 90.0, 0.0)]);
    let frame = render_from(&scene, &viewer, None, &cam);
    let (o, b) = (Pigment::Orange.color(), Pigment::Blue.color());
    require!(frame.count_color(o) > 20 && frame.count_color(b) > 20, "blobs too small");
    let other = frame.count_color(WHITE) + frame.count_color(o) + frame.count_color(b);
    require!(other == 64 * 64, "{} pixels are neither white nor a pigment", 64 * 64 - other);
    let gap = (0..3).map(|c| (o[c] - b[c]).abs()).fold(f32::INFINITY, f32::min);
    require!(gap >= 0.3, "channel gap {gap}");
    Ok(format!("smallest channel gap {gap:.2}"))
}

