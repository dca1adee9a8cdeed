use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;
use fishtank::render::Pigment;
use fishtank::world::{read_trajectory, TrajectoryRow};
use image::{Rgb, RgbImage};

use crate::output::ensure_dir;
use crate::plot::{disc, line};

const SIZE: u32 = 400;
const SCALE_PAD: f64 = 1.0;

/// Overhead view per `(trial, step)`: each fish is a dot in its pigment with a heading tick.
pub fn replay(path: &Path, out: &Path) -> anyhow::Result<()> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let rows = read_trajectory(file)?;
    if rows.is_empty() {
        return Err(fishtank::Error::Data(format!("{} has no trajectory rows", path.display())).into());
    }
    let mut frames: BTreeMap<(usize, usize), Vec<&TrajectoryRow>> = BTreeMap::new();
    for r in &rows {
        frames.entry((r.trial_id, r.step)).or_default().push(r);
    }
    let ext = |f: fn(&TrajectoryRow) -> f64| rows.iter().map(f).fold(0.0f64, |m, v| m.max(v.abs()));
    let half = ext(|r| r.x).max(ext(|r| r.z)) + SCALE_PAD;
    let to_px = |x: f64, z: f64| {
        let s = SIZE as f64 / (2.0 * half);
        (((x + half) * s).round() as i64, ((half - z) * s).round() as i64)
    };
    ensure_dir(out)?;
    for ((trial, step), fish) in &frames {
        let mut img = RgbImage::from_pixel(SIZE, SIZE, Rgb([255, 255, 255]));
        let (cx, cy) = to_px(0.0, 0.0);
        line(&mut img, (cx - 4, cy), (cx + 4, cy), Rgb([210, 210, 210]));
        line(&mut img, (cx, cy - 4), (cx, cy + 4), Rgb([210, 210, 210]));
        for r in fish {
            let pigment: Pigment = r.pigment.parse()?;
            let c = pigment.color();
            let color = Rgb([(c[0] * 255.0) as u8, (c[1] * 255.0) as u8, (c[2] * 255.0) as u8]);
            let (px, py) = to_px(r.x, r.z);
            disc(&mut img, px, py, 4, color);
            let h = r.heading.to_radians();
            let tip = to_px(r.x + 0.6 * h.sin(), r.z + 0.6 * h.cos());
            line(&mut img, (px, py), tip, Rgb([30, 30, 30]));
        }
        img.save(out.join(format!("trial{trial:04}-step{step:05}.png")))?;
    }
    log::info!("wrote {} images to {}", frames.len(), out.display());
    Ok(())
}
