//! Minimal raster plots: bar charts, a distance heatmap and learning curves.

use fishtank::render::Pigment;
use image::{Rgb, RgbImage};

const BG: Rgb<u8> = Rgb([255, 255, 255]);
const AXIS: Rgb<u8> = Rgb([40, 40, 40]);
const GUIDE: Rgb<u8> = Rgb([200, 40, 40]);
const GRID: Rgb<u8> = Rgb([225, 225, 225]);
const PAD: u32 = 30;

fn pigment_rgb(p: Pigment) -> Rgb<u8> {
    let c = p.color();
    Rgb([(c[0] * 255.0) as u8, (c[1] * 255.0) as u8, (c[2] * 255.0) as u8])
}

fn lighten(c: Rgb<u8>) -> Rgb<u8> {
    Rgb(c.0.map(|v| (v as u16 + 255).div_ceil(2) as u8))
}

fn fill(img: &mut RgbImage, x0: i64, y0: i64, x1: i64, y1: i64, c: Rgb<u8>) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    for y in y0.max(0)..y1.min(h) {
        for x in x0.max(0)..x1.min(w) {
            img.put_pixel(x as u32, y as u32, c);
        }
    }
}

/// Bresenham segment.
pub fn line(img: &mut RgbImage, (mut x0, mut y0): (i64, i64), (x1, y1): (i64, i64), c: Rgb<u8>) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let mut err = dx + dy;
    loop {
        if x0 >= 0 && y0 >= 0 && (x0 as u32) < img.width() && (y0 as u32) < img.height() {
            img.put_pixel(x0 as u32, y0 as u32, c);
        }
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

pub fn disc(img: &mut RgbImage, cx: i64, cy: i64, r: i64, c: Rgb<u8>) {
    for y in -r..=r {
        for x in -r..=r {
            if x * x + y * y <= r * r {
                fill(img, cx + x, cy + y, cx + x + 1, cy + y + 1, c);
            }
        }
    }
}

fn frame(w: u32, h: u32) -> RgbImage {
    let mut img = RgbImage::from_pixel(w, h, BG);
    let (l, b) = (PAD as i64, (h - PAD) as i64);
    line(&mut img, (l, PAD as i64 / 2), (l, b), AXIS);
    line(&mut img, (l, b), ((w - PAD / 2) as i64, b), AXIS);
    img
}

/// Per-fish mean preference with ±SEM whiskers on a 0..1 axis; dashed line at chance.
pub fn preference_bars(fish: &[(Pigment, f64, f64)]) -> RgbImage {
    let slot = 40u32;
    let (w, h) = (2 * PAD + slot * fish.len().max(1) as u32, 260u32);
    let mut img = frame(w, h);
    let plot_h = (h - PAD - PAD / 2) as f64;
    let y_of = |v: f64| (h - PAD) as i64 - (v.clamp(0.0, 1.0) * plot_h).round() as i64;
    for tick in [0.25, 0.5, 0.75, 1.0] {
        line(&mut img, (PAD as i64 + 1, y_of(tick)), ((w - PAD / 2) as i64, y_of(tick)), GRID);
    }
    for (i, &(p, mean, sem)) in fish.iter().enumerate() {
        let x0 = (PAD + slot * i as u32 + 8) as i64;
        let x1 = x0 + slot as i64 - 16;
        fill(&mut img, x0, y_of(mean), x1, y_of(0.0), pigment_rgb(p));
        let xc = (x0 + x1) / 2;
        line(&mut img, (xc, y_of(mean - sem)), (xc, y_of(mean + sem)), AXIS);
        line(&mut img, (xc - 4, y_of(mean + sem)), (xc + 4, y_of(mean + sem)), AXIS);
        line(&mut img, (xc - 4, y_of(mean - sem)), (xc + 4, y_of(mean - sem)), AXIS);
    }
    let y = y_of(0.5);
    for x in (PAD as i64 + 1..(w - PAD / 2) as i64).step_by(8) {
        line(&mut img, (x, y), (x + 4, y), GUIDE);
    }
    img
}

/// Per-fish in-group (solid) and out-group (pale) mean distances.
pub fn segregation_bars(fish: &[(Pigment, f64, f64)]) -> RgbImage {
    let slot = 44u32;
    let (w, h) = (2 * PAD + slot * fish.len().max(1) as u32, 260u32);
    let mut img = frame(w, h);
    let top = fish.iter().map(|f| f.1.max(f.2)).fold(1e-9, f64::max);
    let plot_h = (h - PAD - PAD / 2) as f64;
    let y_of = |v: f64| (h - PAD) as i64 - (v / top * plot_h).round() as i64;
    for (i, &(p, din, dout)) in fish.iter().enumerate() {
        let x0 = (PAD + slot * i as u32 + 6) as i64;
        let c = pigment_rgb(p);
        fill(&mut img, x0, y_of(din), x0 + 15, y_of(0.0), c);
        fill(&mut img, x0 + 17, y_of(dout), x0 + 32, y_of(0.0), lighten(c));
    }
    img
}

/// Pairwise mean distances; lighter cells are closer pairs. A pigment strip marks each row and column.
pub fn heatmap(m: &[Vec<f64>], pigments: &[Pigment]) -> RgbImage {
    let cell = 36u32;
    let n = m.len() as u32;
    let strip = 8u32;
    let size = strip + cell * n;
    let mut img = RgbImage::from_pixel(size, size, BG);
    let off: Vec<f64> = m.iter().enumerate().flat_map(|(i, r)| r.iter().enumerate().filter(move |(j, _)| *j != i).map(|(_, &v)| v)).collect();
    let lo = off.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = off.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for (i, row) in m.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let t = if i == j || hi <= lo { 0.0 } else { (v - lo) / (hi - lo) };
            let shade = (255.0 - 215.0 * t) as u8;
            let c = Rgb([shade, shade, (255.0 - 120.0 * t) as u8]);
            let (x, y) = ((strip + cell * j as u32) as i64, (strip + cell * i as u32) as i64);
            fill(&mut img, x, y, x + cell as i64, y + cell as i64, c);
        }
        let p = pigment_rgb(pigments.get(i).copied().unwrap_or(Pigment::Orange));
        let a = (strip + cell * i as u32) as i64;
        fill(&mut img, 0, a, strip as i64, a + cell as i64, p);
        fill(&mut img, a, 0, a + cell as i64, strip as i64, p);
    }
    img
}

/// One polyline per fish; the first `per_group` curves are orange, the rest blue.
pub fn learning_curves(curves: &[Vec<(f64, f64)>], per_group: usize) -> RgbImage {
    let (w, h) = (640u32, 320u32);
    let mut img = frame(w, h);
    let pts = curves.iter().flatten();
    let xmax = pts.clone().map(|p| p.0).fold(1.0, f64::max);
    let ymax = pts.map(|p| p.1).filter(|v| v.is_finite()).fold(1e-12, f64::max);
    let to_px = |(x, y): (f64, f64)| {
        let px = PAD as f64 + x / xmax * (w - PAD - PAD / 2) as f64;
        let py = (h - PAD) as f64 - (y / ymax).clamp(0.0, 1.0) * (h - PAD - PAD / 2) as f64;
        (px.round() as i64, py.round() as i64)
    };
    for (k, c) in curves.iter().enumerate() {
        let color = pigment_rgb(if k < per_group { Pigment::Orange } else { Pigment::Blue });
        for pair in c.windows(2) {
            line(&mut img, to_px(pair[0]), to_px(pair[1]), color);
        }
        if let [only] = c[..] {
            disc(&mut img, to_px(only).0, to_px(only).1, 2, color);
        }
    }
    img
}
