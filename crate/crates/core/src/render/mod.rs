//! Headless software rasterizer for the fish's egocentric camera.
//!
//! Everything in the tank except the fish is white, so a frame is a white
//! canvas with flat-colored fish triangles depth-tested into it.

mod camera;
mod mesh;
mod raster;

pub use camera::{CameraModel, PixelHit};
pub use mesh::{animate_fish, FishBody, FishRenderPose, Pigment, TAIL_AMPLITUDE_DEG};
pub use raster::{render_from, render_view, SceneFish, SceneGraph};

use sha2::{Digest, Sha256};

use crate::autodiff::Tensor;
use crate::error::{ensure, Result};
use crate::nn::{CHANNELS, FRAME};
use crate::scalar::Scalar;

/// 64x64 RGB frame, channel-planar (`[3][64][64]`), values in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    data: Vec<f32>,
}

pub const OBS_LEN: usize = CHANNELS * FRAME * FRAME;
pub const WHITE: [f32; 3] = [1.0, 1.0, 1.0];

impl Observation {
    pub fn filled(color: [f32; 3]) -> Self {
        let mut data = vec![0.0; OBS_LEN];
        for (c, &v) in color.iter().enumerate() {
            data[c * FRAME * FRAME..(c + 1) * FRAME * FRAME].fill(v);
        }
        Self { data }
    }

    pub fn white() -> Self {
        Self::filled(WHITE)
    }

    pub fn from_planar(data: Vec<f32>) -> Result<Self> {
        ensure!(data.len() == OBS_LEN, Contract, "observation needs {OBS_LEN} values, got {}", data.len());
        ensure!(data.iter().all(|v| (0.0..=1.0).contains(v)), Contract, "observation values must lie in [0,1]");
        Ok(Self { data })
    }

    pub fn planar(&self) -> &[f32] {
        &self.data
    }

    /// Color at column `u`, row `v` (row 0 is the top of the image).
    pub fn pixel(&self, u: usize, v: usize) -> [f32; 3] {
        let i = v * FRAME + u;
        [self.data[i], self.data[FRAME * FRAME + i], self.data[2 * FRAME * FRAME + i]]
    }

    pub(crate) fn set_pixel(&mut self, u: usize, v: usize, rgb: [f32; 3]) {
        let i = v * FRAME + u;
        for (c, &x) in rgb.iter().enumerate() {
            self.data[c * FRAME * FRAME + i] = x;
        }
    }

    /// Number of pixels whose color equals `rgb` exactly.
    pub fn count_color(&self, rgb: [f32; 3]) -> usize {
        (0..FRAME * FRAME).filter(|&i| self.pixel(i % FRAME, i / FRAME) == rgb).count()
    }

    pub fn is_all(&self, rgb: [f32; 3]) -> bool {
        self.count_color(rgb) == FRAME * FRAME
    }

    /// Interleaved 8-bit RGB, row-major, for image dumps.
    pub fn to_rgb8(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(OBS_LEN);
        for i in 0..FRAME * FRAME {
            for c in 0..CHANNELS {
                out.push((self.data[c * FRAME * FRAME + i] * 255.0).round() as u8);
            }
        }
        out
    }

    pub fn hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for v in &self.data {
            h.update(v.to_le_bytes());
        }
        h.finalize().into()
    }

    /// Stacks frames into an `[N,3,64,64]` tensor.
    pub fn batch<T: Scalar>(obs: &[&Observation]) -> Result<Tensor<T>> {
        let mut data = Vec::with_capacity(obs.len() * OBS_LEN);
        for o in obs {
            data.extend(o.data.iter().map(|&v| T::from_f32(v).unwrap()));
        }
        Tensor::new(&[obs.len(), CHANNELS, FRAME, FRAME], data)
    }
}
