//! Artificial fish raised by curiosity-driven reinforcement learning.
//!
//! The crate covers the whole pipeline: a small reverse-mode autodiff engine,
//! a headless rasterizer producing each fish's 64x64 egocentric view, the
//! planar tank simulation, PPO with an intrinsic curiosity module, the
//! rearing / two-alternative-choice / self-segregation protocols and the
//! statistics used to summarize them.
//!
//! Numeric code is generic over [`Scalar`]; training runs in `f32` and the
//! gradient checks re-run the same graphs in `f64`.

pub mod autodiff;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod icm;
mod kernels;
pub mod nn;
pub mod ppo;
pub mod protocols;
pub mod render;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod world;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use scalar::Scalar;

pub type Tensor32 = autodiff::Tensor<f32>;
pub type Tensor64 = autodiff::Tensor<f64>;
