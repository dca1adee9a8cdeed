use super::tensor::Tensor;
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Uniform weights with variance `gain² / fan_in`.
pub fn scaled_uniform<T: Scalar>(shape: &[usize], fan_in: usize, gain: f64, rng: &mut RngStream) -> Tensor<T> {
    let a = gain * (3.0 / fan_in as f64).sqrt();
    Tensor::from_fn(shape, |_| T::lit(rng.uniform_range(-a, a)))
}
