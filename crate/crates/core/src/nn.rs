//! Layer building blocks shared by the policy and curiosity networks.

use crate::autodiff::{scaled_uniform, Graph, ParamId, ParamStore, Tensor, Var};
use crate::error::Result;
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Negative-side slope of the convolution activations.
pub const LEAKY_SLOPE: f64 = 0.01;

/// Observation side length in pixels.
pub const FRAME: usize = 64;
pub const CHANNELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    LeakyRelu,
    Swish,
}

fn activate<T: Scalar>(g: &mut Graph<'_, T>, x: Var, act: Activation) -> Var {
    match act {
        Activation::Linear => x,
        Activation::LeakyRelu => g.leaky_relu(x, T::lit(LEAKY_SLOPE)),
        Activation::Swish => g.swish(x),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Conv2dLayer {
    pub kernel: ParamId,
    pub bias: ParamId,
    pub stride: usize,
    pub act: Activation,
}

impl Conv2dLayer {
    #[allow(clippy::too_many_arguments)]
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        in_c: usize,
        out_c: usize,
        k: usize,
        stride: usize,
        act: Activation,
        rng: &mut RngStream,
    ) -> Self {
        let fan_in = in_c * k * k;
        let kernel = store.add(format!("{name}.kernel"), scaled_uniform(&[out_c, in_c, k, k], fan_in, 2f64.sqrt(), rng));
        let bias = store.add(format!("{name}.bias"), Tensor::zeros(&[out_c]));
        Self { kernel, bias, stride, act }
    }

    pub fn forward<'a, T: Scalar>(&self, g: &mut Graph<'a, T>, store: &'a ParamStore<T>, x: Var) -> Result<Var> {
        let k = g.param(store, self.kernel);
        let b = g.param(store, self.bias);
        let y = g.conv2d(x, k, Some(b), self.stride)?;
        Ok(activate(g, y, self.act))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DenseLayer {
    pub weight: ParamId,
    pub bias: ParamId,
    pub act: Activation,
}

impl DenseLayer {
    /// `gain` scales the init variance; small gains keep fresh policy heads near uniform.
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        n_in: usize,
        n_out: usize,
        act: Activation,
        gain: f64,
        rng: &mut RngStream,
    ) -> Self {
        let weight = store.add(format!("{name}.weight"), scaled_uniform(&[n_out, n_in], n_in, gain, rng));
        let bias = store.add(format!("{name}.bias"), Tensor::zeros(&[n_out]));
        Self { weight, bias, act }
    }

    pub fn forward<'a, T: Scalar>(&self, g: &mut Graph<'a, T>, store: &'a ParamStore<T>, x: Var) -> Result<Var> {
        let w = g.param(store, self.weight);
        let b = g.param(store, self.bias);
        let y = g.dense(x, w, Some(b))?;
        Ok(activate(g, y, self.act))
    }
}

/// Stack of equally-activated dense layers.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

impl Mlp {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, n_in: usize, width: usize, depth: usize, rng: &mut RngStream) -> Self {
        let layers = (0..depth)
            .map(|i| DenseLayer::new(store, &format!("{name}.{i}"), if i == 0 { n_in } else { width }, width, Activation::Swish, 1.0, rng))
            .collect();
        Self { layers }
    }

    pub fn forward<'a, T: Scalar>(&self, g: &mut Graph<'a, T>, store: &'a ParamStore<T>, mut x: Var) -> Result<Var> {
        for l in &self.layers {
            x = l.forward(g, store, x)?;
        }
        Ok(x)
    }
}

/// Two-conv "simple" visual encoder: 16@8x8/4 then 32@4x4/2, flattened.
#[derive(Debug, Clone)]
pub struct ConvEncoder {
    pub conv1: Conv2dLayer,
    pub conv2: Conv2dLayer,
}

impl ConvEncoder {
    /// Flattened output width for a 64x64 input: 32·6·6.
    pub const OUT: usize = 32 * 6 * 6;

    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, rng: &mut RngStream) -> Self {
        Self {
            conv1: Conv2dLayer::new(store, &format!("{name}.conv1"), CHANNELS, 16, 8, 4, Activation::LeakyRelu, rng),
            conv2: Conv2dLayer::new(store, &format!("{name}.conv2"), 16, 32, 4, 2, Activation::LeakyRelu, rng),
        }
    }

    /// `obs` is `[N,3,64,64]`; returns `[N, 1152]`.
    pub fn forward<'a, T: Scalar>(&self, g: &mut Graph<'a, T>, store: &'a ParamStore<T>, obs: Var) -> Result<Var> {
        let n = g.shape(obs)[0];
        let h = self.conv1.forward(g, store, obs)?;
        let h = self.conv2.forward(g, store, h)?;
        g.reshape(h, &[n, Self::OUT])
    }
}
