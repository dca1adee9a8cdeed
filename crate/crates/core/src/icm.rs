//! Intrinsic curiosity: a shared encoder trained through an inverse model,
//! and a forward model whose prediction error is the only reward.

use serde::{Deserialize, Serialize};

use crate::autodiff::{AdamState, Graph, ParamStore, Tensor, Var};
use crate::error::{ensure, Result};
use crate::nn::{Activation, ConvEncoder, DenseLayer, Mlp};
use crate::ppo::RolloutBuffer;
use crate::render::Observation;
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::world::ActionPair;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IcmConfig {
    pub num_layers: usize,
    /// Width of the model layers and of the feature vector.
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub strength: f64,
    /// Discount applied to the curiosity reward stream.
    pub gamma: f64,
    /// Weight of the forward loss; the inverse loss gets the remainder.
    pub forward_loss_weight: f64,
    /// Divide rewards by a running standard deviation before use.
    pub normalize_rewards: bool,
}

impl Default for IcmConfig {
    fn default() -> Self {
        Self {
            num_layers: 3,
            hidden_units: 128,
            learning_rate: 3e-4,
            strength: 1.0,
            gamma: 0.99,
            forward_loss_weight: 0.2,
            normalize_rewards: false,
        }
    }
}

impl IcmConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.num_layers >= 1 && self.hidden_units >= 1, Config, "curiosity.num_layers and curiosity.hidden_units must be >= 1");
        ensure!(self.learning_rate > 0.0 && self.learning_rate.is_finite(), Config, "curiosity.learning_rate must be positive");
        ensure!(self.strength >= 0.0 && self.strength.is_finite(), Config, "curiosity.strength must be >= 0");
        ensure!((0.0..=1.0).contains(&self.gamma), Config, "curiosity.gamma must be in [0, 1]");
        ensure!((0.0..=1.0).contains(&self.forward_loss_weight), Config, "curiosity.forward_loss_weight must be in [0, 1]");
        Ok(())
    }
}

/// `strength · ½ · mean((predicted − actual)²)`.
pub fn intrinsic_reward(predicted: &[f32], actual: &[f32], strength: f64) -> f64 {
    assert_eq!(predicted.len(), actual.len(), "feature widths differ");
    let sq: f64 = predicted.iter().zip(actual).map(|(&p, &a)| ((p - a) as f64).powi(2)).sum();
    strength * 0.5 * sq / predicted.len() as f64
}

fn one_hot(actions: &[ActionPair]) -> Vec<f64> {
    let mut v = vec![0.0; actions.len() * ActionPair::COUNT];
    for (r, a) in actions.iter().enumerate() {
        v[r * ActionPair::COUNT + a.index()] = 1.0;
    }
    v
}

#[derive(Debug, Clone, Copy)]
pub struct IcmTerms {
    pub loss: Var,
    pub forward_loss: Var,
    pub inverse_loss: Var,
}

#[derive(Debug, Clone)]
pub struct IcmNets<T> {
    pub params: ParamStore<T>,
    encoder: ConvEncoder,
    embed: DenseLayer,
    inverse: Mlp,
    inverse_head: DenseLayer,
    forward: Mlp,
    forward_head: DenseLayer,
    features: usize,
}

impl<T: Scalar> IcmNets<T> {
    pub fn new(cfg: &IcmConfig, rng: &mut RngStream) -> Self {
        let w = cfg.hidden_units;
        let mut params = ParamStore::new();
        let encoder = ConvEncoder::new(&mut params, "icm.encoder", rng);
        let embed = DenseLayer::new(&mut params, "icm.embed", ConvEncoder::OUT, w, Activation::Swish, 1.0, rng);
        let inverse = Mlp::new(&mut params, "icm.inverse", 2 * w, w, cfg.num_layers, rng);
        let inverse_head = DenseLayer::new(&mut params, "icm.inverse.out", w, ActionPair::COUNT, Activation::Linear, 1.0, rng);
        let forward = Mlp::new(&mut params, "icm.forward", w + ActionPair::COUNT, w, cfg.num_layers, rng);
        let forward_head = DenseLayer::new(&mut params, "icm.forward.out", w, w, Activation::Linear, 1.0, rng);
        Self { params, encoder, embed, inverse, inverse_head, forward, forward_head, features: w }
    }

    pub fn feature_dim(&self) -> usize {
        self.features
    }

    /// Names of the parameters that belong to the shared encoder.
    pub fn encoder_param_names(&self) -> Vec<String> {
        self.params.iter().map(|(n, _)| n.to_string()).filter(|n| n.starts_with("icm.encoder") || n.starts_with("icm.embed")).collect()
    }

    /// `[N,3,64,64]` → `[N, features]`.
    pub fn encode<'a>(&'a self, g: &mut Graph<'a, T>, obs: Var) -> Result<Var> {
        let h = self.encoder.forward(g, &self.params, obs)?;
        self.embed.forward(g, &self.params, h)
    }

    /// Logits over the six joint actions.
    pub fn inverse_logits<'a>(&'a self, g: &mut Graph<'a, T>, phi: Var, phi_next: Var) -> Result<Var> {
        let x = g.concat(phi, phi_next)?;
        let h = self.inverse.forward(g, &self.params, x)?;
        self.inverse_head.forward(g, &self.params, h)
    }

    /// Predicted next features from current features and actions.
    pub fn forward_predict<'a>(&'a self, g: &mut Graph<'a, T>, phi: Var, actions: &[ActionPair]) -> Result<Var> {
        let n = g.shape(phi)[0];
        ensure!(actions.len() == n, Dimension, "{} actions for {} features", actions.len(), n);
        let a = g.constant(Tensor::from_f64(&[n, ActionPair::COUNT], &one_hot(actions))?);
        let x = g.concat(phi, a)?;
        let h = self.forward.forward(g, &self.params, x)?;
        self.forward_head.forward(g, &self.params, h)
    }

    /// Combined loss. The forward model sees detached features, so only the
    /// inverse loss reaches the encoder.
    pub fn losses<'a>(
        &'a self,
        g: &mut Graph<'a, T>,
        obs: &[&Observation],
        next: &[&Observation],
        actions: &[ActionPair],
        forward_weight: f64,
    ) -> Result<IcmTerms> {
        let n = obs.len();
        ensure!(n > 0 && next.len() == n && actions.len() == n, Dimension, "ICM batch fields disagree in length");
        let x = g.constant(Observation::batch::<T>(obs)?);
        let xn = g.constant(Observation::batch::<T>(next)?);
        let phi = self.encode(g, x)?;
        let phi_next = self.encode(g, xn)?;

        let logits = self.inverse_logits(g, phi, phi_next)?;
        let logp = g.log_softmax(logits);
        let idx: Vec<usize> = actions.iter().map(|a| a.index()).collect();
        let picked = g.gather(logp, &idx)?;
        let nll = g.mean(picked);
        let inverse_loss = g.neg(nll);

        let phi_c = g.detach(phi);
        let target = g.detach(phi_next);
        let pred = self.forward_predict(g, phi_c, actions)?;
        let forward_loss = self.forward_error(g, pred, target)?;

        let wf = g.scale(forward_loss, T::lit(forward_weight));
        let wi = g.scale(inverse_loss, T::lit(1.0 - forward_weight));
        let loss = g.add(wf, wi)?;
        Ok(IcmTerms { loss, forward_loss, inverse_loss })
    }

    /// Batch mean of `½ · mean((pred − target)²)`.
    pub fn forward_error<'a>(&'a self, g: &mut Graph<'a, T>, pred: Var, target: Var) -> Result<Var> {
        let d = g.sub(pred, target)?;
        let sq = g.square(d);
        let m = g.mean(sq);
        Ok(g.scale(m, T::lit(0.5)))
    }
}

/// Running reward scale (Welford), used when reward normalization is on.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardScale {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl RewardScale {
    pub fn observe(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn std(&self) -> f64 {
        if self.count < 2 {
            1.0
        } else {
            (self.m2 / (self.count - 1) as f64).sqrt().max(1e-8)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IcmReport {
    pub forward_loss: f64,
    pub inverse_loss: f64,
    /// Mean reward assigned to the buffer before training.
    pub mean_reward: f64,
}

impl IcmNets<f32> {
    /// Features for a list of observations, computed in chunks.
    pub fn encode_all(&self, obs: &[&Observation], chunk: usize) -> Result<Vec<Vec<f32>>> {
        let mut out = Vec::with_capacity(obs.len());
        for part in obs.chunks(chunk.max(1)) {
            let mut g = Graph::inference();
            let x = g.constant(Observation::batch::<f32>(part)?);
            let phi = self.encode(&mut g, x)?;
            out.extend(g.value(phi).data().chunks_exact(self.features).map(<[f32]>::to_vec));
        }
        Ok(out)
    }

    /// Raw curiosity reward for every transition of a closed buffer.
    pub fn rewards(&self, buffer: &RolloutBuffer, strength: f64, chunk: usize) -> Result<Vec<f64>> {
        let steps = buffer.transitions();
        ensure!(!steps.is_empty(), Contract, "no transitions to reward");
        let mut all: Vec<&Observation> = steps.iter().map(|t| &t.obs).collect();
        let tail = all.len();
        all.extend(buffer.segments().iter().map(|s| &s.next_obs));
        let phi = self.encode_all(&all, chunk)?;
        let mut rewards = Vec::with_capacity(steps.len());
        for (si, seg) in buffer.segments().iter().enumerate() {
            for i in seg.start..seg.end {
                let next = if i + 1 < seg.end { &phi[i + 1] } else { &phi[tail + si] };
                rewards.push((i, next));
            }
        }
        ensure!(rewards.len() == steps.len(), Contract, "buffer has transitions outside closed segments");
        let mut out = vec![0.0; steps.len()];
        for part in rewards.chunks(chunk.max(1)) {
            let mut g = Graph::inference();
            let feats: Vec<f64> = part.iter().flat_map(|&(i, _)| phi[i].iter().map(|&v| v as f64)).collect();
            let f = g.constant(Tensor::from_f64(&[part.len(), self.features], &feats)?);
            let acts: Vec<ActionPair> = part.iter().map(|&(i, _)| steps[i].action).collect();
            let pred = self.forward_predict(&mut g, f, &acts)?;
            for (row, &(i, next)) in g.value(pred).data().chunks_exact(self.features).zip(part) {
                out[i] = intrinsic_reward(row, next, strength);
            }
        }
        Ok(out)
    }

    /// One step on an explicit minibatch; returns (forward, inverse) losses.
    pub fn train_step(
        &mut self,
        adam: &mut AdamState<f32>,
        obs: &[&Observation],
        next: &[&Observation],
        actions: &[ActionPair],
        forward_weight: f64,
        lr: f64,
    ) -> Result<(f64, f64)> {
        let (grads, fl, il) = {
            let mut g = Graph::new();
            let t = self.losses(&mut g, obs, next, actions, forward_weight)?;
            ensure!(g.value(t.loss).all_finite(), Degenerate, "non-finite ICM loss");
            let (fl, il) = (g.value(t.forward_loss).item() as f64, g.value(t.inverse_loss).item() as f64);
            (g.backward(t.loss)?, fl, il)
        };
        self.params.zero_grad();
        grads.accumulate_into(&mut self.params)?;
        adam.step(&mut self.params, lr as f32)?;
        Ok((fl, il))
    }

    /// Epochs of shuffled minibatches over the buffer's transitions.
    #[allow(clippy::too_many_arguments)]
    pub fn update(
        &mut self,
        adam: &mut AdamState<f32>,
        buffer: &RolloutBuffer,
        cfg: &IcmConfig,
        epochs: usize,
        batch: usize,
        lr: f64,
        rng: &mut RngStream,
    ) -> Result<(f64, f64)> {
        let steps = buffer.transitions();
        let (mut fl, mut il, mut k) = (0.0, 0.0, 0usize);
        for _ in 0..epochs {
            for idx in rng.permutation(steps.len()).chunks(batch.max(1)) {
                let obs: Vec<&Observation> = idx.iter().map(|&i| &steps[i].obs).collect();
                let next: Vec<&Observation> = idx.iter().map(|&i| buffer.next_obs(i)).collect();
                let acts: Vec<ActionPair> = idx.iter().map(|&i| steps[i].action).collect();
                let (f, i) = self.train_step(adam, &obs, &next, &acts, cfg.forward_loss_weight, lr)?;
                fl += f;
                il += i;
                k += 1;
            }
        }
        Ok((fl / k.max(1) as f64, il / k.max(1) as f64))
    }
}
