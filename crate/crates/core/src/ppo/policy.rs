use crate::autodiff::{categorical_sample, log_softmax, log_softmax_row, Graph, ParamStore, Var};
use crate::error::{ensure, Result};
use crate::nn::{Activation, ConvEncoder, DenseLayer, Mlp};
use crate::render::Observation;
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::world::ActionPair;

/// Pixels-to-actions actor-critic: CNN encoder, dense trunk, two categorical heads and a value head.
#[derive(Debug, Clone)]
pub struct PolicyNet<T> {
    pub params: ParamStore<T>,
    encoder: ConvEncoder,
    trunk: Mlp,
    move_head: DenseLayer,
    turn_head: DenseLayer,
    value_head: DenseLayer,
}

/// Graph handles for a batched forward pass.
#[derive(Debug, Clone, Copy)]
pub struct PolicyHeads {
    pub move_logits: Var,
    pub turn_logits: Var,
    /// `[N, 1]`
    pub value: Var,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub move_logits: [f32; 2],
    pub turn_logits: [f32; 3],
    pub value: f32,
}

impl PolicyOutput {
    /// `log p(move) + log p(turn)`, evaluated in single precision with the
    /// same arithmetic as the training graph so replayed ratios are exactly 1.
    pub fn log_prob(&self, action: ActionPair) -> f64 {
        let (mut m, mut t) = (self.move_logits, self.turn_logits);
        log_softmax_row(&mut m);
        log_softmax_row(&mut t);
        (m[action.movement.index()] + t[action.turn.index()]) as f64
    }

    /// Sum of the two heads' entropies, in nats.
    pub fn entropy(&self) -> f64 {
        let h = |l: &[f32]| -log_softmax(l).iter().map(|lp| lp.exp() * lp).sum::<f64>();
        h(&self.move_logits) + h(&self.turn_logits)
    }

    /// Probabilities of the six joint actions in [`ActionPair::index`] order.
    pub fn joint_probs(&self) -> [f64; 6] {
        let mut p = [0.0; 6];
        for a in ActionPair::all() {
            p[a.index()] = self.log_prob(a).exp();
        }
        p
    }

    pub fn sample(&self, rng: &mut RngStream) -> Result<(ActionPair, f64)> {
        let (m, _) = categorical_sample(&self.move_logits, rng)?;
        let (t, _) = categorical_sample(&self.turn_logits, rng)?;
        let action = ActionPair::from_indices(m, t);
        Ok((action, self.log_prob(action)))
    }
}

impl<T: Scalar> PolicyNet<T> {
    pub fn new(hidden: usize, layers: usize, rng: &mut RngStream) -> Self {
        let mut params = ParamStore::new();
        let encoder = ConvEncoder::new(&mut params, "policy.encoder", rng);
        let trunk = Mlp::new(&mut params, "policy.trunk", ConvEncoder::OUT, hidden, layers, rng);
        let move_head = DenseLayer::new(&mut params, "policy.move", hidden, 2, Activation::Linear, 0.01, rng);
        let turn_head = DenseLayer::new(&mut params, "policy.turn", hidden, 3, Activation::Linear, 0.01, rng);
        let value_head = DenseLayer::new(&mut params, "policy.value", hidden, 1, Activation::Linear, 1.0, rng);
        Self { params, encoder, trunk, move_head, turn_head, value_head }
    }

    /// Same architecture with parameters copied from `other`, converted to `T`.
    pub fn with_params_from<U: Scalar>(other: &PolicyNet<U>) -> Self {
        Self {
            params: other.params.cast(),
            encoder: other.encoder.clone(),
            trunk: other.trunk.clone(),
            move_head: other.move_head,
            turn_head: other.turn_head,
            value_head: other.value_head,
        }
    }

    /// `obs` is a `[N,3,64,64]` batch.
    pub fn forward<'a>(&'a self, g: &mut Graph<'a, T>, obs: Var) -> Result<PolicyHeads> {
        let s = g.shape(obs);
        ensure!(s.len() == 4 && s[1..] == [3, 64, 64], Contract, "observation batch must be [N,3,64,64], got {:?}", s);
        let f = self.encoder.forward(g, &self.params, obs)?;
        let h = self.trunk.forward(g, &self.params, f)?;
        Ok(PolicyHeads {
            move_logits: self.move_head.forward(g, &self.params, h)?,
            turn_logits: self.turn_head.forward(g, &self.params, h)?,
            value: self.value_head.forward(g, &self.params, h)?,
        })
    }

    /// Forward-only evaluation of a batch of observations.
    pub fn evaluate(&self, obs: &[&Observation]) -> Result<Vec<PolicyOutput>> {
        let mut g = Graph::inference();
        let x = g.constant(Observation::batch::<T>(obs)?);
        let h = self.forward(&mut g, x)?;
        let (ml, tl, v) = (g.value(h.move_logits).data(), g.value(h.turn_logits).data(), g.value(h.value).data());
        let f = |x: T| x.to_f32().unwrap_or(f32::NAN);
        Ok((0..obs.len())
            .map(|i| PolicyOutput {
                move_logits: [f(ml[2 * i]), f(ml[2 * i + 1])],
                turn_logits: [f(tl[3 * i]), f(tl[3 * i + 1]), f(tl[3 * i + 2])],
                value: f(v[i]),
            })
            .collect())
    }

    pub fn act(&self, obs: &Observation) -> Result<PolicyOutput> {
        Ok(self.evaluate(&[obs])?.remove(0))
    }
}
