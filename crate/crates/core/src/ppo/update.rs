use crate::autodiff::{AdamState, Graph, Tensor, Var};
use crate::error::{ensure, Result};
use crate::ppo::buffer::RolloutBuffer;
use crate::ppo::gae::normalize_advantages;
use crate::ppo::{PolicyNet, PpoConfig};
use crate::render::Observation;
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::world::ActionPair;

/// Minibatch inputs for the clipped surrogate.
#[derive(Debug, Clone)]
pub struct SurrogateBatch<'b> {
    pub obs: Vec<&'b Observation>,
    pub actions: Vec<ActionPair>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

/// Graph handles of one surrogate evaluation.
#[derive(Debug, Clone, Copy)]
pub struct SurrogateTerms {
    pub loss: Var,
    pub policy_loss: Var,
    pub value_loss: Var,
    pub entropy: Var,
    /// Probability ratios, `[N]`.
    pub ratio: Var,
}

/// `−mean(min(ρÂ, clip(ρ)Â)) + c_v·mean((V − R)²) − β·mean(H)`.
pub fn surrogate_loss<'a, T: Scalar>(
    g: &mut Graph<'a, T>,
    net: &'a PolicyNet<T>,
    batch: &SurrogateBatch<'_>,
    cfg: &PpoConfig,
) -> Result<SurrogateTerms> {
    let n = batch.obs.len();
    ensure!(n > 0, Contract, "empty minibatch");
    ensure!(
        batch.actions.len() == n && batch.old_log_probs.len() == n && batch.advantages.len() == n && batch.returns.len() == n,
        Dimension,
        "minibatch fields disagree in length"
    );
    let x = g.constant(Observation::batch::<T>(&batch.obs)?);
    let heads = net.forward(g, x)?;
    let lm = g.log_softmax(heads.move_logits);
    let lt = g.log_softmax(heads.turn_logits);
    let mi: Vec<usize> = batch.actions.iter().map(|a| a.movement.index()).collect();
    let ti: Vec<usize> = batch.actions.iter().map(|a| a.turn.index()).collect();
    let lpm = g.gather(lm, &mi)?;
    let lpt = g.gather(lt, &ti)?;
    let logp = g.add(lpm, lpt)?;

    let old = g.constant(Tensor::from_f64(&[n], &batch.old_log_probs)?);
    let diff = g.sub(logp, old)?;
    let ratio = g.exp(diff);
    let adv = g.constant(Tensor::from_f64(&[n], &batch.advantages)?);
    let eps = T::lit(cfg.epsilon);
    let s1 = g.mul(ratio, adv)?;
    let clipped = g.clamp(ratio, T::one() - eps, T::one() + eps);
    let s2 = g.mul(clipped, adv)?;
    let surr = g.minimum(s1, s2)?;
    let mean_surr = g.mean(surr);
    let policy_loss = g.neg(mean_surr);

    let v = g.reshape(heads.value, &[n])?;
    let ret = g.constant(Tensor::from_f64(&[n], &batch.returns)?);
    let err = g.sub(v, ret)?;
    let sq = g.square(err);
    let value_loss = g.mean(sq);

    let entropy = {
        let pm = g.exp(lm);
        let pt = g.exp(lt);
        let em = g.mul(pm, lm)?;
        let et = g.mul(pt, lt)?;
        let sm = g.sum(em);
        let st = g.sum(et);
        let s = g.add(sm, st)?;
        g.scale(s, -T::one() / T::lit(n as f64))
    };

    let vterm = g.scale(value_loss, T::lit(cfg.value_loss_coef));
    let eterm = g.scale(entropy, -T::lit(cfg.beta));
    let partial = g.add(policy_loss, vterm)?;
    let loss = g.add(partial, eterm)?;
    Ok(SurrogateTerms { loss, policy_loss, value_loss, entropy, ratio })
}

/// Mean losses over all minibatches of one update.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossReport {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub learning_rate: f64,
    pub minibatches: usize,
    /// Fraction of samples whose ratio left the clip interval.
    pub clip_fraction: f64,
    /// Largest `|ρ − 1|` seen in the first minibatch, before any parameter moved.
    pub first_batch_ratio_dev: f64,
}

/// Largest `|ρ − 1|` over the whole buffer for the current parameters.
pub fn max_ratio_deviation(net: &PolicyNet<f32>, buffer: &RolloutBuffer, chunk: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for part in buffer.transitions().chunks(chunk.max(1)) {
        let obs: Vec<&Observation> = part.iter().map(|t| &t.obs).collect();
        for (out, t) in net.evaluate(&obs)?.iter().zip(part) {
            let lp = out.log_prob(t.action);
            worst = worst.max((((lp as f32) - (t.log_prob as f32)).exp() - 1.0).abs() as f64);
        }
    }
    Ok(worst)
}

/// Clipped-surrogate PPO over a full buffer with rewards assigned.
///
/// Advantages are standardized over the whole buffer. Each epoch visits every
/// transition once in a fresh random order; the trailing partial minibatch is kept.
/// The buffer is cleared on success.
pub fn ppo_update(
    net: &mut PolicyNet<f32>,
    adam: &mut AdamState<f32>,
    buffer: &mut RolloutBuffer,
    cfg: &PpoConfig,
    gamma: f64,
    lr: f64,
    rng: &mut RngStream,
) -> Result<LossReport> {
    ensure!(buffer.is_full(), Contract, "ppo_update needs a full buffer ({} of {})", buffer.len(), buffer.capacity());
    let (mut adv, returns) = buffer.advantages(gamma, cfg.lambda)?;
    normalize_advantages(&mut adv);
    let n = buffer.len();
    let mut report = LossReport { learning_rate: lr, ..Default::default() };
    let mut clipped = 0usize;
    let lo = 1.0 - cfg.epsilon as f32;
    let hi = 1.0 + cfg.epsilon as f32;
    for epoch in 0..cfg.num_epoch {
        let order = rng.permutation(n);
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let steps = buffer.transitions();
            let batch = SurrogateBatch {
                obs: idx.iter().map(|&i| &steps[i].obs).collect(),
                actions: idx.iter().map(|&i| steps[i].action).collect(),
                old_log_probs: idx.iter().map(|&i| steps[i].log_prob).collect(),
                advantages: idx.iter().map(|&i| adv[i]).collect(),
                returns: idx.iter().map(|&i| returns[i]).collect(),
            };
            let grads = {
                let mut g = Graph::new();
                let terms = surrogate_loss(&mut g, net, &batch, cfg)?;
                let ratios = g.value(terms.ratio).data();
                if epoch == 0 && b == 0 {
                    report.first_batch_ratio_dev = ratios.iter().map(|r| (r - 1.0).abs() as f64).fold(0.0, f64::max);
                }
                clipped += ratios.iter().filter(|&&r| r < lo || r > hi).count();
                report.policy_loss += g.value(terms.policy_loss).item() as f64;
                report.value_loss += g.value(terms.value_loss).item() as f64;
                report.entropy += g.value(terms.entropy).item() as f64;
                let loss = g.value(terms.loss);
                ensure!(loss.all_finite(), Degenerate, "non-finite PPO loss");
                g.backward(terms.loss)?
            };
            net.params.zero_grad();
            grads.accumulate_into(&mut net.params)?;
            adam.step(&mut net.params, lr as f32)?;
            report.minibatches += 1;
        }
    }
    let k = report.minibatches as f64;
    report.policy_loss /= k;
    report.value_loss /= k;
    report.entropy /= k;
    report.clip_fraction = clipped as f64 / (n * cfg.num_epoch) as f64;
    buffer.clear();
    Ok(report)
}
