//! Curiosity module contracts.

use super::{run_property, Outcome};
use fishtank::autodiff::{AdamState, Graph, Tensor};
use fishtank::icm::{intrinsic_reward, IcmConfig, IcmNets};
use fishtank::render::{Observation, Pigment, OBS_LEN};
use fishtank::world::ActionPair;
use fishtank::RngStream;
use proptest::prelude::*;

pub const LOOP_UPDATES: usize = 2000;
pub const LOOP_WINDOW: usize = 100;

pub fn nets(seed: u64) -> IcmNets<f32> {
    IcmNets::new(&IcmConfig::default(), &mut RngStream::new(seed))
}

pub fn random_obs(rng: &mut RngStream) -> Observation {
    Observation::from_planar((0..OBS_LEN).map(|_| rng.uniform() as f32).collect()).unwrap()
}

/// Mean reward of the transitions under the current networks.
fn mean_reward(icm: &IcmNets<f32>, obs: &[&Observation], next: &[&Observation], acts: &[ActionPair]) -> f64 {
    let phi = icm.encode_all(obs, 8).unwrap();
    let phi_next = icm.encode_all(next, 8).unwrap();
    let width = phi[0].len();
    let mut g = Graph::inference();
    let flat: Vec<f64> = phi.iter().flatten().map(|&v| v as f64).collect();
    let f = g.constant(Tensor::from_f64(&[obs.len(), width], &flat).unwrap());
    let pred = icm.forward_predict(&mut g, f, acts).unwrap();
    let rows: Vec<&[f32]> = g.value(pred).data().chunks_exact(width).collect();
    rows.iter().zip(&phi_next).map(|(p, t)| intrinsic_reward(p, t, 1.0)).sum::<f64>() / obs.len() as f64
}

/// Non-negative everywhere, zero exactly at a perfect prediction, linear in strength.
pub fn reward_sign_and_zero() -> Outcome {
    let strategy = (prop::collection::vec(-10.0f32..10.0, 128), prop::collection::vec(-10.0f32..10.0, 128), 0.0f64..4.0);
    run_property(256, strategy, |(pred, actual, strength)| {
        let r = intrinsic_reward(&pred, &actual, strength);
        prop_assert!(r >= 0.0);
        prop_assert_eq!(intrinsic_reward(&actual, &actual, strength), 0.0);
        prop_assert!((intrinsic_reward(&pred, &actual, 2.0 * strength) - 2.0 * r).abs() <= 1e-9 * r.max(1.0));
        Ok(())
    })?;
    Ok("256 random predictions".into())
}

pub fn forward_loss_spares_encoder() -> Outcome {
    let icm = nets(1);
    let mut rng = RngStream::new(2);
    let (a, b, c) = (random_obs(&mut rng), random_obs(&mut rng), random_obs(&mut rng));
    let mut g = Graph::new();
    let t = icm.losses(&mut g, &[&a, &b], &[&b, &c], &[ActionPair::IDLE, ActionPair::from_index(1)], 0.2).unwrap();
    let grads = g.backward(t.forward_loss).unwrap();
    let mut store = icm.params.clone();
    store.zero_grad();
    grads.accumulate_into(&mut store).unwrap();
    let encoder = icm.encoder_param_names();
    require!(!encoder.is_empty(), "no encoder parameters");
    let mut forward_touched = false;
    for (name, tensor) in store.iter() {
        let g = tensor.grad().unwrap();
        if encoder.iter().any(|e| e == name) {
            require!(g.iter().all(|&v| v == 0.0), "{name} received forward-loss gradient");
        } else if name.starts_with("icm.forward") {
            forward_touched |= g.iter().any(|&v| v != 0.0);
        }
    }
    require!(forward_touched, "forward model received no gradient");
    Ok(format!("{} encoder tensors exactly zero", encoder.len()))
}

/// Two frames alternating under fixed actions. The learning rate follows the
/// configured linear schedule over the whole run.
///
/// Once the loop is learned the average sits on an optimization floor about
/// nine orders of magnitude below its start; rises smaller than a millionth of
/// the starting value are ties.
pub fn predictable_loop_decays() -> Outcome {
    let mut icm = nets(6);
    let cfg = IcmConfig::default();
    let mut adam = AdamState::new(&icm.params);
    let a = Observation::white();
    let b = Observation::filled(Pigment::Orange.color());
    let (obs, next) = ([&a, &b], [&b, &a]);
    let acts = [ActionPair::from_index(0), ActionPair::from_index(1)];
    let mut rewards = Vec::with_capacity(LOOP_UPDATES);
    for u in 0..LOOP_UPDATES {
        let lr = cfg.learning_rate * (1.0 - u as f64 / LOOP_UPDATES as f64);
        icm.train_step(&mut adam, &obs, &next, &acts, cfg.forward_loss_weight, lr).unwrap();
        rewards.push(mean_reward(&icm, &obs, &next, &acts));
    }
    let avg: Vec<f64> = rewards.windows(LOOP_WINDOW).map(|w| w.iter().sum::<f64>() / LOOP_WINDOW as f64).collect();
    let resolution = 1e-6 * avg[0];
    let rises: Vec<usize> = (1..avg.len()).filter(|&i| avg[i] > avg[i - 1] + resolution).collect();
    require!(rises.is_empty(), "moving average rose at updates {rises:?}");
    let (first, last) = (avg[0], avg[avg.len() - 1]);
    require!(last < 1e-6 * first, "average fell only from {first:.3e} to {last:.3e}");
    Ok(format!("{LOOP_UPDATES} updates, moving average {first:.2e} -> {last:.2e}"))
}
