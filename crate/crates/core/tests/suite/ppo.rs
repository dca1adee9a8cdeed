//! Advantage oracle and the on-policy ratio identity.

use super::{run_property, Outcome};
use fishtank::autodiff::AdamState;
use fishtank::ppo::{compute_gae, max_ratio_deviation, ppo_update, PolicyNet, PpoConfig, RolloutBuffer, Transition};
use fishtank::render::{CameraModel, Pigment};
use fishtank::world::{ActionPair, Arena, Kinematics, WorldState};
use fishtank::RngStream;
use proptest::prelude::*;

pub const GAE_SEGMENTS: u32 = 1000;
pub const GAE_TOL: f64 = 1e-6;
pub const RATIO_TOL: f64 = 1e-6;
pub const SMOKE_UPDATES: usize = 10;

/// Σ_k (γλ)^k δ_{t+k}, evaluated term by term.
pub fn brute_force_gae(r: &[f64], v: &[f64], boot: f64, gamma: f64, lambda: f64) -> Vec<f64> {
    let n = r.len();
    let next = |t: usize| if t + 1 < n { v[t + 1] } else { boot };
    let delta: Vec<f64> = (0..n).map(|t| r[t] + gamma * next(t) - v[t]).collect();
    (0..n).map(|t| (t..n).map(|k| (gamma * lambda).powi((k - t) as i32) * delta[k]).sum()).collect()
}

pub fn gae_oracle() -> Outcome {
    let segment = (1usize..=8).prop_flat_map(|n| (prop::collection::vec(-5.0f64..5.0, n), prop::collection::vec(-5.0f64..5.0, n)));
    let worst = std::sync::Mutex::new(0.0f64);
    run_property(GAE_SEGMENTS, (segment, -5.0f64..5.0, 0.0f64..=1.0, 0.0f64..=1.0), |((r, v), boot, gamma, lambda)| {
        let (adv, ret) = compute_gae(&r, &v, boot, gamma, lambda).unwrap();
        let want = brute_force_gae(&r, &v, boot, gamma, lambda);
        for t in 0..r.len() {
            let err = (adv[t] - want[t]).abs();
            prop_assert!(err < GAE_TOL, "step {t}: {} vs {}", adv[t], want[t]);
            prop_assert!((ret[t] - adv[t] - v[t]).abs() < 1e-12);
            let mut w = worst.lock().unwrap();
            *w = w.max(err);
        }
        Ok(())
    })?;
    Ok(format!("{GAE_SEGMENTS} segments, worst {:.1e}", worst.into_inner().unwrap()))
}

/// Acts at batch size one in a two-fish cup, then checks every stored
/// transition's ratio under the same weights before each update.
pub fn ratio_identity() -> Outcome {
    let cfg = PpoConfig { buffer_size: 64, batch_size: 16, time_horizon: 16, num_epoch: 2, ..Default::default() };
    let cam = CameraModel::default();
    let mut world = WorldState::new(Arena::Cup { radius: 5.0 }, 40, Kinematics::default());
    let me = world.add_agent(Pigment::Orange);
    world.add_agent(Pigment::Orange);
    let mut rng = RngStream::new(9);
    world.reset_episode(&mut rng);
    let mut net = PolicyNet::<f32>::new(32, 2, &mut RngStream::new(4));
    let mut adam = AdamState::new(&net.params);
    let mut buf = RolloutBuffer::new(cfg.buffer_size, cfg.time_horizon);
    let mut obs = world.observe(me, &cam);
    let (mut updates, mut worst) = (0, 0.0f64);
    while updates < SMOKE_UPDATES {
        let out = net.act(&obs).unwrap();
        let (a, lp) = out.sample(&mut rng).unwrap();
        buf.push(Transition { obs: obs.clone(), action: a, log_prob: lp, value: out.value as f64 }).unwrap();
        let other = ActionPair::from_index(rng.below(6));
        let done = world.step(&[(me, a), (1, other)]).unwrap();
        obs = world.observe(me, &cam);
        if buf.must_close(done) {
            let boot = net.act(&obs).unwrap().value as f64;
            buf.close_segment(obs.clone(), boot, false).unwrap();
        }
        if done {
            world.reset_episode(&mut rng);
            obs = world.observe(me, &cam);
        }
        if buf.is_full() {
            let dev = max_ratio_deviation(&net, &buf, 16).unwrap();
            require!(dev <= RATIO_TOL, "update {updates}: |ρ-1| = {dev:.3e}");
            worst = worst.max(dev);
            let rewards = (0..buf.len()).map(|_| rng.uniform()).collect();
            buf.set_rewards(rewards).unwrap();
            let report = ppo_update(&mut net, &mut adam, &mut buf, &cfg, 0.99, cfg.lr_at(0), &mut rng).unwrap();
            require!(report.first_batch_ratio_dev <= RATIO_TOL, "update {updates}: first minibatch |ρ-1| = {:.3e}", report.first_batch_ratio_dev);
            require!(buf.is_empty(), "update {updates} left transitions in the buffer");
            updates += 1;
        }
    }
    Ok(format!("{SMOKE_UPDATES} updates x {} transitions, max |ρ-1| = {worst:.1e}", cfg.buffer_size))
}
