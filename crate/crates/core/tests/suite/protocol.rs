//! Test-protocol contracts.

use super::Outcome;
use fishtank::config::ExperimentConfig;
use fishtank::protocols::{afc_layout, afc_world, initial_learners, run_2afc, run_segregation, AfcSpec, PolicyController, SeekPoint, SegSpec, SegSubject, Still};
use fishtank::render::Pigment;
use fishtank::world::{ActionPair, WorldState};
use fishtank::RngStream;

pub const SEEKER_TRIALS: usize = 200;
pub const SEEKER_TOL: f64 = 0.02;

/// Small networks and short horizons for contract runs.
pub fn small_config() -> ExperimentConfig {
    ExperimentConfig::parse(
        "[ppo]\nhidden_units = 32\nnum_layers = 2\nbuffer_size = 128\nbatch_size = 64\ntime_horizon = 64\nnum_epoch = 2\nmax_steps = 512\n\
         [curiosity]\nhidden_units = 32\nnum_layers = 2\n\
         [protocol]\nfish_per_group = 2\nsteps_per_episode = 256\ncheckpoint_every = 256\n",
    )
    .unwrap()
}

/// Weights hash the same before and after both tests, and batching trials
/// differently changes nothing.
pub fn freeze_invariance() -> Outcome {
    let cfg = small_config();
    let net = initial_learners(&cfg).map_err(|e| e.to_string())?.remove(0).policy;
    let before = net.params.fingerprint();
    let ctl = PolicyController(&net);
    let spec = |batch| AfcSpec { trials: 3, steps: 40, seed: 9, batch, keep_poses: 3 };
    let one = run_2afc(&cfg, Pigment::Orange, &ctl, &spec(1)).map_err(|e| e.to_string())?;
    let three = run_2afc(&cfg, Pigment::Orange, &ctl, &spec(3)).map_err(|e| e.to_string())?;
    require!(one == three, "trial results depend on batch composition");
    let subjects: Vec<SegSubject> = [Pigment::Orange, Pigment::Orange, Pigment::Blue, Pigment::Blue]
        .iter()
        .enumerate()
        .map(|(i, &p)| SegSubject { fish_id: i as u32, pigment: p, controller: &ctl })
        .collect();
    run_segregation(&cfg, &subjects, &SegSpec { trials: 2, steps: 20, seed: 1, batch: 2, keep_poses: 0 }).map_err(|e| e.to_string())?;
    require!(before == net.params.fingerprint(), "weights changed during testing");
    Ok("weight hash unchanged, batch-invariant".into())
}

pub fn counterbalance() -> Outcome {
    let cfg = ExperimentConfig::default();
    let spec = AfcSpec { trials: cfg.protocol.afc_trials, steps: 1, seed: 3, batch: 64, keep_poses: 0 };
    let trials = run_2afc(&cfg, Pigment::Orange, &Still, &spec).map_err(|e| e.to_string())?;
    let left = trials.iter().filter(|t| t.familiar_left).count();
    require!(trials.len() == 1000 && left == 500, "{left} of {} trials had the familiar shoal on the left", trials.len());
    require!(trials.iter().enumerate().all(|(i, t)| t.trial == i && t.familiar_left == (i % 2 == 0)), "sides do not alternate");
    Ok(format!("{left}/{}", trials.len() - left))
}

/// Shoal poses are identical across trials and pigment assignments and never move within a trial.
pub fn shoal_stationarity() -> Outcome {
    let cfg = ExperimentConfig::default();
    let layout = afc_layout(&cfg);
    let steps = cfg.protocol.afc_steps;
    let a = afc_world(&cfg, &layout, Pigment::Orange, true, steps);
    let b = afc_world(&cfg, &layout, Pigment::Blue, false, steps);
    let shoal = |w: &WorldState| w.fish[1..].iter().map(|f| f.pose).collect::<Vec<_>>();
    require!(shoal(&a) == shoal(&b), "shoal geometry depends on the trial");
    require!(a.fish[1].body.pigment == Pigment::Orange && b.fish[12].body.pigment == Pigment::Blue, "pigments not reassigned");
    let start = shoal(&a);
    let mut w = a;
    let mut rng = RngStream::new(5);
    for s in 0..steps {
        w.step(&[(0, ActionPair::from_index(rng.below(6)))]).map_err(|e| e.to_string())?;
        require!(shoal(&w) == start, "a shoal fish moved at step {s}");
    }
    require!(w.fish[1].phase != 0.0, "shoal tails never animated");
    Ok(format!("{} shoal fish fixed for {steps} steps", start.len()))
}

/// A stand-in that always swims to the left shoal scores chance once sides alternate.
pub fn left_seeker_scores_chance() -> Outcome {
    let cfg = ExperimentConfig::default();
    let layout = afc_layout(&cfg);
    let spec = AfcSpec { trials: SEEKER_TRIALS, steps: cfg.protocol.afc_steps, seed: 11, batch: 50, keep_poses: 2 };
    let trials = run_2afc(&cfg, Pigment::Blue, &SeekPoint::new(layout.left_center), &spec).map_err(|e| e.to_string())?;
    let mean = trials.iter().map(|t| t.preference.proportion).sum::<f64>() / trials.len() as f64;
    require!((mean - 0.5).abs() <= SEEKER_TOL, "mean preference {mean:.4}");
    require!(trials.iter().all(|t| (t.preference.proportion > 0.9) == t.familiar_left), "the seeker did not reach the left shoal");
    require!(trials[0].poses.as_ref().map(Vec::len) == Some(spec.steps) && trials[2].poses.is_none(), "pose retention wrong");
    Ok(format!("{SEEKER_TRIALS} trials, mean preference {mean:.4}"))
}
