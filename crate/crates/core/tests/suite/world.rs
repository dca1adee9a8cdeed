//! World stepping contracts.

use super::{run_property, Outcome};
use fishtank::render::Pigment;
use fishtank::world::{ActionPair, Arena, Kinematics, WorldState};
use fishtank::RngStream;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub const BOUNDED_STEPS: usize = 10_000;
pub const HEADING_RESETS: usize = 10_000;
pub const HEADING_BINS: usize = 36;

fn arenas() -> [Arena; 3] {
    [Arena::Cup { radius: 5.0 }, Arena::Tank { length: 30.0, width: 10.0 }, Arena::Tank { length: 14.0, width: 14.0 }]
}

fn world(arena: Arena, agents: usize, len: usize) -> WorldState {
    let mut w = WorldState::new(arena, len, Kinematics::default());
    for k in 0..agents {
        w.add_agent(if k % 2 == 0 { Pigment::Orange } else { Pigment::Blue });
    }
    w
}

fn random_actions(w: &WorldState, rng: &mut RngStream) -> Vec<(usize, ActionPair)> {
    w.agents().map(|i| (i, ActionPair::from_index(rng.below(ActionPair::COUNT)))).collect()
}

/// Random walks of 10k steps never leave the walls, and headings stay in [0, 360).
pub fn bounded() -> Outcome {
    let mut checked = 0usize;
    for (a, arena) in arenas().into_iter().enumerate() {
        for agents in [1, 4, 8] {
            let mut w = world(arena, agents, BOUNDED_STEPS);
            let mut rng = RngStream::derive(31, "bounded", (a * 10 + agents) as u64);
            w.reset_episode(&mut rng);
            // Long forward runs pin fish against the walls.
            let mut bias = ActionPair::from_index(0);
            for s in 0..BOUNDED_STEPS {
                if s % 500 == 0 {
                    bias = ActionPair::from_index(rng.below(ActionPair::COUNT));
                }
                let acts: Vec<_> = w.agents().map(|i| (i, if rng.uniform() < 0.7 { bias } else { ActionPair::from_index(rng.below(6)) })).collect();
                w.step(&acts).map_err(|e| e.to_string())?;
                for f in &w.fish {
                    require!(arena.contains(&f.pose, f.body.half_length()), "{arena:?} step {s}: {:?} outside", f.pose);
                    require!((0.0..360.0).contains(&f.pose.heading), "heading {} not normalized", f.pose.heading);
                }
                checked += agents;
            }
        }
    }
    Ok(format!("{checked} fish-steps inside the walls"))
}

/// Shuffling the order of the action list leaves the next state bit-identical.
pub fn permutation_invariant() -> Outcome {
    run_property(128, (any::<u64>(), 2usize..=8, 0usize..3, 1usize..50), |(seed, agents, arena, steps)| {
        let mut rng = RngStream::new(seed);
        let mut w = world(arenas()[arena], agents, 1000);
        w.reset_episode(&mut rng);
        for _ in 0..steps {
            let acts = random_actions(&w, &mut rng);
            let shuffled: Vec<_> = rng.permutation(acts.len()).into_iter().map(|k| acts[k]).collect();
            let mut a = w.clone();
            let mut b = w.clone();
            a.step(&acts).unwrap();
            b.step(&shuffled).unwrap();
            prop_assert_eq!(&a, &b);
            w = a;
        }
        Ok(())
    })?;
    Ok("128 random worlds".into())
}

fn trajectory(seed: u64) -> Vec<u64> {
    let mut w = world(Arena::Cup { radius: 5.0 }, 4, 250);
    let mut reset = RngStream::derive(seed, "reset", 0);
    let mut act = RngStream::derive(seed, "act", 0);
    w.reset_episode(&mut reset);
    let mut bits = Vec::new();
    for _ in 0..2000 {
        let acts = random_actions(&w, &mut act);
        if w.step(&acts).unwrap() {
            w.reset_episode(&mut reset);
        }
        for f in &w.fish {
            bits.extend([f.pose.x.to_bits(), f.pose.z.to_bits(), f.pose.heading.to_bits(), f.phase.to_bits()]);
        }
    }
    bits
}

/// The same seed replays the same trajectory bit for bit; another seed does not.
pub fn reproducible() -> Outcome {
    for seed in [0, 7, 12345] {
        require!(trajectory(seed) == trajectory(seed), "seed {seed} diverged on replay");
    }
    require!(trajectory(1) != trajectory(2), "seeds 1 and 2 gave the same trajectory");
    Ok("3 seeds x 2000 steps x 4 fish replayed exactly".into())
}

/// Reset headings are uniform on [0, 360) by a chi-square goodness-of-fit test.
pub fn reset_headings_uniform() -> Outcome {
    let mut w = world(Arena::Cup { radius: 5.0 }, 1, 10);
    let mut rng = RngStream::new(41);
    let mut counts = [0usize; HEADING_BINS];
    for _ in 0..HEADING_RESETS {
        w.reset_episode(&mut rng);
        counts[(w.fish[0].pose.heading / (360.0 / HEADING_BINS as f64)) as usize] += 1;
    }
    let expected = HEADING_RESETS as f64 / HEADING_BINS as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((HEADING_BINS - 1) as f64).unwrap().cdf(chi2);
    require!(p > 0.01, "chi-square {chi2:.1} on {} df, p = {p:.4}", HEADING_BINS - 1);
    Ok(format!("chi-square {chi2:.1}, p = {p:.3}"))
}
