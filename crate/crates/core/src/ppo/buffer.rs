use crate::error::{ensure, Result};
use crate::ppo::gae::compute_gae;
use crate::render::Observation;
use crate::world::ActionPair;

#[derive(Debug, Clone)]
pub struct Transition {
    pub obs: Observation,
    pub action: ActionPair,
    /// Joint log-probability under the policy that acted.
    pub log_prob: f64,
    pub value: f64,
}

/// A closed run of consecutive transitions from one episode.
#[derive(Debug, Clone)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    /// Observation that followed the last transition.
    pub next_obs: Observation,
    /// Value of `next_obs`; ignored when `terminal`.
    pub bootstrap: f64,
    pub terminal: bool,
}

/// Fixed-capacity on-policy storage, cut into segments of at most `horizon` steps.
///
/// A segment is closed at the horizon, at an episode boundary, or when the
/// buffer reaches capacity; the buffer is ready for an update once it is full
/// and its last segment is closed.
#[derive(Debug, Clone)]
pub struct RolloutBuffer {
    capacity: usize,
    horizon: usize,
    steps: Vec<Transition>,
    rewards: Option<Vec<f64>>,
    segments: Vec<Segment>,
    open_start: usize,
}

impl RolloutBuffer {
    pub fn new(capacity: usize, horizon: usize) -> Self {
        assert!(capacity >= 1 && horizon >= 1);
        Self { capacity, horizon, steps: Vec::with_capacity(capacity), rewards: None, segments: Vec::new(), open_start: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.steps.len() == self.capacity && self.open_start == self.capacity
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.steps
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        ensure!(self.steps.len() < self.capacity, Contract, "rollout buffer is full");
        ensure!(self.steps.len() - self.open_start < self.horizon, Contract, "segment reached the horizon and must be closed");
        self.steps.push(t);
        Ok(())
    }

    /// Whether the open segment must be closed after the latest step.
    pub fn must_close(&self, episode_done: bool) -> bool {
        let open = self.steps.len() - self.open_start;
        open > 0 && (episode_done || open == self.horizon || self.steps.len() == self.capacity)
    }

    pub fn close_segment(&mut self, next_obs: Observation, bootstrap: f64, terminal: bool) -> Result<()> {
        ensure!(self.steps.len() > self.open_start, Contract, "closing an empty segment");
        self.segments.push(Segment { start: self.open_start, end: self.steps.len(), next_obs, bootstrap, terminal });
        self.open_start = self.steps.len();
        Ok(())
    }

    /// Observation following transition `i`.
    pub fn next_obs(&self, i: usize) -> &Observation {
        let seg = self.segment_of(i);
        if i + 1 < seg.end {
            &self.steps[i + 1].obs
        } else {
            &seg.next_obs
        }
    }

    fn segment_of(&self, i: usize) -> &Segment {
        let k = self.segments.partition_point(|s| s.end <= i);
        &self.segments[k]
    }

    pub fn set_rewards(&mut self, rewards: Vec<f64>) -> Result<()> {
        ensure!(self.is_full(), Contract, "rewards are assigned to a full buffer only");
        ensure!(rewards.len() == self.steps.len(), Dimension, "{} rewards for {} transitions", rewards.len(), self.steps.len());
        self.rewards = Some(rewards);
        Ok(())
    }

    pub fn rewards(&self) -> Option<&[f64]> {
        self.rewards.as_deref()
    }

    /// Per-transition advantages and value targets, segment by segment.
    pub fn advantages(&self, gamma: f64, lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let rewards = self.rewards.as_ref().ok_or_else(|| crate::Error::Contract("rewards not assigned".into()))?;
        let mut adv = Vec::with_capacity(self.steps.len());
        let mut ret = Vec::with_capacity(self.steps.len());
        for seg in &self.segments {
            let values: Vec<f64> = self.steps[seg.start..seg.end].iter().map(|t| t.value).collect();
            let boot = if seg.terminal { 0.0 } else { seg.bootstrap };
            let (a, r) = compute_gae(&rewards[seg.start..seg.end], &values, boot, gamma, lambda)?;
            adv.extend(a);
            ret.extend(r);
        }
        Ok((adv, ret))
    }

    pub fn clear(&mut self) {
        self.steps.clear();
        self.segments.clear();
        self.rewards = None;
        self.open_start = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tr(v: f32) -> Transition {
        Transition { obs: Observation::filled([v, v, v]), action: ActionPair::IDLE, log_prob: -1.0, value: 0.0 }
    }

    #[test]
    fn segments_close_at_horizon_and_capacity() {
        let mut b = RolloutBuffer::new(5, 2);
        let mut closed = Vec::new();
        for i in 0..5 {
            b.push(tr(i as f32 / 10.0)).unwrap();
            if b.must_close(false) {
                b.close_segment(Observation::white(), 0.0, false).unwrap();
                closed.push(b.len());
            }
        }
        assert_eq!(closed, vec![2, 4, 5]);
        assert!(b.is_full());
        assert!(b.push(tr(0.0)).is_err());
        assert_eq!(b.next_obs(0), &b.transitions()[1].obs);
        assert_eq!(b.next_obs(1), &Observation::white());
        b.clear();
        assert!(b.is_empty() && !b.is_full());
    }

    #[test]
    fn push_past_horizon_without_close_is_an_error() {
        let mut b = RolloutBuffer::new(8, 2);
        b.push(tr(0.0)).unwrap();
        b.push(tr(0.0)).unwrap();
        assert!(b.push(tr(0.0)).is_err());
    }

    #[test]
    fn advantages_respect_segment_bootstraps() {
        let mut b = RolloutBuffer::new(3, 2);
        for _ in 0..2 {
            b.push(tr(0.0)).unwrap();
        }
        b.close_segment(Observation::white(), 10.0, false).unwrap();
        b.push(tr(0.0)).unwrap();
        b.close_segment(Observation::white(), 10.0, true).unwrap();
        b.set_rewards(vec![0.0, 0.0, 1.0]).unwrap();
        let (adv, ret) = b.advantages(1.0, 1.0).unwrap();
        assert_eq!(adv, vec![10.0, 10.0, 1.0]);
        assert_eq!(ret, adv);
    }
}
