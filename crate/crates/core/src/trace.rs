//! Rounds, observations and per-episode traces.
//!
//! One `plan_round`/`absorb` cycle is one round: the policy commits to a
//! [`Batch`] of pulls and sees nothing until the whole batch has been
//! answered by an [`Observation`].

use serde::{Deserialize, Serialize};

use crate::bandit::BanditInstance;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub arm: usize,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Batch {
    pub requests: Vec<Request>,
}

impl Batch {
    pub fn single(arm: usize, count: u64) -> Self {
        Self {
            requests: vec![Request { arm, count }],
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, u64)>) -> Self {
        Self {
            requests: pairs
                .into_iter()
                .map(|(arm, count)| Request { arm, count })
                .collect(),
        }
    }

    pub fn total(&self) -> u64 {
        self.requests.iter().map(|r| r.count).sum()
    }

    /// Drops zero-count requests and trims the tail so that at most
    /// `budget` pulls remain.
    pub fn truncate_to(mut self, budget: u64) -> Self {
        let mut left = budget;
        for r in &mut self.requests {
            r.count = r.count.min(left);
            left -= r.count;
        }
        self.requests.retain(|r| r.count > 0);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub count: u64,
    pub reward_sum: f64,
}

/// Aggregated outcomes for a batch, one entry per request, in order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Observation {
    pub outcomes: Vec<Outcome>,
}

impl Observation {
    /// Checks that this observation answers `batch` request by request.
    pub fn check_matches(&self, batch: &Batch) -> Result<()> {
        if self.outcomes.len() != batch.requests.len() {
            return Err(Error::Protocol(format!(
                "observation has {} entries for a batch of {} requests",
                self.outcomes.len(),
                batch.requests.len()
            )));
        }
        for (i, (o, r)) in self.outcomes.iter().zip(&batch.requests).enumerate() {
            if o.count != r.count {
                return Err(Error::Protocol(format!(
                    "request {i} asked for {} pulls but {} were observed",
                    r.count, o.count
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub arm: usize,
    pub count: u64,
    pub reward_sum: f64,
    pub round_id: u64,
}

/// Record of an episode: what was pulled, how often, and in which round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    horizon: u64,
    segments: Vec<Segment>,
    pulled: u64,
}

impl Trace {
    pub fn new(horizon: u64) -> Self {
        Self {
            horizon,
            segments: Vec::new(),
            pulled: 0,
        }
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn pulled(&self) -> u64 {
        self.pulled
    }

    pub fn is_complete(&self) -> bool {
        self.pulled == self.horizon
    }

    /// Appends one segment. Round ids must never decrease.
    pub fn push(&mut self, segment: Segment) {
        debug_assert!(segment.count > 0);
        debug_assert!(self
            .segments
            .last()
            .is_none_or(|s| s.round_id <= segment.round_id));
        self.pulled += segment.count;
        self.segments.push(segment);
    }

    /// Total pulls of each arm, for `num_arms` arms.
    pub fn pulls_per_arm(&self, num_arms: usize) -> Vec<u64> {
        let mut counts = vec![0; num_arms];
        for s in &self.segments {
            counts[s.arm] += s.count;
        }
        counts
    }

    fn check_complete(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::Accounting {
                pulled: self.pulled,
                horizon: self.horizon,
            })
        }
    }
}

/// Gap-weighted pull count, `sum_i gap_i * pulls_i`.
pub fn pseudo_regret(trace: &Trace, instance: &BanditInstance) -> Result<f64> {
    trace.check_complete()?;
    let gaps = instance.gaps();
    let mut per_arm = vec![0u64; gaps.len()];
    for s in trace.segments() {
        let slot = per_arm.get_mut(s.arm).ok_or_else(|| {
            Error::InvalidInstance(format!(
                "trace pulls arm {} of a {}-armed instance",
                s.arm,
                gaps.len()
            ))
        })?;
        *slot += s.count;
    }
    Ok(per_arm.iter().zip(gaps).map(|(&n, g)| n as f64 * g).sum())
}

/// Number of plan/absorb cycles recorded in the trace.
pub fn round_count(trace: &Trace) -> u64 {
    let mut rounds = 0;
    let mut last = None;
    for s in trace.segments() {
        if last != Some(s.round_id) {
            rounds += 1;
            last = Some(s.round_id);
        }
    }
    rounds
}
