//! Anytime two-armed DETC.
//!
//! After one pull of each arm, epoch `r = 1, 2, ...` runs until `t = 2^(r+1)`.
//! Each epoch takes the most-pulled arm as `1'`, pulls the other arm `2'`
//! one at a time until the means separate under the rule with `r 2^r` in
//! place of the horizon, then commits to the empirical leader for the rest
//! of the epoch. The policy never finishes on its own; the caller cuts the
//! episode through the `limit` argument of `plan_round`.

use crate::bandit::argmax;
use crate::error::{Error, Result};
use crate::trace::{Batch, Observation};

use super::rules::anytime_stop;
use super::{remaining, ArmStats, Policy, PolicyKind, RoundGuard, RuleCheck, Stage};

#[derive(Debug, Clone, Default)]
pub struct AnytimeDetc {
    stage: Stage,
    time: u64,
    arms: [ArmStats; 2],
    leader: usize,
    commit: usize,
    checks: Vec<RuleCheck>,
    guard: RoundGuard,
}

/// Last time step of epoch `r`, `2^(r+1)`, saturating.
pub(crate) fn epoch_end(r: u32) -> u64 {
    1u64.checked_shl(r + 1).unwrap_or(u64::MAX)
}

impl AnytimeDetc {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current epoch, or 0 before the first one starts.
    pub fn epoch(&self) -> u32 {
        match self.stage {
            Stage::EpochProbe(r) | Stage::EpochCommit(r) => r,
            _ => 0,
        }
    }

    /// `1'` of the current epoch.
    pub fn leader(&self) -> usize {
        self.leader
    }

    fn start_epoch(&mut self, r: u32) {
        // Most pulled arm, ties to the lowest index.
        self.leader = if self.arms[1].count > self.arms[0].count {
            1
        } else {
            0
        };
        self.stage = Stage::EpochProbe(r);
    }

    fn advance(&mut self) {
        loop {
            match self.stage {
                Stage::Init => {
                    if self.time < 2 {
                        return;
                    }
                    self.start_epoch(1);
                }
                Stage::EpochProbe(r) => {
                    let other = 1 - self.leader;
                    let end = epoch_end(r);
                    if self.time < end {
                        let fired = anytime_stop(
                            self.arms[self.leader].mean(),
                            self.arms[other].mean(),
                            self.arms[other].count,
                            r,
                        );
                        self.checks.push(RuleCheck {
                            stage: self.stage,
                            at: self.arms[other].count,
                            fired,
                        });
                        if !fired {
                            return;
                        }
                    }
                    let means = [self.arms[self.leader].mean(), self.arms[other].mean()];
                    self.commit = if argmax(&means) == 0 {
                        self.leader
                    } else {
                        other
                    };
                    self.stage = Stage::EpochCommit(r);
                }
                Stage::EpochCommit(r) => {
                    if self.time < epoch_end(r) {
                        return;
                    }
                    self.start_epoch(r + 1);
                }
                _ => unreachable!("anytime DETC never enters {:?}", self.stage),
            }
        }
    }

    fn stage_batch(&self) -> Batch {
        match self.stage {
            Stage::Init => Batch::from_pairs([(0, 1), (1, 1)]),
            Stage::EpochProbe(_) => Batch::single(1 - self.leader, 1),
            Stage::EpochCommit(r) => Batch::single(self.commit, epoch_end(r) - self.time),
            _ => Batch::default(),
        }
    }
}

impl Policy for AnytimeDetc {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Anytime
    }

    fn num_arms(&self) -> usize {
        2
    }

    fn horizon(&self) -> Option<u64> {
        None
    }

    fn time(&self) -> u64 {
        self.time
    }

    fn stage(&self) -> Stage {
        self.stage
    }

    fn plan_round(&mut self, limit: Option<u64>) -> Result<Batch> {
        let left = remaining(self.time, None, limit)?;
        let batch = self.stage_batch().truncate_to(left);
        self.guard.issue(batch)
    }

    fn absorb(&mut self, batch: &Batch, obs: &Observation) -> Result<()> {
        self.guard.settle(batch, obs)?;
        for (req, out) in batch.requests.iter().zip(&obs.outcomes) {
            let slot = self
                .arms
                .get_mut(req.arm)
                .ok_or_else(|| Error::Protocol(format!("arm {} out of range", req.arm)))?;
            slot.add(out.count, out.reward_sum);
            self.time += out.count;
        }
        self.advance();
        Ok(())
    }

    fn committed_arm(&self) -> Option<usize> {
        matches!(self.stage, Stage::EpochCommit(_)).then_some(self.commit)
    }

    fn rule_checks(&self) -> &[RuleCheck] {
        &self.checks
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Outcome;

    fn feed(p: &mut AnytimeDetc, cut: u64, rewards: [f64; 2]) -> Batch {
        let b = p.plan_round(Some(cut)).unwrap();
        let obs = Observation {
            outcomes: b
                .requests
                .iter()
                .map(|r| Outcome {
                    count: r.count,
                    reward_sum: rewards[r.arm] * r.count as f64,
                })
                .collect(),
        };
        p.absorb(&b, &obs).unwrap();
        b
    }

    #[test]
    fn epochs_end_on_powers_of_two() {
        let mut p = AnytimeDetc::new();
        assert!(p.plan_round(None).is_err());
        let cut = 1 << 12;
        let mut ends = Vec::new();
        let mut last_epoch = 0;
        while p.time() < cut {
            if p.epoch() != last_epoch {
                ends.push(p.time());
                last_epoch = p.epoch();
            }
            feed(&mut p, cut, [1.0, 0.0]);
        }
        assert_eq!(ends, (1..=11).map(|r| 1u64 << r).collect::<Vec<_>>());
        assert_eq!(p.time(), cut);
        assert!(!p.is_done());
    }

    #[test]
    fn leader_is_most_pulled_arm() {
        let mut p = AnytimeDetc::new();
        // Cut inside the commit phase of epoch 9.
        let cut = 1000;
        while p.time() < cut {
            feed(&mut p, cut, [0.0, 1.0]);
        }
        // Arm 1 dominates the commits, so it leads later epochs.
        assert_eq!(p.leader(), 1);
        assert_eq!(p.committed_arm(), Some(1));
    }
}
