//! K-armed DETC.
//!
//! Stage I sweeps all arms while `t <= K sqrt(ln T)`. Stage II pulls the
//! leader `1'` exactly `ceil(ln^2 T)` times and freezes the mean of those
//! pulls as `mu'`. Stage III probes the other arms one after another, in
//! ascending index, each with a fresh mean, until it separates from `mu'`;
//! a probe that reaches `ceil(ln^2 T)` pulls marks the run as failed. Stage IV
//! commits to `1'` if nothing failed and `mu'` beats every probe mean, and
//! otherwise re-explores every arm `ceil(ln^2 T)` times and commits to the
//! best arm of that sweep.

use crate::bandit::argmax;
use crate::error::{Error, Result};
use crate::trace::{Batch, Observation};

use super::params::ln_pow_ceil;
use super::rules::{stop_stage3_unknown, Stage3Rule};
use super::{remaining, ArmStats, Policy, PolicyKind, RoundGuard, RuleCheck, Stage};

#[derive(Debug, Clone)]
pub struct KArmDetc {
    horizon: u64,
    stage: Stage,
    time: u64,
    arms: Vec<ArmStats>,
    sweep_limit: f64,
    cap: u64,
    chosen: usize,
    stage2: ArmStats,
    mu_prime: f64,
    /// Non-chosen arms in ascending index.
    probe_order: Vec<usize>,
    /// Position in `probe_order` of the arm being probed.
    probe_pos: usize,
    probes: Vec<ArmStats>,
    failed: bool,
    fallback: Vec<ArmStats>,
    commit: Option<usize>,
    checks: Vec<RuleCheck>,
    guard: RoundGuard,
}

impl KArmDetc {
    pub fn new(horizon: u64, arms: usize) -> Result<Self> {
        if arms < 2 {
            return Err(Error::Config(format!(
                "K-armed DETC needs K >= 2, got {arms}"
            )));
        }
        if horizon < 2 * arms as u64 {
            return Err(Error::Config(format!(
                "K-armed DETC needs a horizon of at least 2K = {}, got {horizon}",
                2 * arms
            )));
        }
        Ok(Self {
            horizon,
            stage: Stage::Init,
            time: 0,
            arms: vec![ArmStats::default(); arms],
            sweep_limit: arms as f64 * (horizon as f64).ln().sqrt(),
            cap: ln_pow_ceil(horizon, 2).max(1),
            chosen: 0,
            stage2: ArmStats::default(),
            mu_prime: 0.0,
            probe_order: Vec::new(),
            probe_pos: 0,
            probes: vec![ArmStats::default(); arms],
            failed: false,
            fallback: vec![ArmStats::default(); arms],
            commit: None,
            checks: Vec::new(),
            guard: RoundGuard::default(),
        })
    }

    /// Pull budget of stage II, of each probe, and of each arm in the fallback.
    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn failed(&self) -> bool {
        self.failed
    }

    pub fn chosen_arm(&self) -> Option<usize> {
        (self.stage.rank() >= Stage::Commit.rank()).then_some(self.chosen)
    }

    /// Stage III pulls and sums per arm (zero for arms not probed).
    pub fn probe_stats(&self) -> &[ArmStats] {
        &self.probes
    }

    /// Arm currently being probed in stage III.
    pub fn probed_arm(&self) -> Option<usize> {
        (self.stage == Stage::Probe).then(|| self.probe_order[self.probe_pos])
    }

    fn advance(&mut self) {
        loop {
            if self.time >= self.horizon {
                self.stage = Stage::Done;
                return;
            }
            match self.stage {
                Stage::Init | Stage::Explore => {
                    // Sweep again while t <= K sqrt(ln T).
                    if self.time as f64 <= self.sweep_limit {
                        self.stage = Stage::Explore;
                        return;
                    }
                    let means: Vec<f64> = self.arms.iter().map(ArmStats::mean).collect();
                    self.chosen = argmax(&means);
                    self.stage = Stage::Commit;
                }
                Stage::Commit => {
                    if self.stage2.count < self.cap {
                        return;
                    }
                    self.mu_prime = self.stage2.mean();
                    self.probe_order = (0..self.arms.len()).filter(|&i| i != self.chosen).collect();
                    self.probe_pos = 0;
                    self.stage = Stage::Probe;
                }
                Stage::Probe => {
                    let arm = self.probe_order[self.probe_pos];
                    let stats = self.probes[arm];
                    if stats.count == 0 {
                        return;
                    }
                    let fired = stop_stage3_unknown(
                        self.mu_prime,
                        stats.mean(),
                        stats.count,
                        self.horizon,
                        Stage3Rule::Plain,
                    );
                    self.checks.push(RuleCheck {
                        stage: Stage::Probe,
                        at: stats.count,
                        fired,
                    });
                    if stats.count >= self.cap {
                        self.failed = true;
                        self.enter_final();
                    } else if fired {
                        self.probe_pos += 1;
                        if self.probe_pos == self.probe_order.len() {
                            self.enter_final();
                        }
                    } else {
                        return;
                    }
                }
                Stage::FallbackExplore => {
                    if self.fallback.iter().any(|s| s.count < self.cap) {
                        return;
                    }
                    let means: Vec<f64> = self.fallback.iter().map(ArmStats::mean).collect();
                    self.commit = Some(argmax(&means));
                    self.stage = Stage::FallbackCommit;
                }
                Stage::FinalCommit | Stage::FallbackCommit => return,
                Stage::EpochProbe(_) | Stage::EpochCommit(_) | Stage::Sequential | Stage::Done => {
                    unreachable!("K-armed DETC never enters {:?}", self.stage)
                }
            }
        }
    }

    fn enter_final(&mut self) {
        let best_probe = self
            .probe_order
            .iter()
            .map(|&i| self.probes[i].mean())
            .fold(f64::NEG_INFINITY, f64::max);
        if !self.failed && self.mu_prime >= best_probe {
            self.commit = Some(self.chosen);
            self.stage = Stage::FinalCommit;
        } else {
            self.stage = Stage::FallbackExplore;
        }
    }

    fn stage_batch(&self) -> Batch {
        let k = self.arms.len();
        match self.stage {
            Stage::Init | Stage::Explore => Batch::from_pairs((0..k).map(|i| (i, 1))),
            Stage::Commit => Batch::single(self.chosen, self.cap - self.stage2.count),
            Stage::Probe => Batch::single(self.probe_order[self.probe_pos], 1),
            Stage::FallbackExplore => {
                Batch::from_pairs((0..k).map(|i| (i, self.cap - self.fallback[i].count)))
            }
            Stage::FinalCommit | Stage::FallbackCommit => {
                Batch::single(self.commit.unwrap_or(self.chosen), u64::MAX)
            }
            _ => Batch::default(),
        }
    }
}

impl Policy for KArmDetc {
    fn kind(&self) -> PolicyKind {
        PolicyKind::KArm
    }

    fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn horizon(&self) -> Option<u64> {
        Some(self.horizon)
    }

    fn time(&self) -> u64 {
        self.time
    }

    fn stage(&self) -> Stage {
        self.stage
    }

    fn plan_round(&mut self, limit: Option<u64>) -> Result<Batch> {
        if self.stage == Stage::Done {
            return Err(Error::Protocol("detc_k has already finished".into()));
        }
        let left = remaining(self.time, Some(self.horizon), limit)?;
        let batch = self.stage_batch().truncate_to(left);
        self.guard.issue(batch)
    }

    fn absorb(&mut self, batch: &Batch, obs: &Observation) -> Result<()> {
        self.guard.settle(batch, obs)?;
        for (req, out) in batch.requests.iter().zip(&obs.outcomes) {
            if req.arm >= self.arms.len() {
                return Err(Error::Protocol(format!("arm {} out of range", req.arm)));
            }
            self.arms[req.arm].add(out.count, out.reward_sum);
            self.time += out.count;
            match self.stage {
                Stage::Commit => self.stage2.add(out.count, out.reward_sum),
                Stage::Probe => self.probes[req.arm].add(out.count, out.reward_sum),
                Stage::FallbackExplore => self.fallback[req.arm].add(out.count, out.reward_sum),
                _ => {}
            }
        }
        self.advance();
        Ok(())
    }

    fn committed_arm(&self) -> Option<usize> {
        match self.stage {
            Stage::Commit => Some(self.chosen),
            Stage::FinalCommit | Stage::FallbackCommit | Stage::Done => self.commit,
            _ => None,
        }
    }

    fn rule_checks(&self) -> &[RuleCheck] {
        &self.checks
    }
}
