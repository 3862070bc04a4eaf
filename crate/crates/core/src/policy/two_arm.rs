//! Two-armed DETC variants as one stage machine.
//!
//! All two-armed variants share the same skeleton: an initialization pull of
//! each arm, a uniform exploration stage, a commit stage that brings the
//! empirical leader `1'` up to a target pull count, a probe stage that pulls
//! only the other arm `2'` until its fresh mean separates from the frozen
//! mean `mu'` of `1'`, and a final commit. The variants differ in their
//! stopping rules, in which times those rules may be checked, and (for the
//! minimax variant) in a re-exploration fallback.

use crate::bandit::argmax;
use crate::error::{Error, Result};
use crate::trace::{Batch, Observation};

use super::grid::{
    grid_known, grid_unknown_stage1, grid_unknown_stage3, stage3_lead_and_cap, QueryGrid,
};
use super::params::{known_gap_params, known_gap_params_forced, ln_pow_ceil};
use super::rules::{
    fallback_stop, stop_stage1_unknown, stop_stage3_known, stop_stage3_unknown, Stage3Rule,
};
use super::{remaining, ArmStats, Policy, PolicyKind, RoundGuard, RuleCheck, Stage};

#[derive(Debug, Clone)]
enum Mode {
    Known {
        delta: f64,
        epsilon: f64,
        stage1_pulls: u64,
        /// Stage III check times; `None` checks after every pull.
        grid: Option<QueryGrid>,
    },
    Unknown,
    Minimax {
        cap: u64,
    },
    BatchedUnknown {
        stage1_grid: QueryGrid,
        lead: u64,
        cap: u64,
        /// Built from the gap estimate once the first `lead` probe pulls are in.
        stage3_grid: Option<QueryGrid>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ProbeVerdict {
    Continue,
    Stop,
    Fallback,
}

/// Known-gap, unknown-gap, minimax and batched two-armed DETC.
#[derive(Debug, Clone)]
pub struct TwoArmDetc {
    kind: PolicyKind,
    mode: Mode,
    horizon: u64,
    stage: Stage,
    time: u64,
    arms: [ArmStats; 2],
    stage2_target: u64,
    chosen: usize,
    mu_prime: f64,
    probe: ArmStats,
    fallback: [ArmStats; 2],
    commit: Option<usize>,
    checks: Vec<RuleCheck>,
    guard: RoundGuard,
}

impl TwoArmDetc {
    /// Known-gap DETC. With `batched`, stage III is checked only on the
    /// known-gap query grid. `force` runs outside `T*delta^2 >= 1`
    /// (not supported for the batched variant, whose grid needs it).
    pub fn known_gap(horizon: u64, delta: f64, batched: bool, force: bool) -> Result<Self> {
        check_horizon(horizon)?;
        let params = if force {
            known_gap_params_forced(horizon, delta)?
        } else {
            known_gap_params(horizon, delta)?
        };
        let grid = if batched {
            Some(grid_known(horizon, delta, params.epsilon)?)
        } else {
            None
        };
        let kind = if batched {
            PolicyKind::BatchedKnown
        } else {
            PolicyKind::KnownGap
        };
        let mode = Mode::Known {
            delta,
            epsilon: params.epsilon,
            // The initialization pull already counts towards stage I.
            stage1_pulls: params.stage1_pulls.max(1),
            grid,
        };
        Ok(Self::with_mode(kind, mode, horizon, params.stage2_target))
    }

    /// Unknown-gap DETC with stage II target `ceil(ln^2 T)`.
    pub fn unknown_gap(horizon: u64) -> Result<Self> {
        check_horizon(horizon)?;
        let target = ln_pow_ceil(horizon, 2).max(1);
        Ok(Self::with_mode(
            PolicyKind::UnknownGap,
            Mode::Unknown,
            horizon,
            target,
        ))
    }

    /// Minimax variant: stage II target `ceil(ln^10 T)` (usually cut by the
    /// horizon), stage III capped at `ceil(ln^2 T)` pulls, and a paired
    /// re-exploration when the cap is hit.
    pub fn minimax(horizon: u64) -> Result<Self> {
        check_horizon(horizon)?;
        let target = ln_pow_ceil(horizon, 10).max(1);
        let cap = ln_pow_ceil(horizon, 2).max(1);
        Ok(Self::with_mode(
            PolicyKind::Minimax,
            Mode::Minimax { cap },
            horizon,
            target,
        ))
    }

    /// Unknown-gap DETC with stage I and stage III checked only on grids.
    pub fn batched_unknown(horizon: u64) -> Result<Self> {
        check_horizon(horizon)?;
        let (lead, cap) = stage3_lead_and_cap(horizon);
        let mode = Mode::BatchedUnknown {
            stage1_grid: grid_unknown_stage1(horizon),
            lead,
            cap,
            stage3_grid: None,
        };
        let target = ln_pow_ceil(horizon, 2).max(1);
        Ok(Self::with_mode(
            PolicyKind::BatchedUnknown,
            mode,
            horizon,
            target,
        ))
    }

    fn with_mode(kind: PolicyKind, mode: Mode, horizon: u64, stage2_target: u64) -> Self {
        Self {
            kind,
            mode,
            horizon,
            stage: Stage::Init,
            time: 0,
            arms: [ArmStats::default(); 2],
            stage2_target,
            chosen: 0,
            mu_prime: 0.0,
            probe: ArmStats::default(),
            fallback: [ArmStats::default(); 2],
            commit: None,
            checks: Vec::new(),
            guard: RoundGuard::default(),
        }
    }

    /// Target pull count of `1'` at the end of stage II.
    pub fn stage2_target(&self) -> u64 {
        self.stage2_target
    }

    /// Per-arm pull count at the end of stage I (known-gap variants only).
    pub fn stage1_pulls(&self) -> Option<u64> {
        match self.mode {
            Mode::Known { stage1_pulls, .. } => Some(stage1_pulls),
            _ => None,
        }
    }

    /// Arm chosen at the start of stage II, once stage II has begun.
    pub fn chosen_arm(&self) -> Option<usize> {
        (self.stage.rank() >= Stage::Commit.rank()).then_some(self.chosen)
    }

    /// Frozen stage II mean of `1'`, once the probe stage has begun.
    pub fn mu_prime(&self) -> Option<f64> {
        (self.stage.rank() >= Stage::Probe.rank()).then_some(self.mu_prime)
    }

    /// Pulls and running sum of `2'` within the probe stage.
    pub fn probe_stats(&self) -> ArmStats {
        self.probe
    }

    pub fn arm_stats(&self) -> [ArmStats; 2] {
        self.arms
    }

    /// Stage III grid in use, if this variant has one (and it is known yet).
    pub fn stage3_grid(&self) -> Option<QueryGrid> {
        match &self.mode {
            Mode::Known { grid, .. } => *grid,
            Mode::BatchedUnknown { stage3_grid, .. } => *stage3_grid,
            _ => None,
        }
    }

    /// Stage I grid of the batched unknown-gap variant.
    pub fn stage1_grid(&self) -> Option<QueryGrid> {
        match &self.mode {
            Mode::BatchedUnknown { stage1_grid, .. } => Some(*stage1_grid),
            _ => None,
        }
    }

    fn other(&self) -> usize {
        1 - self.chosen
    }

    fn log(&mut self, stage: Stage, at: u64, fired: bool) {
        self.checks.push(RuleCheck { stage, at, fired });
    }

    /// Moves through as many stages as possible without new data.
    fn advance(&mut self) {
        loop {
            if self.time >= self.horizon {
                self.stage = Stage::Done;
                return;
            }
            match self.stage {
                Stage::Init | Stage::FinalCommit | Stage::FallbackCommit => return,
                Stage::Explore => {
                    if !self.explore_done() {
                        return;
                    }
                    self.chosen = argmax(&[self.arms[0].mean(), self.arms[1].mean()]);
                    self.stage = Stage::Commit;
                }
                Stage::Commit => {
                    if self.arms[self.chosen].count < self.stage2_target {
                        return;
                    }
                    self.mu_prime = self.arms[self.chosen].mean();
                    self.probe = ArmStats::default();
                    self.stage = Stage::Probe;
                }
                Stage::Probe => match self.probe_verdict() {
                    ProbeVerdict::Continue => return,
                    ProbeVerdict::Stop => {
                        let arm = if self.arms[self.chosen].mean() >= self.probe.mean() {
                            self.chosen
                        } else {
                            self.other()
                        };
                        self.commit = Some(arm);
                        self.stage = Stage::FinalCommit;
                    }
                    ProbeVerdict::Fallback => {
                        self.fallback = [ArmStats::default(); 2];
                        self.stage = Stage::FallbackExplore;
                    }
                },
                Stage::FallbackExplore => {
                    let s = self.fallback[0].count.min(self.fallback[1].count);
                    if s == 0 || self.fallback[0].count != self.fallback[1].count {
                        return;
                    }
                    let (p1, p2) = (self.fallback[0].mean(), self.fallback[1].mean());
                    let fired = fallback_stop(p1, p2, s, self.horizon);
                    self.log(Stage::FallbackExplore, s, fired);
                    if !fired {
                        return;
                    }
                    self.commit = Some(if p1 >= p2 { 0 } else { 1 });
                    self.stage = Stage::FallbackCommit;
                }
                Stage::EpochProbe(_) | Stage::EpochCommit(_) | Stage::Sequential | Stage::Done => {
                    unreachable!("two-armed DETC never enters {:?}", self.stage)
                }
            }
        }
    }

    /// Evaluates the stage I exit condition at the current time.
    fn explore_done(&mut self) -> bool {
        let t = self.time;
        let (m0, m1) = (self.arms[0].mean(), self.arms[1].mean());
        match &self.mode {
            Mode::Known { stage1_pulls, .. } => {
                self.arms[0].count >= *stage1_pulls && self.arms[1].count >= *stage1_pulls
            }
            Mode::Unknown | Mode::Minimax { .. } => {
                let fired = stop_stage1_unknown(m0, m1, t, self.stage2_target);
                self.log(Stage::Explore, t, fired);
                fired
            }
            Mode::BatchedUnknown { stage1_grid, .. } => {
                if !stage1_grid.contains(t) {
                    return false;
                }
                let fired = stop_stage1_unknown(m0, m1, t, self.stage2_target);
                self.log(Stage::Explore, t, fired);
                fired
            }
        }
    }

    /// Evaluates the stage III exit condition after `t2` probe pulls.
    fn probe_verdict(&mut self) -> ProbeVerdict {
        let t2 = self.probe.count;
        let theta = self.probe.mean();
        let mu = self.mu_prime;
        let horizon = self.horizon;
        let verdict = match &mut self.mode {
            Mode::Known {
                delta,
                epsilon,
                grid,
                ..
            } => {
                if grid.is_some_and(|g| !g.contains(t2)) {
                    return ProbeVerdict::Continue;
                }
                let fired = stop_stage3_known(mu, theta, t2, *delta, *epsilon, horizon);
                (Some(fired), fired, false)
            }
            Mode::Unknown => {
                if t2 == 0 {
                    return ProbeVerdict::Continue;
                }
                let fired = stop_stage3_unknown(mu, theta, t2, horizon, Stage3Rule::Plain);
                (Some(fired), fired, false)
            }
            Mode::Minimax { cap } => {
                if t2 == 0 {
                    return ProbeVerdict::Continue;
                }
                let fired = stop_stage3_unknown(mu, theta, t2, horizon, Stage3Rule::EScaled);
                (Some(fired), fired, t2 >= *cap)
            }
            Mode::BatchedUnknown {
                lead,
                cap,
                stage3_grid,
                ..
            } => {
                if t2 == 0 {
                    return ProbeVerdict::Continue;
                }
                if stage3_grid.is_none() && t2 >= *lead {
                    let delta_hat = (mu - theta).abs();
                    *stage3_grid = Some(
                        grid_unknown_stage3(horizon, delta_hat)
                            .unwrap_or_else(|_| QueryGrid::lead_then_cap(*lead, *cap)),
                    );
                }
                let on_grid = stage3_grid.is_some_and(|g| g.contains(t2));
                let fired =
                    on_grid && stop_stage3_unknown(mu, theta, t2, horizon, Stage3Rule::Plain);
                (on_grid.then_some(fired), fired || t2 >= *cap, false)
            }
        };
        let (checked, stop, capped) = verdict;
        if let Some(fired) = checked {
            self.log(Stage::Probe, t2, fired);
        }
        if capped {
            ProbeVerdict::Fallback
        } else if stop {
            ProbeVerdict::Stop
        } else {
            ProbeVerdict::Continue
        }
    }

    fn stage_batch(&self) -> Batch {
        let pair = Batch::from_pairs([(0, 1), (1, 1)]);
        match self.stage {
            Stage::Init | Stage::FallbackExplore => pair,
            Stage::Explore => match &self.mode {
                Mode::Known { stage1_pulls, .. } => Batch::from_pairs([
                    (0, stage1_pulls.saturating_sub(self.arms[0].count)),
                    (1, stage1_pulls.saturating_sub(self.arms[1].count)),
                ]),
                Mode::BatchedUnknown { stage1_grid, .. } => {
                    let next = stage1_grid.next_after(self.time).unwrap_or(u64::MAX);
                    let each = next.saturating_sub(self.time).div_ceil(2).max(1);
                    Batch::from_pairs([(0, each), (1, each)])
                }
                Mode::Unknown | Mode::Minimax { .. } => pair,
            },
            Stage::Commit => Batch::single(
                self.chosen,
                self.stage2_target - self.arms[self.chosen].count,
            ),
            Stage::Probe => {
                let t2 = self.probe.count;
                let count = match &self.mode {
                    Mode::Known { grid: Some(g), .. } => g.next_after(t2).map_or(1, |n| n - t2),
                    Mode::BatchedUnknown {
                        lead,
                        cap,
                        stage3_grid,
                        ..
                    } => match stage3_grid {
                        Some(g) => g.next_after(t2).unwrap_or(*cap).saturating_sub(t2).max(1),
                        None => *lead - t2,
                    },
                    _ => 1,
                };
                Batch::single(self.other(), count)
            }
            Stage::FinalCommit | Stage::FallbackCommit => {
                Batch::single(self.commit.unwrap_or(self.chosen), u64::MAX)
            }
            Stage::EpochProbe(_) | Stage::EpochCommit(_) | Stage::Sequential | Stage::Done => {
                Batch::default()
            }
        }
    }
}

fn check_horizon(horizon: u64) -> Result<()> {
    if horizon < 4 {
        return Err(Error::Config(format!(
            "two-armed DETC needs a horizon of at least 4, got {horizon}"
        )));
    }
    Ok(())
}

impl Policy for TwoArmDetc {
    fn kind(&self) -> PolicyKind {
        self.kind
    }

    fn num_arms(&self) -> usize {
        2
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
            return Err(Error::Protocol(format!(
                "{} has already finished",
                self.kind
            )));
        }
        let left = remaining(self.time, Some(self.horizon), limit)?;
        let batch = self.stage_batch().truncate_to(left);
        self.guard.issue(batch)
    }

    fn absorb(&mut self, batch: &Batch, obs: &Observation) -> Result<()> {
        self.guard.settle(batch, obs)?;
        for (req, out) in batch.requests.iter().zip(&obs.outcomes) {
            self.arms[req.arm].add(out.count, out.reward_sum);
            self.time += out.count;
            match self.stage {
                Stage::Probe if req.arm == self.other() => {
                    self.probe.add(out.count, out.reward_sum)
                }
                Stage::FallbackExplore => self.fallback[req.arm].add(out.count, out.reward_sum),
                _ => {}
            }
        }
        if self.stage == Stage::Init {
            self.stage = Stage::Explore;
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
