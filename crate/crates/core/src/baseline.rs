//! Reference policies: a fully sequential UCB and a fixed-budget ETC.

use crate::bandit::argmax;
use crate::error::{Error, Result};
use crate::policy::{remaining, ArmStats, Policy, PolicyKind, RoundGuard, Stage};
use crate::trace::{Batch, Observation};

/// UCB with index `mu_i + sqrt(2 ln t / T_i)`, one pull per round.
#[derive(Debug, Clone)]
pub struct Ucb {
    horizon: u64,
    stage: Stage,
    time: u64,
    arms: Vec<ArmStats>,
    guard: RoundGuard,
}

impl Ucb {
    pub fn new(horizon: u64, arms: usize) -> Result<Self> {
        if arms < 1 || horizon < arms as u64 {
            return Err(Error::Config(format!(
                "ucb needs 1 <= K <= T, got K = {arms}, T = {horizon}"
            )));
        }
        Ok(Self {
            horizon,
            stage: Stage::Init,
            time: 0,
            arms: vec![ArmStats::default(); arms],
            guard: RoundGuard::default(),
        })
    }

    /// Current index of every arm; infinite for arms not yet pulled.
    pub fn indices(&self) -> Vec<f64> {
        let log_t = (self.time.max(1) as f64).ln();
        self.arms
            .iter()
            .map(|a| {
                if a.count == 0 {
                    f64::INFINITY
                } else {
                    a.mean() + (2.0 * log_t / a.count as f64).sqrt()
                }
            })
            .collect()
    }

    fn next_arm(&self) -> usize {
        match self.arms.iter().position(|a| a.count == 0) {
            Some(i) => i,
            None => argmax(&self.indices()),
        }
    }
}

impl Policy for Ucb {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Ucb
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
            return Err(Error::Protocol("ucb has already finished".into()));
        }
        remaining(self.time, Some(self.horizon), limit)?;
        let arm = self.next_arm();
        self.guard.issue(Batch::single(arm, 1))
    }

    fn absorb(&mut self, batch: &Batch, obs: &Observation) -> Result<()> {
        self.guard.settle(batch, obs)?;
        for (req, out) in batch.requests.iter().zip(&obs.outcomes) {
            self.arms[req.arm].add(out.count, out.reward_sum);
            self.time += out.count;
        }
        self.stage = if self.time >= self.horizon {
            Stage::Done
        } else if self.arms.iter().all(|a| a.count > 0) {
            Stage::Sequential
        } else {
            Stage::Init
        };
        Ok(())
    }

    fn committed_arm(&self) -> Option<usize> {
        None
    }
}

/// Explore every arm `budget` times in a single round, then commit to the
/// empirical best arm for the rest of the horizon.
#[derive(Debug, Clone)]
pub struct FbEtc {
    horizon: u64,
    budget: u64,
    stage: Stage,
    time: u64,
    arms: Vec<ArmStats>,
    commit: Option<usize>,
    guard: RoundGuard,
}

impl FbEtc {
    pub fn new(horizon: u64, arms: usize, budget: u64) -> Result<Self> {
        if arms < 1 {
            return Err(Error::Config("fb_etc needs at least one arm".into()));
        }
        if budget == 0
            || (arms as u64)
                .checked_mul(budget)
                .is_none_or(|n| n > horizon)
        {
            return Err(Error::Config(format!(
                "fb_etc budget {budget} per arm is infeasible for K = {arms}, T = {horizon}"
            )));
        }
        Ok(Self {
            horizon,
            budget,
            stage: Stage::Init,
            time: 0,
            arms: vec![ArmStats::default(); arms],
            commit: None,
            guard: RoundGuard::default(),
        })
    }

    /// `ceil(4 ln(T d^2) / d^2)` per arm when the gap is known, else
    /// `ceil(T^(2/3))`, clamped to `T/K` so that exploration fits the horizon.
    pub fn default_budget(horizon: u64, arms: usize, delta: Option<f64>) -> u64 {
        let budget = match delta {
            Some(d) if d.is_finite() && d > 0.0 => {
                let log_product = (horizon as f64 * d * d).ln().max(0.0);
                (4.0 * log_product / (d * d)).ceil()
            }
            _ => (horizon as f64).powf(2.0 / 3.0).ceil(),
        };
        let fit = horizon / (arms.max(1) as u64);
        (budget as u64).min(fit).max(1)
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }
}

impl Policy for FbEtc {
    fn kind(&self) -> PolicyKind {
        PolicyKind::FbEtc
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
        let left = remaining(self.time, Some(self.horizon), limit)?;
        let batch = match (self.stage, self.commit) {
            (Stage::Init, _) => Batch::from_pairs((0..self.arms.len()).map(|i| (i, self.budget))),
            (Stage::FinalCommit, Some(arm)) => Batch::single(arm, u64::MAX),
            _ => return Err(Error::Protocol("fb_etc has already finished".into())),
        };
        self.guard.issue(batch.truncate_to(left))
    }

    fn absorb(&mut self, batch: &Batch, obs: &Observation) -> Result<()> {
        self.guard.settle(batch, obs)?;
        for (req, out) in batch.requests.iter().zip(&obs.outcomes) {
            self.arms[req.arm].add(out.count, out.reward_sum);
            self.time += out.count;
        }
        if self.stage == Stage::Init {
            let means: Vec<f64> = self.arms.iter().map(ArmStats::mean).collect();
            self.commit = Some(argmax(&means));
            self.stage = Stage::FinalCommit;
        }
        if self.time >= self.horizon {
            self.stage = Stage::Done;
        }
        Ok(())
    }

    fn committed_arm(&self) -> Option<usize> {
        self.commit
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Outcome;

    fn feed(p: &mut dyn Policy, rewards: &[f64]) -> Batch {
        let b = p.plan_round(None).unwrap();
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
    fn ucb_breaks_ties_low() {
        let mut p = Ucb::new(10, 2).unwrap();
        assert_eq!(feed(&mut p, &[0.3, 0.3]), Batch::single(0, 1));
        assert_eq!(feed(&mut p, &[0.3, 0.3]), Batch::single(1, 1));
        assert_eq!(p.stage(), Stage::Sequential);
        assert_eq!(feed(&mut p, &[0.3, 0.3]), Batch::single(0, 1));
    }

    #[test]
    fn ucb_rejects_short_horizon() {
        assert!(Ucb::new(2, 3).is_err());
    }

    #[test]
    fn fb_etc_budgets() {
        assert_eq!(FbEtc::default_budget(1_000_000, 2, Some(1.0)), 56);
        assert_eq!(FbEtc::default_budget(1_000_003, 2, None), 10_001);
        assert_eq!(FbEtc::default_budget(8, 4, None), 2);
        assert!(FbEtc::new(100, 2, 51).is_err());
        assert!(FbEtc::new(100, 2, 0).is_err());
        assert!(FbEtc::new(100, 2, 50).is_ok());
    }

    #[test]
    fn fb_etc_two_rounds() {
        let mut p = FbEtc::new(1000, 3, 10).unwrap();
        assert_eq!(
            feed(&mut p, &[0.0, 1.0, 0.5]),
            Batch::from_pairs([(0, 10), (1, 10), (2, 10)])
        );
        assert_eq!(p.committed_arm(), Some(1));
        assert_eq!(feed(&mut p, &[0.0, 1.0, 0.5]), Batch::single(1, 970));
        assert!(p.is_done());
    }

    #[test]
    fn fb_etc_pure_exploration() {
        let mut p = FbEtc::new(100, 2, 50).unwrap();
        feed(&mut p, &[0.0, 1.0]);
        assert!(p.is_done());
        assert!(p.plan_round(None).is_err());
    }
}
