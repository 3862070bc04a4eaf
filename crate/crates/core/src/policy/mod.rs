//! Double explore-then-commit policies behind a uniform round protocol.
//!
//! Every policy is a single-threaded stage machine. The driver alternates
//! [`Policy::plan_round`], which returns the largest block of pulls the
//! policy can commit to without feedback, and [`Policy::absorb`], which
//! feeds back the aggregated outcome of that block.

mod anytime;
mod grid;
mod k_arm;
mod params;
mod rules;
mod two_arm;

pub use anytime::AnytimeDetc;
pub use grid::{grid_known, grid_unknown_stage1, grid_unknown_stage3, QueryGrid};
pub use k_arm::KArmDetc;
pub use params::{known_gap_params, known_gap_params_forced, ln_pow_ceil, KnownGapParams};
pub use rules::{
    anytime_stop, fallback_stop, stop_stage1_unknown, stop_stage3_known, stop_stage3_unknown,
    Stage3Rule,
};
pub use two_arm::TwoArmDetc;

use serde::{Deserialize, Serialize};

use crate::baseline::{FbEtc, Ucb};
use crate::error::{Error, Result};
use crate::trace::{Batch, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    /// Two arms, gap known in advance.
    #[serde(rename = "detc_known")]
    KnownGap,
    /// Two arms, gap unknown.
    #[serde(rename = "detc_unknown")]
    UnknownGap,
    /// Two arms, unknown gap, with a stage III cap and a re-exploration fallback.
    #[serde(rename = "detc_minimax")]
    Minimax,
    /// K arms, unknown gaps.
    #[serde(rename = "detc_k")]
    KArm,
    /// Two arms, no horizon; doubling epochs.
    #[serde(rename = "detc_anytime")]
    Anytime,
    /// Known gap with stage III checked only on a fixed grid.
    #[serde(rename = "batched_known")]
    BatchedKnown,
    /// Unknown gap with stage I and III checked only on fixed grids.
    #[serde(rename = "batched_unknown")]
    BatchedUnknown,
    /// Fully sequential UCB reference.
    #[serde(rename = "ucb")]
    Ucb,
    /// Fixed-budget explore-then-commit reference.
    #[serde(rename = "fb_etc")]
    FbEtc,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 9] = [
        PolicyKind::KnownGap,
        PolicyKind::UnknownGap,
        PolicyKind::Minimax,
        PolicyKind::KArm,
        PolicyKind::Anytime,
        PolicyKind::BatchedKnown,
        PolicyKind::BatchedUnknown,
        PolicyKind::Ucb,
        PolicyKind::FbEtc,
    ];

    /// Stable external name, used in configs and result tables.
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::KnownGap => "detc_known",
            PolicyKind::UnknownGap => "detc_unknown",
            PolicyKind::Minimax => "detc_minimax",
            PolicyKind::KArm => "detc_k",
            PolicyKind::Anytime => "detc_anytime",
            PolicyKind::BatchedKnown => "batched_known",
            PolicyKind::BatchedUnknown => "batched_unknown",
            PolicyKind::Ucb => "ucb",
            PolicyKind::FbEtc => "fb_etc",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Whether the policy is handed the true gap.
    pub fn needs_known_gap(&self) -> bool {
        matches!(self, PolicyKind::KnownGap | PolicyKind::BatchedKnown)
    }

    pub fn is_anytime(&self) -> bool {
        *self == PolicyKind::Anytime
    }

    pub fn two_armed_only(&self) -> bool {
        !matches!(self, PolicyKind::KArm | PolicyKind::Ucb | PolicyKind::FbEtc)
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything needed to build a fresh policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// Horizon; ignored by the anytime policy.
    pub horizon: Option<u64>,
    pub arms: usize,
    /// Gap handed to known-gap policies (and used for the FB-ETC oracle budget).
    pub delta: Option<f64>,
    /// Per-arm exploration budget for FB-ETC.
    pub budget: Option<u64>,
    /// Run known-gap policies outside `T*delta^2 >= 1`.
    pub force: bool,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind, horizon: u64) -> Self {
        Self {
            kind,
            horizon: (!kind.is_anytime()).then_some(horizon),
            arms: 2,
            delta: None,
            budget: None,
            force: false,
        }
    }

    pub fn anytime() -> Self {
        Self {
            kind: PolicyKind::Anytime,
            horizon: None,
            arms: 2,
            delta: None,
            budget: None,
            force: false,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn with_arms(mut self, arms: usize) -> Self {
        self.arms = arms;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn forced(mut self) -> Self {
        self.force = true;
        self
    }

    fn require_horizon(&self) -> Result<u64> {
        match self.horizon {
            Some(t) if t >= 1 => Ok(t),
            Some(_) => Err(Error::Config(format!(
                "{}: horizon must be positive",
                self.kind
            ))),
            None => Err(Error::Config(format!("{}: horizon is required", self.kind))),
        }
    }

    fn require_delta(&self) -> Result<f64> {
        match self.delta {
            Some(d) if d.is_finite() && d > 0.0 => Ok(d),
            Some(d) => Err(Error::Config(format!(
                "{}: gap must be positive and finite, got {d}",
                self.kind
            ))),
            None => Err(Error::Config(format!(
                "{}: the known gap delta is required",
                self.kind
            ))),
        }
    }
}

/// Stage tags, in the order a policy moves through them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    /// One pull of every arm.
    #[default]
    Init,
    /// Stage I: uniform exploration.
    Explore,
    /// Stage II: commit to the empirical leader up to a target count.
    Commit,
    /// Stage III: probe the arm(s) not chosen in stage II.
    Probe,
    /// Stage IV: commit for the rest of the horizon.
    FinalCommit,
    /// Re-exploration after a failed probe.
    FallbackExplore,
    FallbackCommit,
    /// Anytime epoch `r`: probe the less-pulled arm.
    EpochProbe(u32),
    /// Anytime epoch `r`: commit until the epoch ends.
    EpochCommit(u32),
    /// Fully sequential index policy.
    Sequential,
    Done,
}

impl Stage {
    /// Position in the stage order. Anytime stages are ordered by epoch.
    pub fn rank(&self) -> u64 {
        match self {
            Stage::Init => 0,
            Stage::Explore => 1,
            Stage::Commit => 2,
            Stage::Probe => 3,
            Stage::FinalCommit => 4,
            Stage::FallbackExplore => 5,
            Stage::FallbackCommit => 6,
            Stage::Sequential => 1,
            Stage::EpochProbe(r) => 1 + 2 * u64::from(*r),
            Stage::EpochCommit(r) => 2 + 2 * u64::from(*r),
            Stage::Done => u64::MAX,
        }
    }
}

/// Which stopping rule was evaluated, and when.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCheck {
    pub stage: Stage,
    /// Global time `t` for stage I checks, in-stage pull count for stage III.
    pub at: u64,
    pub fired: bool,
}

pub trait Policy: Send {
    fn kind(&self) -> PolicyKind;

    fn num_arms(&self) -> usize;

    /// Fixed horizon, or `None` for anytime policies.
    fn horizon(&self) -> Option<u64>;

    /// Total pulls absorbed so far.
    fn time(&self) -> u64;

    fn stage(&self) -> Stage;

    fn is_done(&self) -> bool {
        self.stage() == Stage::Done
    }

    /// Plans the next round. `limit` optionally cuts the episode earlier
    /// than the policy's own horizon (required for anytime policies).
    fn plan_round(&mut self, limit: Option<u64>) -> Result<Batch>;

    /// Feeds back the outcome of the last planned batch.
    fn absorb(&mut self, batch: &Batch, obs: &Observation) -> Result<()>;

    /// Arm of the current commit stage, if any.
    fn committed_arm(&self) -> Option<usize>;

    /// Log of stopping-rule evaluations. Empty for policies without one.
    fn rule_checks(&self) -> &[RuleCheck] {
        &[]
    }
}

/// Builds a fresh policy at its initial stage.
pub fn make_policy(spec: &PolicySpec) -> Result<Box<dyn Policy>> {
    if spec.arms < 2 {
        return Err(Error::Config(format!(
            "{}: need at least two arms, got {}",
            spec.kind, spec.arms
        )));
    }
    if spec.kind.two_armed_only() && spec.arms != 2 {
        return Err(Error::Config(format!(
            "{} is a two-armed policy, got {} arms",
            spec.kind, spec.arms
        )));
    }
    let policy: Box<dyn Policy> = match spec.kind {
        PolicyKind::KnownGap | PolicyKind::BatchedKnown => {
            let horizon = spec.require_horizon()?;
            let delta = spec.require_delta()?;
            Box::new(TwoArmDetc::known_gap(
                horizon,
                delta,
                spec.kind == PolicyKind::BatchedKnown,
                spec.force,
            )?)
        }
        PolicyKind::UnknownGap => Box::new(TwoArmDetc::unknown_gap(spec.require_horizon()?)?),
        PolicyKind::Minimax => Box::new(TwoArmDetc::minimax(spec.require_horizon()?)?),
        PolicyKind::BatchedUnknown => {
            Box::new(TwoArmDetc::batched_unknown(spec.require_horizon()?)?)
        }
        PolicyKind::KArm => Box::new(KArmDetc::new(spec.require_horizon()?, spec.arms)?),
        PolicyKind::Anytime => Box::new(AnytimeDetc::new()),
        PolicyKind::Ucb => Box::new(Ucb::new(spec.require_horizon()?, spec.arms)?),
        PolicyKind::FbEtc => {
            let horizon = spec.require_horizon()?;
            let budget = match spec.budget {
                Some(b) => b,
                None => FbEtc::default_budget(horizon, spec.arms, spec.delta),
            };
            Box::new(FbEtc::new(horizon, spec.arms, budget)?)
        }
    };
    Ok(policy)
}

/// Count and reward sum for one arm.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ArmStats {
    pub count: u64,
    pub sum: f64,
}

impl ArmStats {
    pub fn add(&mut self, count: u64, reward_sum: f64) {
        self.count += count;
        self.sum += reward_sum;
    }

    /// Empirical mean; zero before the first pull.
    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }
}

/// Ties the planned batch to the observation that answers it.
#[derive(Debug, Clone, Default)]
pub(crate) struct RoundGuard {
    pending: Option<Batch>,
}

impl RoundGuard {
    pub(crate) fn issue(&mut self, batch: Batch) -> Result<Batch> {
        if self.pending.is_some() {
            return Err(Error::Protocol(
                "plan_round called twice without absorb".into(),
            ));
        }
        if batch.total() == 0 {
            return Err(Error::Protocol("no pulls left to plan".into()));
        }
        self.pending = Some(batch.clone());
        Ok(batch)
    }

    pub(crate) fn settle(&mut self, batch: &Batch, obs: &Observation) -> Result<()> {
        match self.pending.take() {
            None => Err(Error::Protocol("absorb without a planned round".into())),
            Some(planned) if &planned != batch => {
                self.pending = Some(planned);
                Err(Error::Protocol(
                    "absorbed batch differs from the planned one".into(),
                ))
            }
            Some(planned) => {
                if let Err(e) = obs.check_matches(batch) {
                    self.pending = Some(planned);
                    return Err(e);
                }
                Ok(())
            }
        }
    }
}

/// Pulls still available before `limit` (or the policy horizon).
pub(crate) fn remaining(time: u64, horizon: Option<u64>, limit: Option<u64>) -> Result<u64> {
    let end = match (horizon, limit) {
        (Some(h), Some(l)) => h.min(l),
        (Some(h), None) => h,
        (None, Some(l)) => l,
        (None, None) => {
            return Err(Error::Protocol(
                "an anytime policy needs an explicit cut horizon".into(),
            ))
        }
    };
    if time >= end {
        return Err(Error::Protocol(format!(
            "plan_round called at t = {time} with nothing left before {end}"
        )));
    }
    Ok(end - time)
}
