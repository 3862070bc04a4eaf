//! Stochastic bandit instances and 1-subgaussian reward models.
//!
//! Rewards are drawn in aggregate: a request for `m` pulls of one arm
//! produces a single draw distributed as the sum of `m` i.i.d. rewards.
//! Every policy in this crate only consumes per-segment sums, so this is
//! equivalent to pulling one at a time while keeping long commit phases O(1).

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ground-truth arm means, with the best arm and per-arm gaps precomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditInstance {
    means: Vec<f64>,
    best_arm: usize,
    gaps: Vec<f64>,
}

impl BanditInstance {
    /// Builds an instance. The best arm is the lowest index attaining the
    /// maximum mean.
    pub fn new(means: Vec<f64>) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::InvalidInstance("no arms".into()));
        }
        if let Some(i) = means.iter().position(|m| !m.is_finite()) {
            return Err(Error::InvalidInstance(format!(
                "mean of arm {i} is not finite ({})",
                means[i]
            )));
        }
        let best_arm = argmax(&means);
        let top = means[best_arm];
        let gaps = means.iter().map(|m| top - m).collect();
        Ok(Self {
            means,
            best_arm,
            gaps,
        })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn best_arm(&self) -> usize {
        self.best_arm
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest strictly positive gap, if any arm is suboptimal.
    pub fn min_positive_gap(&self) -> Option<f64> {
        self.gaps
            .iter()
            .copied()
            .filter(|g| *g > 0.0)
            .min_by(f64::total_cmp)
    }
}

/// Convenience wrapper matching the free-function form used by callers.
pub fn make_instance(means: Vec<f64>) -> Result<BanditInstance> {
    BanditInstance::new(means)
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardModel {
    /// Normal(mu, 1). Exactly 1-subgaussian.
    #[default]
    Gaussian,
    /// Bernoulli(mu). Half-subgaussian, so also 1-subgaussian.
    Bernoulli,
}

impl RewardModel {
    pub fn validate(&self, instance: &BanditInstance) -> Result<()> {
        if *self == RewardModel::Bernoulli {
            if let Some(m) = instance.means().iter().find(|m| !(0.0..=1.0).contains(*m)) {
                return Err(Error::InvalidInstance(format!(
                    "bernoulli rewards need means in [0, 1], got {m}"
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            RewardModel::Gaussian => "gaussian",
            RewardModel::Bernoulli => "bernoulli",
        }
    }
}

/// Draws the total reward of `pulls` independent pulls of `arm`.
///
/// Gaussian sums are generated as `m*mu + sqrt(m)*z` from one standard
/// normal `z`, so shifting every mean by a constant shifts every sum
/// deterministically under the same random stream.
///
/// Panics if `pulls == 0` or `arm` is out of range.
pub fn sample_sum<R: Rng + ?Sized>(
    model: RewardModel,
    instance: &BanditInstance,
    arm: usize,
    pulls: u64,
    rng: &mut R,
) -> f64 {
    assert!(pulls >= 1, "sample_sum needs at least one pull");
    let mu = instance.means[arm];
    match model {
        RewardModel::Gaussian => {
            let z: f64 = StandardNormal.sample(rng);
            let m = pulls as f64;
            m * mu + m.sqrt() * z
        }
        RewardModel::Bernoulli => {
            // Degenerate means are exact; Binomial rejects neither but this
            // avoids consuming randomness for them.
            if mu <= 0.0 {
                0.0
            } else if mu >= 1.0 {
                pulls as f64
            } else {
                let binom = Binomial::new(pulls, mu).expect("mean validated to lie in [0, 1]");
                binom.sample(rng) as f64
            }
        }
    }
}

/// `max(0, ln x)`, natural log.
pub fn log_plus(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Domain(format!("log_plus needs x > 0, got {x}")));
    }
    Ok(x.ln().max(0.0))
}

/// `log_plus` for arguments already known to be positive.
pub(crate) fn ln_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.ln()
    } else {
        0.0
    }
}
