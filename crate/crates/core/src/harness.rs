//! Episode runner and replicated Monte Carlo experiments.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::{sample_sum, BanditInstance, RewardModel};
use crate::bounds::{asymptotic_lower_bound, regret_upper_bound_known};
use crate::error::{Error, Result};
use crate::policy::{make_policy, Policy, PolicyKind, PolicySpec};
use crate::trace::{pseudo_regret, round_count, Observation, Outcome, Segment, Trace};

/// Drives `policy` through plan/absorb rounds until the horizon is used up.
///
/// `cut` is required for anytime policies and must match the policy's own
/// horizon otherwise (or be `None`).
pub fn run_episode(
    policy: &mut dyn Policy,
    instance: &BanditInstance,
    model: RewardModel,
    cut: Option<u64>,
    seed: u64,
) -> Result<Trace> {
    if policy.num_arms() != instance.num_arms() {
        return Err(Error::InvalidInstance(format!(
            "{} is configured for {} arms but the instance has {}",
            policy.kind(),
            policy.num_arms(),
            instance.num_arms()
        )));
    }
    model.validate(instance)?;
    let horizon = match (policy.horizon(), cut) {
        (Some(h), None) => h,
        (Some(h), Some(c)) if c == h => h,
        (Some(h), Some(c)) => {
            return Err(Error::Config(format!(
                "{} was built for T = {h} but the episode is cut at {c}",
                policy.kind()
            )))
        }
        (None, Some(c)) => c,
        (None, None) => {
            return Err(Error::Config(format!(
                "{} needs a cut horizon",
                policy.kind()
            )))
        }
    };
    if policy.time() != 0 {
        return Err(Error::Protocol("run_episode needs a fresh policy".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = Trace::new(horizon);
    let mut round_id = 0;
    while trace.pulled() < horizon {
        let batch = policy.plan_round(Some(horizon))?;
        let left = horizon - trace.pulled();
        if batch.total() == 0 || batch.total() > left {
            return Err(Error::Protocol(format!(
                "{} planned {} pulls with {left} left",
                policy.kind(),
                batch.total()
            )));
        }
        let mut outcomes = Vec::with_capacity(batch.requests.len());
        for req in &batch.requests {
            if req.arm >= instance.num_arms() {
                return Err(Error::Protocol(format!("arm {} out of range", req.arm)));
            }
            let reward_sum = sample_sum(model, instance, req.arm, req.count, &mut rng);
            outcomes.push(Outcome {
                count: req.count,
                reward_sum,
            });
            trace.push(Segment {
                arm: req.arm,
                count: req.count,
                reward_sum,
                round_id,
            });
        }
        policy.absorb(&batch, &Observation { outcomes })?;
        round_id += 1;
    }
    Ok(trace)
}

/// A sweep over policies and horizons on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub policies: Vec<PolicyKind>,
    pub means: Vec<f64>,
    pub model: RewardModel,
    /// Strictly increasing. For the anytime policy these are cut points.
    pub horizons: Vec<u64>,
    pub replications: u64,
    pub seed: u64,
    /// Gap handed to known-gap policies, and to FB-ETC's default budget.
    pub delta: Option<f64>,
    /// FB-ETC per-arm budget override.
    pub budget: Option<u64>,
    /// Run known-gap policies outside the guarantee regime.
    pub force: bool,
}

impl ExperimentConfig {
    pub fn new(policies: Vec<PolicyKind>, means: Vec<f64>, horizons: Vec<u64>) -> Self {
        Self {
            policies,
            means,
            model: RewardModel::default(),
            horizons,
            replications: 100,
            seed: 0,
            delta: None,
            budget: None,
            force: false,
        }
    }

    pub fn instance(&self) -> Result<BanditInstance> {
        BanditInstance::new(self.means.clone())
    }

    pub fn validate(&self) -> Result<()> {
        let instance = self.instance()?;
        self.model.validate(&instance)?;
        if self.policies.is_empty() {
            return Err(Error::Config("no policies".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.horizons.is_empty() {
            return Err(Error::Config("no horizons".into()));
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "horizons must be strictly increasing, got {:?}",
                self.horizons
            )));
        }
        if self.horizons[0] < 2 {
            return Err(Error::Config("horizons must be at least 2".into()));
        }
        for kind in &self.policies {
            if kind.needs_known_gap() && self.delta.is_none() {
                return Err(Error::Config(format!("{kind} needs an explicit delta")));
            }
        }
        Ok(())
    }

    /// Policy spec for one cell of the sweep.
    pub fn spec(&self, kind: PolicyKind, horizon: u64) -> PolicySpec {
        PolicySpec {
            kind,
            horizon: (!kind.is_anytime()).then_some(horizon),
            arms: self.means.len(),
            delta: self.delta,
            budget: self.budget,
            force: self.force,
        }
    }
}

/// Aggregates of one (policy, horizon) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub policy: PolicyKind,
    pub horizon: u64,
    pub replications: u64,
    pub mean_regret: f64,
    /// Sample standard deviation over `sqrt(replications)`; 0 for one replication.
    pub se_regret: f64,
    pub mean_rounds: f64,
    pub max_rounds: u64,
    #[serde(rename = "regret_per_logT")]
    pub regret_per_log_t: f64,
    pub lower_bound_rate: f64,
    /// Finite-time bound of known-gap DETC, for that policy only.
    #[serde(rename = "upper_bound_eq5")]
    pub upper_bound: Option<f64>,
    pub mean_pulls: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn row(&self, policy: PolicyKind, horizon: u64) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.policy == policy && r.horizon == horizon)
    }
}

/// Seed and timing of one cell, for the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellInfo {
    pub policy: PolicyKind,
    pub horizon: u64,
    pub seed: u64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub table: ResultTable,
    pub cells: Vec<CellInfo>,
}

/// What one replication contributes to its cell.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub regret: f64,
    pub rounds: u64,
    pub pulls: Vec<u64>,
}

pub fn summarize(trace: &Trace, instance: &BanditInstance) -> Result<EpisodeSummary> {
    Ok(EpisodeSummary {
        regret: pseudo_regret(trace, instance)?,
        rounds: round_count(trace),
        pulls: trace.pulls_per_arm(instance.num_arms()),
    })
}

/// Seed of one (policy, horizon) cell.
///
/// Anytime policies ignore the horizon, so their cells at different cuts
/// replay the same episodes and each cut is a prefix of the longest one.
pub fn cell_seed(master: u64, policy: PolicyKind, horizon: u64) -> u64 {
    let horizon = if policy.is_anytime() { 0 } else { horizon };
    splitmix64(splitmix64(splitmix64(master) ^ fnv1a(policy.name().as_bytes())) ^ horizon)
}

/// Seed of replication `index` within a cell.
pub fn replication_seed(cell: u64, index: u64) -> u64 {
    splitmix64(cell ^ splitmix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Runs `replications` episodes of one cell; results come back in
/// replication order.
pub fn run_cell(
    config: &ExperimentConfig,
    kind: PolicyKind,
    horizon: u64,
) -> Result<Vec<EpisodeSummary>> {
    let instance = config.instance()?;
    let spec = config.spec(kind, horizon);
    // Surface construction errors once, before fanning out.
    make_policy(&spec)?;
    let cell = cell_seed(config.seed, kind, horizon);
    (0..config.replications)
        .into_par_iter()
        .map(|i| {
            let mut policy = make_policy(&spec)?;
            let trace = run_episode(
                policy.as_mut(),
                &instance,
                config.model,
                Some(horizon),
                replication_seed(cell, i),
            )?;
            summarize(&trace, &instance)
        })
        .collect()
}

/// Aggregates replications into a row. The result does not depend on the
/// order of `episodes`.
pub fn aggregate(
    config: &ExperimentConfig,
    kind: PolicyKind,
    horizon: u64,
    episodes: &[EpisodeSummary],
) -> Result<ResultRow> {
    let instance = config.instance()?;
    let n = episodes.len();
    if n == 0 {
        return Err(Error::Config("no replications to aggregate".into()));
    }
    let nf = n as f64;
    // Summing sorted values makes the float result permutation invariant.
    let mut regrets: Vec<f64> = episodes.iter().map(|e| e.regret).collect();
    regrets.sort_by(f64::total_cmp);
    let mean_regret = regrets.iter().sum::<f64>() / nf;
    let se_regret = if n > 1 {
        let mut sq: Vec<f64> = regrets.iter().map(|r| (r - mean_regret).powi(2)).collect();
        sq.sort_by(f64::total_cmp);
        (sq.iter().sum::<f64>() / (nf - 1.0)).sqrt() / nf.sqrt()
    } else {
        0.0
    };
    let total_rounds: u128 = episodes.iter().map(|e| u128::from(e.rounds)).sum();
    let max_rounds = episodes.iter().map(|e| e.rounds).max().unwrap_or(0);
    let mut pulls = vec![0u128; instance.num_arms()];
    for e in episodes {
        for (acc, p) in pulls.iter_mut().zip(&e.pulls) {
            *acc += u128::from(*p);
        }
    }
    let upper_bound = match (kind, config.delta) {
        (PolicyKind::KnownGap, Some(d)) => regret_upper_bound_known(horizon, d).ok(),
        _ => None,
    };
    Ok(ResultRow {
        policy: kind,
        horizon,
        replications: n as u64,
        mean_regret,
        se_regret,
        mean_rounds: total_rounds as f64 / nf,
        max_rounds,
        regret_per_log_t: mean_regret / (horizon as f64).ln(),
        lower_bound_rate: asymptotic_lower_bound(&instance, kind.needs_known_gap()),
        upper_bound,
        mean_pulls: pulls.iter().map(|&p| p as f64 / nf).collect(),
    })
}

/// Runs every (policy, horizon) cell. `workers = 0` uses rayon's default
/// thread count. Output is identical for any worker count.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<ExperimentOutput> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut table = ResultTable::default();
    let mut cells = Vec::new();
    for &kind in &config.policies {
        for &horizon in &config.horizons {
            let start = Instant::now();
            let episodes = pool
                .install(|| run_cell(config, kind, horizon))
                .map_err(|e| with_cell_context(e, kind, horizon))?;
            table
                .rows
                .push(aggregate(config, kind, horizon, &episodes)?);
            cells.push(CellInfo {
                policy: kind,
                horizon,
                seed: cell_seed(config.seed, kind, horizon),
                wall_seconds: start.elapsed().as_secs_f64(),
            });
            log::info!(
                "{kind} T={horizon}: {:.2}s",
                cells.last().map_or(0.0, |c| c.wall_seconds)
            );
        }
    }
    Ok(ExperimentOutput { table, cells })
}

fn with_cell_context(e: Error, kind: PolicyKind, horizon: u64) -> Error {
    match e {
        Error::Config(msg) => Error::Config(format!("{kind} at T = {horizon}: {msg}")),
        Error::GuaranteeRegime(msg) => {
            Error::GuaranteeRegime(format!("{kind} at T = {horizon}: {msg}"))
        }
        other => other,
    }
}

/// Regret rate of one policy across horizons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSeries {
    pub policy: PolicyKind,
    pub horizons: Vec<u64>,
    /// Mean regret over `ln T`, per horizon.
    pub rates: Vec<f64>,
    /// Differences of consecutive rates.
    pub trend: Vec<f64>,
}

/// Raw `mean regret / ln T` per horizon for every policy in the table, in
/// order of first appearance.
pub fn asymptotic_rate(table: &ResultTable) -> Vec<RateSeries> {
    let mut out: Vec<RateSeries> = Vec::new();
    for row in &table.rows {
        let idx = match out.iter().position(|s| s.policy == row.policy) {
            Some(i) => i,
            None => {
                out.push(RateSeries {
                    policy: row.policy,
                    horizons: Vec::new(),
                    rates: Vec::new(),
                    trend: Vec::new(),
                });
                out.len() - 1
            }
        };
        out[idx].horizons.push(row.horizon);
        out[idx]
            .rates
            .push(row.mean_regret / (row.horizon as f64).ln());
    }
    for s in &mut out {
        s.trend = s.rates.windows(2).map(|w| w[1] - w[0]).collect();
    }
    out
}
