//! Double explore-then-commit (DETC) bandit policies, reference baselines,
//! and a reproducible Monte Carlo harness for regret and round complexity.
//!
//! ```
//! use detc_core::{make_instance, make_policy, run_episode, pseudo_regret, round_count};
//! use detc_core::{PolicyKind, PolicySpec, RewardModel};
//!
//! let instance = make_instance(vec![1.0, 0.0]).unwrap();
//! let mut policy = make_policy(&PolicySpec::new(PolicyKind::BatchedUnknown, 100_000)).unwrap();
//! let trace = run_episode(policy.as_mut(), &instance, RewardModel::Gaussian, None, 42).unwrap();
//! assert_eq!(trace.pulled(), 100_000);
//! assert!(pseudo_regret(&trace, &instance).unwrap() >= 0.0);
//! assert!(round_count(&trace) < 50);
//! ```

pub mod bandit;
pub mod baseline;
pub mod bounds;
pub mod error;
pub mod harness;
pub mod policy;
pub mod trace;

pub use bandit::{argmax, log_plus, make_instance, sample_sum, BanditInstance, RewardModel};
pub use baseline::{FbEtc, Ucb};
pub use bounds::{asymptotic_lower_bound, hoeffding_tail, maximal_tail, regret_upper_bound_known};
pub use error::{Error, Result};
pub use harness::{
    aggregate, asymptotic_rate, cell_seed, replication_seed, run_cell, run_episode, run_experiment,
    summarize, CellInfo, EpisodeSummary, ExperimentConfig, ExperimentOutput, RateSeries, ResultRow,
    ResultTable,
};
pub use policy::{make_policy, ArmStats, Policy, PolicyKind, PolicySpec, RuleCheck, Stage};
pub use trace::{pseudo_regret, round_count, Batch, Observation, Outcome, Request, Segment, Trace};
