//! TOML experiment configuration.
//!
//! ```toml
//! policy = ["detc_unknown", "fb_etc"]   # or a single name
//! means = [1, 0]
//! T = [10000, 1000000]
//! reps = 200                            # default 100
//! seed = 7
//! model = "gaussian"                    # default; or "bernoulli"
//! delta = 1.0                           # required by known-gap policies
//! budget = 56                           # optional FB-ETC budget per arm
//! force = false                         # run known-gap policies outside their regime
//! ```

use detc_core::{BanditInstance, ExperimentConfig, PolicyKind, RewardModel};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config is not valid TOML: {0}")]
    Syntax(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("unknown policy `{}`; expected one of {}", .0, policy_names())]
    UnknownPolicy(String),
    #[error("unknown reward model `{0}`; expected gaussian or bernoulli")]
    UnknownModel(String),
    #[error("horizons must be strictly increasing, got {0:?}")]
    HorizonOrder(Vec<u64>),
    #[error("{0} needs the gap: set `delta` explicitly")]
    MissingDelta(&'static str),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid value for `{key}`: {msg}")]
    InvalidValue { key: &'static str, msg: String },
}

fn policy_names() -> String {
    PolicyKind::ALL.map(|k| k.name()).join(", ")
}

const KEYS: [&str; 12] = [
    "policy",
    "policies",
    "means",
    "T",
    "horizons",
    "reps",
    "replications",
    "seed",
    "model",
    "delta",
    "budget",
    "force",
];

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(alias = "policies")]
    policy: Option<OneOrMany<String>>,
    means: Option<Vec<f64>>,
    #[serde(rename = "T", alias = "horizons")]
    horizons: Option<OneOrMany<u64>>,
    #[serde(alias = "replications")]
    reps: Option<u64>,
    seed: Option<u64>,
    model: Option<String>,
    delta: Option<f64>,
    budget: Option<u64>,
    force: Option<bool>,
}

/// A validated config plus the defaults that were filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConfig {
    pub config: ExperimentConfig,
    /// `key = value` for every key that took its default.
    pub defaults: Vec<String>,
}

pub fn parse_config(text: &str) -> Result<ParsedConfig, ConfigError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    if let Some(key) = table.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(key.clone()));
    }
    let raw: RawConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;

    let policies = raw
        .policy
        .ok_or(ConfigError::MissingKey("policy"))?
        .into_vec()
        .into_iter()
        .map(|name| PolicyKind::from_name(&name).ok_or(ConfigError::UnknownPolicy(name)))
        .collect::<Result<Vec<_>, _>>()?;
    if policies.is_empty() {
        return Err(ConfigError::InvalidValue {
            key: "policy",
            msg: "empty list".into(),
        });
    }
    let means = raw.means.ok_or(ConfigError::MissingKey("means"))?;
    let horizons = raw.horizons.ok_or(ConfigError::MissingKey("T"))?.into_vec();
    let seed = raw.seed.ok_or(ConfigError::MissingKey("seed"))?;

    let mut defaults = Vec::new();
    let model = match raw.model.as_deref() {
        None => {
            defaults.push(format!("model = {}", RewardModel::default().name()));
            RewardModel::default()
        }
        Some("gaussian") => RewardModel::Gaussian,
        Some("bernoulli") => RewardModel::Bernoulli,
        Some(other) => return Err(ConfigError::UnknownModel(other.into())),
    };
    let mut config = ExperimentConfig::new(policies, means, horizons);
    let replications = match raw.reps {
        Some(r) => r,
        None => {
            defaults.push(format!("reps = {}", config.replications));
            config.replications
        }
    };
    config.model = model;
    config.replications = replications;
    config.seed = seed;
    config.delta = raw.delta;
    config.budget = raw.budget;
    config.force = raw.force.unwrap_or(false);

    check(&config)?;
    Ok(ParsedConfig { config, defaults })
}

fn check(c: &ExperimentConfig) -> Result<(), ConfigError> {
    if c.horizons.is_empty() {
        return Err(ConfigError::InvalidValue {
            key: "T",
            msg: "empty list".into(),
        });
    }
    if c.horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConfigError::HorizonOrder(c.horizons.clone()));
    }
    if let Some(kind) = c.policies.iter().find(|k| k.needs_known_gap()) {
        match c.delta {
            None => return Err(ConfigError::MissingDelta(kind.name())),
            Some(d) if !(d.is_finite() && d > 0.0) => {
                return Err(ConfigError::InvalidValue {
                    key: "delta",
                    msg: format!("{d} is not a positive gap"),
                })
            }
            Some(_) => {}
        }
    }
    let instance = BanditInstance::new(c.means.clone())
        .map_err(|e| ConfigError::InvalidInstance(e.to_string()))?;
    c.model
        .validate(&instance)
        .map_err(|e| ConfigError::InvalidInstance(e.to_string()))?;
    if let (Some(d), Some(gap)) = (c.delta, instance.min_positive_gap()) {
        if c.policies.iter().any(PolicyKind::needs_known_gap) && (d - gap).abs() > 1e-12 {
            log::warn!("delta = {d} differs from the smallest gap {gap} implied by the means");
        }
    }
    if c.replications == 0 {
        return Err(ConfigError::InvalidValue {
            key: "reps",
            msg: "must be at least 1".into(),
        });
    }
    c.validate().map_err(|e| ConfigError::InvalidValue {
        key: "config",
        msg: e.to_string(),
    })
}
