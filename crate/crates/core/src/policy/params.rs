//! Closed-form parameters of the known-gap policy.

use serde::{Deserialize, Serialize};

use crate::bandit::ln_plus;
use crate::error::{Error, Result};

/// Parameters of the known-gap policy for one `(T, delta)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnownGapParams {
    /// `min{ sqrt(ln(T d^2) / (d^2 ln^2 T)), 1/2 }`.
    pub epsilon: f64,
    /// Total pulls of the stage II arm when stage II ends.
    pub stage2_target: u64,
    /// Pulls of each arm when stage I ends.
    pub stage1_pulls: u64,
}

/// Parameters for `T*delta^2 >= 1`, the regime where the regret bound holds.
///
/// `stage2_target` is evaluated through its simplified form: when
/// `epsilon < 1/2` the ratio `2 ln(T d^2) / (epsilon^2 d^2)` is exactly
/// `2 ln^2 T`, and at `epsilon = 1/2` it is `8 ln(T d^2) / d^2`.
pub fn known_gap_params(horizon: u64, delta: f64) -> Result<KnownGapParams> {
    compute(horizon, delta, false)
}

/// Same as [`known_gap_params`] but never refuses; logs a warning when the
/// input is outside the guarantee regime.
pub fn known_gap_params_forced(horizon: u64, delta: f64) -> Result<KnownGapParams> {
    compute(horizon, delta, true)
}

fn compute(horizon: u64, delta: f64, force: bool) -> Result<KnownGapParams> {
    if !(delta.is_finite() && delta > 0.0) || horizon == 0 {
        return Err(Error::GuaranteeRegime(format!(
            "degenerate input T = {horizon}, delta = {delta}"
        )));
    }
    let d2 = delta * delta;
    let product = horizon as f64 * d2;
    if product < 1.0 {
        if !force {
            return Err(Error::GuaranteeRegime(format!("T*delta^2 = {product} < 1")));
        }
        log::warn!(
            "known-gap parameters forced outside the guarantee regime (T*delta^2 = {product})"
        );
    }
    let log_product = ln_plus(product);
    let log_t = (horizon as f64).ln();

    let ratio = if log_t > 0.0 {
        (log_product / (d2 * log_t * log_t)).sqrt()
    } else {
        f64::INFINITY
    };
    let epsilon = ratio.min(0.5);
    let stage2_target = if epsilon < 0.5 {
        ceil_u64(2.0 * log_t * log_t)
    } else {
        ceil_u64(8.0 * log_product / d2)
    }
    .max(1);

    let t1_product = stage2_target as f64 * d2;
    if t1_product < 1.0 {
        if !force {
            return Err(Error::GuaranteeRegime(format!(
                "stage II target times delta^2 = {t1_product} < 1"
            )));
        }
        log::warn!("known-gap stage II target forced below 1/delta^2");
    }
    let stage1_pulls = 4 * ceil_u64(ln_plus(t1_product) / d2);

    Ok(KnownGapParams {
        epsilon,
        stage2_target,
        stage1_pulls,
    })
}

/// `ceil(ln(T)^power)`, saturating at `u64::MAX`.
pub fn ln_pow_ceil(horizon: u64, power: i32) -> u64 {
    ceil_u64((horizon as f64).ln().max(0.0).powi(power))
}

pub(crate) fn ceil_u64(x: f64) -> u64 {
    // `as` saturates for out-of-range floats.
    x.ceil() as u64
}
