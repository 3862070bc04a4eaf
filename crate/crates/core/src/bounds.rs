//! Closed-form regret bounds and concentration tails used as test oracles.

use crate::bandit::BanditInstance;
use crate::error::Result;
use crate::policy::known_gap_params;

/// Finite-time regret bound of known-gap DETC:
///
/// `2d + 8/d + 4 ln(T1 d^2)/d + ln(T d^2)/(2(1-eps)^2 d) + (2 sqrt(ln(T d^2)) + 2)/((1-eps)^2 d)`
///
/// with `eps` and `T1` from [`known_gap_params`].
pub fn regret_upper_bound_known(horizon: u64, delta: f64) -> Result<f64> {
    let p = known_gap_params(horizon, delta)?;
    let d2 = delta * delta;
    let log_product = (horizon as f64 * d2).ln().max(0.0);
    let log_t1 = (p.stage2_target as f64 * d2).ln().max(0.0);
    let shrink = (1.0 - p.epsilon).powi(2);
    Ok(2.0 * delta
        + 8.0 / delta
        + 4.0 * log_t1 / delta
        + log_product / (2.0 * shrink * delta)
        + (2.0 * log_product.sqrt() + 2.0) / (shrink * delta))
}

/// Coefficient of `ln T` in the asymptotic regret lower bound:
/// `sum 2/gap_i` with unknown gaps, `sum 1/(2 gap_i)` with known gaps.
/// Zero when every gap is zero.
pub fn asymptotic_lower_bound(instance: &BanditInstance, gap_known: bool) -> f64 {
    instance
        .gaps()
        .iter()
        .filter(|g| **g > 0.0)
        .map(|g| if gap_known { 1.0 / (2.0 * g) } else { 2.0 / g })
        .sum()
}

/// One-sided tail `exp(-n eps^2 / (2 sigma^2))` for the mean of `n`
/// sigma-subgaussian draws.
pub fn hoeffding_tail(n: u64, eps: f64, sigma: f64) -> f64 {
    (-(n as f64) * eps * eps / (2.0 * sigma * sigma)).exp()
}

/// Uniform-in-time tail `exp(-N gamma^2 / 2)` for the event that a running
/// mean of 1-subgaussian draws drops to `-gamma` at some `n >= N`.
pub fn maximal_tail(n_min: u64, gamma: f64) -> f64 {
    (-(n_min as f64) * gamma * gamma / 2.0).exp()
}
