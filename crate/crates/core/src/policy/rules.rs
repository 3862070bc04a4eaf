//! Stopping rules of the exploration stages.
//!
//! Each rule returns `true` when exploration should stop, i.e. when the two
//! empirical means are separated by at least the rule's confidence width.
//! Widths whose logarithm would go negative (tiny `T/t`) are clamped to zero.

use serde::{Deserialize, Serialize};

use crate::bandit::ln_plus;

/// Known gap, stage III: stop once `2(1-eps) t2 delta |mu' - theta| >= ln(T delta^2)`.
pub fn stop_stage3_known(
    mu_prime: f64,
    theta: f64,
    t2: u64,
    delta: f64,
    epsilon: f64,
    horizon: u64,
) -> bool {
    let lhs = 2.0 * (1.0 - epsilon) * t2 as f64 * delta * (mu_prime - theta).abs();
    lhs >= (horizon as f64 * delta * delta).ln()
}

/// Unknown gap, stage I. `t` is the total number of pulls over both arms.
///
/// Panics if `t == 0`.
pub fn stop_stage1_unknown(mu1_hat: f64, mu2_hat: f64, t: u64, stage2_target: u64) -> bool {
    assert!(t >= 1, "stage I rule evaluated before any pull");
    let t = t as f64;
    let width = (16.0 / t * ln_plus(stage2_target as f64 / t)).sqrt();
    (mu1_hat - mu2_hat).abs() >= width
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage3Rule {
    /// `sqrt(2/t2 * ln(T/t2 * (ln^2(T/t2) + 1)))`
    Plain,
    /// As `Plain` with an extra factor `e` on `T/t2` inside the outer log.
    EScaled,
}

impl Stage3Rule {
    pub fn width(&self, t2: u64, horizon: u64) -> f64 {
        let x = horizon as f64 / t2 as f64;
        let mut log_term = iterated_log(x);
        if *self == Stage3Rule::EScaled {
            log_term += 1.0;
        }
        (2.0 / t2 as f64 * log_term.max(0.0)).sqrt()
    }
}

/// Unknown gap, stage III.
///
/// Panics if `t2 == 0`; the first stage III check happens after one pull.
pub fn stop_stage3_unknown(
    mu_prime: f64,
    theta: f64,
    t2: u64,
    horizon: u64,
    rule: Stage3Rule,
) -> bool {
    assert!(t2 >= 1, "stage III rule evaluated before any probe pull");
    (mu_prime - theta).abs() >= rule.width(t2, horizon)
}

/// Anytime epoch `r`: the stage III rule with `r * 2^r` standing in for `T`.
///
/// Panics if `t2p == 0` or `r == 0`.
pub fn anytime_stop(mu1p_hat: f64, mu2p_hat: f64, t2p: u64, r: u32) -> bool {
    assert!(t2p >= 1 && r >= 1, "anytime rule needs t2p >= 1 and r >= 1");
    let guess = f64::from(r) * 2f64.powi(r as i32);
    let x = guess / t2p as f64;
    let width = (2.0 / t2p as f64 * iterated_log(x).max(0.0)).sqrt();
    (mu1p_hat - mu2p_hat).abs() >= width
}

/// Minimax re-exploration: stop once `|p1 - p2| >= sqrt(8/s * log+(T/s))`.
///
/// Panics if `s == 0`.
pub fn fallback_stop(p1: f64, p2: f64, s: u64, horizon: u64) -> bool {
    assert!(s >= 1, "fallback rule evaluated before any pull");
    let s = s as f64;
    (p1 - p2).abs() >= (8.0 / s * ln_plus(horizon as f64 / s)).sqrt()
}

/// `ln(x (ln^2 x + 1))`.
fn iterated_log(x: f64) -> f64 {
    let l = x.ln();
    (x * (l * l + 1.0)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_rule_examples() {
        let eps = 0.5;
        // A zero count never stops.
        assert!(!stop_stage3_known(1.0, 0.0, 0, 0.5, eps, 1_000_000));
        // lhs = 15 vs ln(250000) = 12.4292
        assert!(stop_stage3_known(0.3, 0.0, 100, 0.5, eps, 1_000_000));
        // lhs = 10
        assert!(!stop_stage3_known(0.2, 0.0, 100, 0.5, eps, 1_000_000));
    }

    #[test]
    fn stage1_rule_examples() {
        // Width collapses once t >= T1.
        assert!(stop_stage1_unknown(0.0, 0.0, 191, 191));
        assert!(stop_stage1_unknown(0.3, 0.3, 400, 191));
        // width = sqrt(ln(191/16)) = 1.5747
        assert!(!stop_stage1_unknown(1.0, 0.0, 16, 191));
        assert!(stop_stage1_unknown(1.6, 0.0, 16, 191));
    }

    #[test]
    #[should_panic]
    fn stage1_rule_rejects_zero_time() {
        stop_stage1_unknown(0.0, 1.0, 0, 10);
    }

    #[test]
    fn stage3_widths() {
        let w = Stage3Rule::Plain.width(1, 1_000_000);
        assert!((w - 6.176_134_701_217_523).abs() < 1e-12, "{w}");
        let w = Stage3Rule::EScaled.width(1, 1_000_000);
        assert!((w - 6.335_979_785_919_717).abs() < 1e-12, "{w}");
        assert!(stop_stage3_unknown(
            7.0,
            0.0,
            1,
            1_000_000,
            Stage3Rule::Plain
        ));
        assert!(!stop_stage3_unknown(
            6.0,
            0.0,
            1,
            1_000_000,
            Stage3Rule::Plain
        ));
    }

    #[test]
    #[should_panic]
    fn stage3_rule_rejects_zero_pulls() {
        stop_stage3_unknown(0.0, 1.0, 0, 100, Stage3Rule::Plain);
    }

    #[test]
    fn anytime_examples() {
        // width at r = 10, t2p = 1 is 5.23288
        assert!(!anytime_stop(5.2, 0.0, 1, 10));
        assert!(anytime_stop(5.24, 0.0, 1, 10));
        assert!(!anytime_stop(0.0, 0.0, 1, 10));
    }

    #[test]
    fn widths_vanish_instead_of_going_nan() {
        // T/t2 < 1 would put a negative number under the root.
        assert_eq!(Stage3Rule::Plain.width(400, 100), 0.0);
        assert!(anytime_stop(0.0, 0.0, 4, 1));
    }

    #[test]
    fn fallback_rule() {
        assert!(fallback_stop(0.0, 0.0, 100, 100));
        let w = (8.0 * 7f64.ln()).sqrt();
        assert!(fallback_stop(w + 1e-9, 0.0, 1, 7));
        assert!(!fallback_stop(w - 1e-9, 0.0, 1, 7));
    }
}
