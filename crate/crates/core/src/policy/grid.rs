//! Query grids: the only times at which batched policies look at their data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::params::ceil_u64;

/// A strictly increasing, lazily generated set of check times.
///
/// The grid is an optional leading point, followed by the arithmetic
/// progression `ceil(offset + k*step)` for `k = 1, 2, ...` (or
/// `2*ceil(k*step)` for pair-aligned grids), deduplicated after rounding.
/// With a cap, points past it are dropped and the cap itself is the last point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryGrid {
    lead: Option<u64>,
    progression: Option<Progression>,
    cap: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Progression {
    offset: f64,
    step: f64,
    pair_aligned: bool,
}

impl Progression {
    fn point(&self, k: u64) -> u64 {
        let k = k as f64;
        if self.pair_aligned {
            2 * ceil_u64(k * self.step)
        } else {
            ceil_u64(self.offset + k * self.step)
        }
    }

    /// Smallest point strictly greater than `t`.
    fn next_after(&self, t: u64) -> u64 {
        let scaled = if self.pair_aligned {
            t as f64 / 2.0
        } else {
            t as f64 - self.offset
        };
        let mut k = ((scaled / self.step).floor() as i64 - 1).max(1) as u64;
        while self.point(k) <= t {
            k += 1;
        }
        self.point(k)
    }
}

impl QueryGrid {
    /// A grid with only `lead` and `cap`; used when a gap estimate is zero.
    pub fn lead_then_cap(lead: u64, cap: u64) -> Self {
        Self {
            lead: Some(lead.min(cap)),
            progression: None,
            cap: Some(cap),
        }
    }

    pub fn lead(&self) -> Option<u64> {
        self.lead
    }

    pub fn cap(&self) -> Option<u64> {
        self.cap
    }

    /// Offset of the arithmetic part (`tau0` for the known-gap grid).
    pub fn offset(&self) -> Option<f64> {
        self.progression.map(|p| p.offset)
    }

    pub fn step(&self) -> Option<f64> {
        self.progression.map(|p| p.step)
    }

    /// Smallest grid time strictly after `t`, or `None` past the cap.
    pub fn next_after(&self, t: u64) -> Option<u64> {
        if let Some(lead) = self.lead {
            if lead > t {
                return Some(lead);
            }
        }
        let next = match self.progression {
            Some(p) => p.next_after(t),
            None => u64::MAX,
        };
        match self.cap {
            Some(cap) if next > cap => (cap > t).then_some(cap),
            _ => Some(next),
        }
    }

    pub fn contains(&self, t: u64) -> bool {
        t >= 1 && self.next_after(t - 1) == Some(t)
    }

    /// All grid times up to and including `limit`.
    pub fn times_up_to(&self, limit: u64) -> Vec<u64> {
        let mut out = Vec::new();
        let mut t = 0;
        while let Some(next) = self.next_after(t) {
            if next > limit {
                break;
            }
            out.push(next);
            t = next;
        }
        out
    }
}

/// Stage III grid of the batched known-gap policy:
/// `ceil(tau0 + k*step)` with `tau0 = ln(T d^2) / (2(1-eps)^2 d^2)` and
/// `step = (2 sqrt(ln(T d^2)) + 4) / (2(1-eps)^2 d^2)`.
pub fn grid_known(horizon: u64, delta: f64, epsilon: f64) -> Result<QueryGrid> {
    let d2 = delta * delta;
    let log_product = (horizon as f64 * d2).ln();
    if !(delta.is_finite() && delta > 0.0)
        || log_product.is_nan()
        || log_product < 0.0
        || !(0.0..1.0).contains(&epsilon)
    {
        return Err(Error::GuaranteeRegime(format!(
            "no known-gap grid for T = {horizon}, delta = {delta}, epsilon = {epsilon}"
        )));
    }
    let denom = 2.0 * (1.0 - epsilon).powi(2) * d2;
    Ok(QueryGrid {
        lead: None,
        progression: Some(Progression {
            offset: log_product / denom,
            step: (2.0 * log_product.sqrt() + 4.0) / denom,
            pair_aligned: false,
        }),
        cap: None,
    })
}

/// Stage I grid of the batched unknown-gap policy: `2*ceil(k*sqrt(ln T))`.
/// Times count pulls over both arms, so they are kept even.
///
/// Panics if `horizon < 3`.
pub fn grid_unknown_stage1(horizon: u64) -> QueryGrid {
    assert!(horizon >= 3, "stage I grid needs T >= 3");
    QueryGrid {
        lead: None,
        progression: Some(Progression {
            offset: 0.0,
            step: (horizon as f64).ln().sqrt(),
            pair_aligned: true,
        }),
        cap: None,
    }
}

/// Stage III grid of the batched unknown-gap policy.
///
/// The first point is `N1 = ceil(2 ln T / ln ln T)`; after it come
/// `ceil(2/g^2 N2 ln(T ln^3 T) + k/g^2 N2 (ln T)^(2/3))` with
/// `N2 = (1 + (ln T)^(-1/4))^2` and `g` the gap estimate, all capped at
/// `ceil(ln^2 T)`.
pub fn grid_unknown_stage3(horizon: u64, delta_hat: f64) -> Result<QueryGrid> {
    let (lead, cap) = stage3_lead_and_cap(horizon);
    if !(delta_hat.is_finite() && delta_hat > 0.0) {
        return Err(Error::EstimationDegenerate);
    }
    let log_t = (horizon as f64).ln();
    let n2 = (1.0 + log_t.powf(-0.25)).powi(2);
    let g2 = delta_hat * delta_hat;
    Ok(QueryGrid {
        lead: Some(lead),
        progression: Some(Progression {
            offset: 2.0 / g2 * n2 * (horizon as f64 * log_t.powi(3)).ln(),
            step: n2 * log_t.powf(2.0 / 3.0) / g2,
            pair_aligned: false,
        }),
        cap: Some(cap),
    })
}

/// `(min(N1, cap), cap)` for the batched unknown-gap stage III grid.
/// When `ln ln T <= 0` (tiny horizons) `N1` is undefined and the lead is the cap.
pub(crate) fn stage3_lead_and_cap(horizon: u64) -> (u64, u64) {
    let log_t = (horizon as f64).ln();
    let log_log_t = log_t.ln();
    let cap = ceil_u64(log_t * log_t).max(1);
    if log_log_t.is_nan() || log_log_t <= 0.0 {
        return (cap, cap);
    }
    let lead = ceil_u64(2.0 * log_t / log_log_t).min(cap);
    (lead, cap)
}
