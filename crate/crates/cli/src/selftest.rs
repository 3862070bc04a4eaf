//! Fast in-process checks, for a quick sanity run of an installed binary.

use detc_core::policy::{grid_known, grid_unknown_stage3, known_gap_params};
use detc_core::{
    hoeffding_tail, make_instance, make_policy, pseudo_regret, regret_upper_bound_known,
    round_count, run_episode, run_experiment, sample_sum, ExperimentConfig, PolicyKind, PolicySpec,
    RewardModel,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<(), String>;

pub const CHECKS: [(&str, Check); 6] = [
    ("closed-form parameters", closed_forms),
    ("query grids", grids),
    ("zero regret on equal means", zero_regret),
    ("regret and rounds within bounds", bounded_episodes),
    ("sampler respects the hoeffding tail", hoeffding),
    ("worker count does not change results", determinism),
];

/// Runs every check; returns `(name, outcome)` in order.
pub fn run_selftest() -> Vec<(&'static str, Result<(), String>)> {
    CHECKS.iter().map(|(name, f)| (*name, f())).collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn closed_forms() -> Result<(), String> {
    let p = known_gap_params(1_000_000, 0.5).map_err(|e| e.to_string())?;
    ensure(p.epsilon == 0.5 && p.stage1_pulls == 76, || {
        format!("{p:?}")
    })?;
    let b = regret_upper_bound_known(1_000_000, 1.0).map_err(|e| e.to_string())?;
    ensure((b - 64.366_585_229_748_9).abs() < 1e-9, || {
        format!("upper bound {b}")
    })
}

fn grids() -> Result<(), String> {
    let g = grid_known(1_000_000, 0.5, 0.5).map_err(|e| e.to_string())?;
    ensure(g.times_up_to(365) == [188, 277, 365], || {
        format!("{:?}", g.times_up_to(365))
    })?;
    let g = grid_unknown_stage3(1_000_000, 1.0).map_err(|e| e.to_string())?;
    ensure(g.lead() == Some(11) && g.cap() == Some(191), || {
        format!("{g:?}")
    })
}

fn spec_for(kind: PolicyKind, horizon: u64, arms: usize) -> PolicySpec {
    let s = if kind.is_anytime() {
        PolicySpec::anytime()
    } else {
        PolicySpec::new(kind, horizon)
    };
    s.with_arms(arms).with_delta(0.5).forced()
}

fn arms_for(kind: PolicyKind) -> usize {
    if kind.two_armed_only() {
        2
    } else {
        3
    }
}

fn zero_regret() -> Result<(), String> {
    for kind in PolicyKind::ALL {
        let k = arms_for(kind);
        let instance = make_instance(vec![0.4; k]).map_err(|e| e.to_string())?;
        for seed in 0..3 {
            let mut p = make_policy(&spec_for(kind, 5000, k)).map_err(|e| e.to_string())?;
            let tr = run_episode(
                p.as_mut(),
                &instance,
                RewardModel::Gaussian,
                Some(5000),
                seed,
            )
            .map_err(|e| e.to_string())?;
            let r = pseudo_regret(&tr, &instance).map_err(|e| e.to_string())?;
            ensure(r == 0.0, || format!("{kind}: regret {r}"))?;
        }
    }
    Ok(())
}

fn bounded_episodes() -> Result<(), String> {
    for kind in PolicyKind::ALL {
        let k = arms_for(kind);
        let means: Vec<f64> = (0..k).map(|i| 1.0 - 0.5 * i as f64).collect();
        let instance = make_instance(means).map_err(|e| e.to_string())?;
        for (seed, horizon) in [(0, 6), (1, 97), (2, 5000)] {
            let mut p = make_policy(&spec_for(kind, horizon, k)).map_err(|e| e.to_string())?;
            let tr = run_episode(
                p.as_mut(),
                &instance,
                RewardModel::Gaussian,
                Some(horizon),
                seed,
            )
            .map_err(|e| e.to_string())?;
            let r = pseudo_regret(&tr, &instance).map_err(|e| e.to_string())?;
            ensure(r >= 0.0 && r <= horizon as f64 * instance.max_gap(), || {
                format!("{kind} at T = {horizon}: regret {r}")
            })?;
            ensure(round_count(&tr) <= horizon, || {
                format!("{kind}: too many rounds")
            })?;
        }
    }
    Ok(())
}

fn hoeffding() -> Result<(), String> {
    let instance = make_instance(vec![0.0]).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (n, eps, trials) = (16u64, 0.5, 20_000u32);
    let hits = (0..trials)
        .filter(|_| sample_sum(RewardModel::Gaussian, &instance, 0, n, &mut rng) / n as f64 >= eps)
        .count();
    let freq = f64::from(hits as u32) / f64::from(trials);
    let bound = hoeffding_tail(n, eps, 1.0);
    ensure(freq <= bound, || {
        format!("frequency {freq} above bound {bound}")
    })
}

fn determinism() -> Result<(), String> {
    let mut c = ExperimentConfig::new(
        vec![PolicyKind::KArm, PolicyKind::Ucb],
        vec![1.0, 0.5, 0.0],
        vec![1000, 5000],
    );
    c.replications = 16;
    let a = run_experiment(&c, 1).map_err(|e| e.to_string())?;
    let b = run_experiment(&c, 3).map_err(|e| e.to_string())?;
    ensure(a.table == b.table, || "tables differ".into())
}
