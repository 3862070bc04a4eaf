#![allow(dead_code)]

use detc_core::{
    sample_sum, BanditInstance, Batch, Observation, Outcome, Policy, RewardModel, Stage,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One planned round together with the stage the policy was in when it planned it.
pub struct Step {
    pub stage: Stage,
    pub committed: Option<usize>,
    pub batch: Batch,
}

/// Drives `policy` to `horizon` like the harness does, recording every round.
pub fn drive(
    policy: &mut dyn Policy,
    instance: &BanditInstance,
    horizon: u64,
    seed: u64,
) -> Vec<Step> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps = Vec::new();
    while policy.time() < horizon {
        let stage = policy.stage();
        let committed = policy.committed_arm();
        let batch = policy.plan_round(Some(horizon)).unwrap();
        assert!(batch.total() >= 1);
        assert!(policy.time() + batch.total() <= horizon);
        let outcomes = batch
            .requests
            .iter()
            .map(|r| Outcome {
                count: r.count,
                reward_sum: sample_sum(RewardModel::Gaussian, instance, r.arm, r.count, &mut rng),
            })
            .collect();
        policy.absorb(&batch, &Observation { outcomes }).unwrap();
        steps.push(Step {
            stage,
            committed,
            batch,
        });
    }
    steps
}

/// Arms touched by a batch.
pub fn arms_of(batch: &Batch) -> Vec<usize> {
    batch.requests.iter().map(|r| r.arm).collect()
}

/// Plans and absorbs one round with rewards drawn from `seed`.
pub fn drive_one(policy: &mut dyn Policy, instance: &BanditInstance, horizon: u64, seed: u64) {
    let batch = policy.plan_round(Some(horizon)).unwrap();
    absorb_sampled(policy, instance, &batch, seed);
}

/// Feeds back sampled rewards for `batch`.
pub fn absorb_sampled(
    policy: &mut dyn Policy,
    instance: &BanditInstance,
    batch: &Batch,
    seed: u64,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcomes = batch
        .requests
        .iter()
        .map(|r| Outcome {
            count: r.count,
            reward_sum: sample_sum(RewardModel::Gaussian, instance, r.arm, r.count, &mut rng),
        })
        .collect();
    policy.absorb(batch, &Observation { outcomes }).unwrap();
}

/// An observation of all-zero rewards that mirrors `batch`.
pub fn zero_obs(batch: &Batch) -> Observation {
    Observation {
        outcomes: batch
            .requests
            .iter()
            .map(|r| Outcome {
                count: r.count,
                reward_sum: 0.0,
            })
            .collect(),
    }
}
