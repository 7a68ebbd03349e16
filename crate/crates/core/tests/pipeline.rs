//! The desk line end to end through the public API: context, environment,
//! training and evaluation runs.

use std::sync::Arc;

use railsched_core::env::{DisruptionRanges, EnvContext, EpisodeConfig, RailEnv, RewardWeights};
use railsched_core::fixture::desk_fixture;
use railsched_core::harness::{compare, compute_metrics, run_scenario, Controller, Scenario};
use railsched_core::passenger::ArrivalMode;
use railsched_core::ppo::{rollout, train, PolicyParams, PpoConfig, SequentialRunner, TrainConfig};
use railsched_core::sim::{Disruption, SimParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn context() -> Arc<EnvContext> {
    let f = desk_fixture();
    Arc::new(EnvContext::new(f.model, f.timetable, f.od, f.placements, SimParams::default()).unwrap())
}

fn closure(ctx: &EnvContext) -> Vec<railsched_core::BlockId> {
    ["U3a", "U3b", "D3a", "D3b"].iter().map(|b| ctx.model.block_by_name(b).unwrap()).collect()
}

fn short_config(ctx: &EnvContext) -> EpisodeConfig {
    EpisodeConfig {
        start_window_s: (27000, 28800),
        horizon_s: 1200,
        decision_interval_s: 60,
        disruption: Some(DisruptionRanges {
            locations: vec![closure(ctx)],
            start_offset_s: (0, 300),
            duration_s: (300, 900),
        }),
        weights: RewardWeights::RESCHEDULING,
        arrival_mode: ArrivalMode::Poisson,
    }
}

#[test]
fn rollouts_are_finite_and_repeatable() {
    let ctx = context();
    let mut env = RailEnv::new(Arc::clone(&ctx), short_config(&ctx)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let p = PolicyParams::init(env.obs_len(), [16, 16], env.n_heads(), env.n_actions(), &mut rng);
    let a = rollout(&mut env, &p, 3, false).unwrap();
    let b = rollout(&mut env, &p, 3, false).unwrap();
    assert_eq!(a, b);
    assert!(a.steps.last().unwrap().done);
    assert!(a.steps.iter().all(|s| s.reward.is_finite() && s.obs.iter().all(|x| x.is_finite())));
    assert_ne!(a, rollout(&mut env, &p, 4, false).unwrap());
}

#[test]
fn short_training_is_deterministic() {
    let ctx = context();
    let env = RailEnv::new(Arc::clone(&ctx), short_config(&ctx)).unwrap();
    let cfg = TrainConfig {
        iterations: 3,
        episodes_per_iter: 2,
        seed: 5,
        ppo: PpoConfig { hidden: [16, 16], minibatch: 32, reward_scale: 0.01, ..PpoConfig::default() },
    };
    let init =
        PolicyParams::init(env.obs_len(), [16, 16], env.n_heads(), env.n_actions(), &mut ChaCha8Rng::seed_from_u64(5));
    let mut seen = 0;
    let (p1, c1) = train(init.clone(), &cfg, &mut SequentialRunner { env: env.clone() }, |_, _| seen += 1).unwrap();
    let (p2, c2) = train(init.clone(), &cfg, &mut SequentialRunner { env }, |_, _| {}).unwrap();
    assert_eq!(seen, 3);
    assert_eq!((p1.clone(), c1.clone()), (p2, c2));
    assert!(p1.is_finite());
    assert_ne!(p1, init);
    assert!(c1.iter().all(|r| r.mean_return.is_finite() && r.episodes == 2));
}

#[test]
fn closure_runs_compare_on_the_same_scenario() {
    let ctx = context();
    let scenario = Scenario {
        name: "closure".into(),
        disruption: Some(Disruption { blocks: closure(&ctx), start: 28800, duration: 1800 }),
        start_s: Some(27000),
        arrivals: ArrivalMode::Deterministic,
    };
    let base = run_scenario(&ctx, &scenario, &Controller::TimetableOnly, Some(7200), 0).unwrap();
    let proceed = run_scenario(&ctx, &scenario, &Controller::AllProceed, Some(7200), 0).unwrap();
    assert_eq!((base.start_s, base.end_s), (27000, 34200));
    assert_eq!(base.disruptions.len(), 1);
    assert!(compute_metrics(&base).stop_time_s > 0);
    assert!(base.accum.arrived > 0 && proceed.accum.arrived > 0);
    let cmp = compare(&base, &proceed).unwrap();
    assert!(cmp.rows.iter().any(|r| r.metric == "stop_time_s"));
    let wrong = PolicyParams::zeros(3, [4, 4], 1, 2);
    assert!(run_scenario(&ctx, &scenario, &Controller::Policy(Arc::new(wrong)), Some(60), 0).is_err());
}
