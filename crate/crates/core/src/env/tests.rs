use super::*;
use crate::fixture::{desk_fixture, SERVICE_START_S};

fn context() -> Arc<EnvContext> {
    let f = desk_fixture();
    Arc::new(EnvContext::new(f.model, f.timetable, f.od, f.placements, SimParams::default()).unwrap())
}

fn mid_line(ctx: &EnvContext) -> Vec<BlockId> {
    ["U3a", "U3b", "D3a", "D3b"].iter().map(|n| ctx.model.block_by_name(n).unwrap()).collect()
}

fn config(disruption: Option<DisruptionRanges>) -> EpisodeConfig {
    EpisodeConfig {
        start_window_s: (28_000, 28_000),
        horizon_s: 1800,
        decision_interval_s: DECISION_INTERVAL_S,
        disruption,
        weights: RewardWeights::RECOVERY,
        arrival_mode: ArrivalMode::Deterministic,
    }
}

fn fixed(ctx: &EnvContext, offset: u32, duration: u32) -> DisruptionRanges {
    DisruptionRanges {
        locations: vec![mid_line(ctx)],
        start_offset_s: (offset, offset),
        duration_s: (duration, duration),
    }
}

fn point_features(env: &RailEnv) -> &[f64] {
    &env.observation()[..POINT_FEATURES * env.n_heads()]
}

#[test]
fn undisrupted_reset_has_no_rl_points() {
    let ctx = context();
    let mut env = RailEnv::new(Arc::clone(&ctx), config(None)).unwrap();
    env.reset(3).unwrap();
    assert_eq!(env.episode().unwrap().assignment.rl_count(), 0);
    assert!(env.action_mask().iter().all(|a| !a));
    assert!(point_features(&env).iter().all(|&x| x == 0.0));
    assert_eq!(env.observation().len(), ctx.layout.obs_len());
}

#[test]
fn disrupted_reset_reports_location() {
    let ctx = context();
    let mut env = RailEnv::new(Arc::clone(&ctx), config(Some(fixed(&ctx, 0, 1800)))).unwrap();
    let obs = env.reset(3).unwrap().to_vec();
    let g = &obs[obs.len() - GLOBAL_FEATURES..];
    assert_eq!(g[0], 1.0);
    let m = &ctx.model;
    let blocks = mid_line(&ctx);
    let lo = blocks.iter().map(|b| m.geometry.lo[b.index()]).fold(f64::INFINITY, f64::min);
    let hi = blocks.iter().map(|b| m.geometry.hi[b.index()]).fold(0.0, f64::max);
    assert!((g[1] - 0.5 * (lo + hi) / m.geometry.length).abs() < 1e-12);
    assert!(env.action_mask().iter().all(|&a| a), "mid-line span covers both turnaround stations");
}

#[test]
fn resets_are_deterministic() {
    let ctx = context();
    let cfg = EpisodeConfig {
        start_window_s: (25_000, 40_000),
        disruption: Some(DisruptionRanges {
            locations: vec![mid_line(&ctx), vec![ctx.model.block_by_name("U5a").unwrap()]],
            start_offset_s: (0, 600),
            duration_s: (600, 2400),
        }),
        ..config(None)
    };
    let mut a = RailEnv::new(Arc::clone(&ctx), cfg.clone()).unwrap();
    let mut b = RailEnv::new(ctx, cfg).unwrap();
    assert_eq!(a.reset(17).unwrap(), b.reset(17).unwrap());
    assert_eq!(a.disruption(), b.disruption());
    let acts = vec![3; a.n_heads()];
    assert_eq!(a.step(&acts).unwrap(), b.step(&acts).unwrap());
    assert_eq!(a.observation(), b.observation());
}

#[test]
fn all_proceed_matches_timetable_only() {
    let ctx = context();
    let cfg = EpisodeConfig { horizon_s: 3600, ..config(None) };
    let mut env = RailEnv::new(Arc::clone(&ctx), cfg).unwrap();
    env.reset(0).unwrap();
    let mut base = ctx.reference.snapshot_before(28_000).clone();
    while base.sim.now() < 28_000 {
        base.tick();
    }
    let zeros = vec![0; env.n_heads()];
    loop {
        let r = env.step(&zeros).unwrap();
        assert_eq!(r.info.aggregates.deviation, 0.0);
        assert_eq!(r.info.aggregates.stop_seconds, 0.0);
        for _ in 0..r.info.seconds {
            base.tick();
        }
        let ep = env.episode().unwrap();
        assert_eq!(ep.sim.trains, base.sim.trains);
        assert_eq!(ep.sim.accounting(), base.sim.accounting());
        if r.done {
            break;
        }
    }
    assert_eq!(env.episode().unwrap().sim.now(), 28_000 + 3600);
}

#[test]
fn rejects_bad_actions() {
    let ctx = context();
    let mut env = RailEnv::new(Arc::clone(&ctx), config(None)).unwrap();
    assert_eq!(env.step(&vec![0; env.n_heads()]), Err(EnvError::NotReset));
    env.reset(0).unwrap();
    assert_eq!(env.step(&[0]), Err(EnvError::Dimension { expected: env.n_heads(), got: 1 }));
    assert_eq!(env.step(&vec![MACRO_ACTIONS; env.n_heads()]), Err(EnvError::ActionRange(MACRO_ACTIONS)));
}

#[test]
fn turnback_at_uncontrolled_point_is_refused() {
    let ctx = context();
    let mut env = RailEnv::new(ctx, config(None)).unwrap();
    env.reset(0).unwrap();
    let turn = MacroChoice { turn_back: true, bucket: 0 }.index();
    let r = env.step(&vec![turn; env.n_heads()]).unwrap();
    assert_eq!(r.info.refusals as usize, env.n_heads());
    assert!(!r.done);
}

#[test]
fn disruption_flag_tracks_active_interval() {
    let ctx = context();
    let cfg = EpisodeConfig { decision_interval_s: 1, horizon_s: 400, ..config(Some(fixed(&ctx, 100, 200))) };
    let mut env = RailEnv::new(Arc::clone(&ctx), cfg).unwrap();
    env.reset(0).unwrap();
    let len = env.obs_len();
    let zeros = vec![0; env.n_heads()];
    let d = env.disruption().unwrap().clone();
    loop {
        let now = env.episode().unwrap().sim.now();
        let obs = env.observation();
        assert_eq!(obs.len(), len);
        assert!(obs.iter().all(|x| x.is_finite() && (-1.0..=1.0).contains(x)));
        assert_eq!(obs[len - GLOBAL_FEATURES] == 1.0, d.active_at(now), "t = {now}");
        if env.step(&zeros).unwrap().done {
            break;
        }
    }
}

#[test]
fn horizon_ends_episode() {
    let ctx = context();
    let cfg = EpisodeConfig { horizon_s: 150, ..config(None) };
    let mut env = RailEnv::new(ctx, cfg).unwrap();
    env.reset(0).unwrap();
    let zeros = vec![0; env.n_heads()];
    let secs: Vec<_> = (0..3).map(|_| env.step(&zeros).unwrap()).map(|r| (r.info.seconds, r.done)).collect();
    assert_eq!(secs, [(60, false), (60, false), (30, true)]);
}

#[test]
fn config_validation() {
    let ctx = context();
    let bad = |cfg: EpisodeConfig| RailEnv::new(Arc::clone(&ctx), cfg).err();
    assert_eq!(bad(EpisodeConfig { horizon_s: 0, ..config(None) }), Some(EnvError::Config("horizon must be positive")));
    assert!(bad(EpisodeConfig { start_window_s: (SERVICE_START_S - 1, SERVICE_START_S), ..config(None) }).is_some());
    let empty = DisruptionRanges { locations: Vec::new(), start_offset_s: (0, 0), duration_s: (1, 1) };
    assert_eq!(bad(config(Some(empty))), Some(EnvError::Randomize(RandomizeError::NoLocations)));
}

#[test]
fn reference_plan_matches_timetable_run() {
    let ctx = context();
    let plan = &ctx.reference.plan;
    let first = ctx.timetable.entries.iter().map(|e| e.arrive_s).min().unwrap();
    assert!(first >= SERVICE_START_S);
    assert_eq!(plan.start(), first);
    assert_eq!(plan.heads_at(first).len(), ctx.placements.len());
    assert!(plan.heads_at(first - 1).is_empty());
    assert!(plan.heads_at(plan.end()).is_empty());
    let snap = ctx.reference.snapshot_before(30_000);
    assert!(snap.sim.now() <= 30_000 && 30_000 - snap.sim.now() < SNAPSHOT_S);
}
