//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs as a plain binary so every criterion reports even when an earlier
//! one fails. Exits nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::{Command as Process, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, ensure, Context, Result};
use railsched::formats::ScenarioFile;
use railsched::inputs::Inputs;
use railsched::rollout::vector_rollout;
use railsched::runs::{mean_metrics, run, run_seeds, MetricsLine};
use railsched::training::{train, TrainFile};
use railsched_core::agents::{assign_control, decision_points, ControlAssignment, RbAgent, TimetableAgent};
use railsched_core::env::{EnvContext, Episode, RailEnv};
use railsched_core::harness::{compute_metrics, Controller, RunRecord, Scenario};
use railsched_core::passenger::{ArrivalMode, PassengerWorld};
use railsched_core::ppo::{
    gae, loss_and_grad, sample_action, softmax, Batch, PolicyParams, PpoConfig, RolloutRunner, SequentialRunner,
};
use railsched_core::sim::{init_sim, Aspect, Command, Disruption, EventKind, SimState, Violation};
use railsched_core::{PointId, RouteId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EVAL_SEEDS: u64 = 20;
const FULL_DAY_LIMIT_S: f64 = 180.0;
const RANDOM_RUN_LIMIT_S: f64 = 30.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/desk")
}

fn fixture_inputs() -> Result<Inputs> {
    let d = fixtures();
    Ok(Inputs::load(&d.join("line.toml"), &d.join("timetable.csv"), &d.join("od.csv"))?)
}

fn train_file(name: &str) -> Result<TrainFile> {
    let path = fixtures().join(name);
    let mut f = TrainFile::parse(&std::fs::read_to_string(&path)?)?;
    f.rebase(&fixtures());
    Ok(f)
}

fn midline(inputs: &Inputs) -> Result<(Scenario, u32)> {
    let f = ScenarioFile::parse(&std::fs::read_to_string(fixtures().join("midline.toml"))?)?;
    let horizon = f.horizon_s.ok_or_else(|| anyhow!("midline scenario has no horizon"))?;
    Ok((f.resolve(&inputs.model)?, horizon))
}

/// Shared state built once: inputs, context and the trained rescheduling
/// policy (trained lazily, since several criteria need it).
struct World {
    inputs: Inputs,
    ctx: Arc<EnvContext>,
    policy: Option<(Arc<PolicyParams>, String, f64)>,
}

impl World {
    fn policy(&mut self) -> Result<(Arc<PolicyParams>, String, f64)> {
        if self.policy.is_none() {
            let file = train_file("train.toml")?;
            let t = Instant::now();
            let trained = train(&self.inputs, &self.ctx, &file, |_, _| {})?;
            let secs = t.elapsed().as_secs_f64();
            let json = trained.checkpoint.to_json()?;
            self.policy = Some((Arc::new(trained.params), json, secs));
        }
        Ok(self.policy.clone().expect("trained"))
    }
}

fn random_commands(rng: &mut ChaCha8Rng, points: usize, routes: usize) -> Vec<Command> {
    (0..rng.random_range(0..4))
        .map(|_| {
            let route = RouteId(rng.random_range(0..routes as u32));
            match rng.random_range(0..4) {
                0 => Command::SetSignal {
                    point: PointId(rng.random_range(0..points as u32)),
                    aspect: if rng.random_bool(0.5) { Aspect::Proceed } else { Aspect::Stop },
                },
                1 => Command::RequestRoute { route },
                2 => Command::SetRoute { route },
                _ => Command::ReleaseRoute { route },
            }
        })
        .collect()
}

#[derive(Default)]
struct SafetyTally {
    steps: u64,
    shared: u64,
    overspeed: u64,
    conflicting: u64,
    other: u64,
    unconserved: u64,
    moved_m: f64,
}

fn tally(s: &SimState, t: &mut SafetyTally) {
    t.steps += 1;
    for v in s.check_invariants() {
        match v {
            Violation::SharedBlock { .. } => t.shared += 1,
            Violation::Overspeed { .. } => t.overspeed += 1,
            Violation::ConflictingLocks { .. } => t.conflicting += 1,
            _ => t.other += 1,
        }
    }
    if !s.accounting().is_conserved() {
        t.unconserved += 1;
    }
}

/// Random commands for `steps` seconds on the fixture line with Poisson
/// passengers and a mid-line closure.
fn random_run(world: &World, seed: u64, steps: u32) -> Result<(SafetyTally, f64)> {
    let ctx = &world.ctx;
    let m = &ctx.model;
    let start = ctx.service_start();
    let mut s = init_sim(Arc::clone(m), &ctx.placements, seed)?;
    s.params = ctx.params;
    s.epoch_s = start;
    s.set_passengers(PassengerWorld::new(m, Arc::clone(&ctx.od), ArrivalMode::Poisson));
    let blocks = ["U3a", "U3b", "D3a", "D3b"].iter().map(|b| m.block_by_name(b)).collect::<Result<Vec<_>, _>>()?;
    s.add_disruption(Disruption { blocks, start: start + 1800, duration: 1800 })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = SafetyTally::default();
    let t0 = Instant::now();
    for _ in 0..steps {
        let cmds = random_commands(&mut rng, m.points.len(), m.routes.len());
        let before: f64 = (0..s.trains.len()).map(|i| s.train_position(s.trains[i].id)).sum();
        s.step(&cmds);
        let after: f64 = (0..s.trains.len()).map(|i| s.train_position(s.trains[i].id)).sum();
        t.moved_m += (after - before).abs();
        tally(&s, &mut t);
    }
    Ok((t, t0.elapsed().as_secs_f64()))
}

fn c1_safety(world: &World) -> Result<Outcome> {
    let mut details = Vec::new();
    let mut pass = true;
    for seed in [1, 2, 3] {
        let (t, secs) = random_run(world, seed, 10_000)?;
        let ok = t.shared == 0 && t.overspeed == 0 && t.conflicting == 0 && secs < RANDOM_RUN_LIMIT_S;
        pass &= ok;
        details.push(format!(
            "seed {seed}: {} steps, shared {} overspeed {} conflicting {} other {}, {:.0} m moved, {secs:.2} s",
            t.steps, t.shared, t.overspeed, t.conflicting, t.other, t.moved_m
        ));
    }
    outcome(pass, format!("{} (limit {RANDOM_RUN_LIMIT_S} s per run)", details.join("; ")))
}

/// Timetable-only episode with Poisson passengers and a closure.
fn disrupted_timetable_episode(world: &World, seed: u64) -> Result<Episode> {
    let ctx = &world.ctx;
    let m = &ctx.model;
    let start = ctx.service_start();
    let mut sim = init_sim(Arc::clone(m), &ctx.placements, seed)?;
    sim.params = ctx.params;
    sim.epoch_s = start;
    sim.set_passengers(PassengerWorld::new(m, Arc::clone(&ctx.od), ArrivalMode::Poisson));
    let blocks = ["U3a", "U3b", "D3a", "D3b"].iter().map(|b| m.block_by_name(b)).collect::<Result<Vec<_>, _>>()?;
    sim.add_disruption(Disruption { blocks, start: start + 3600, duration: 1800 })?;
    let agent = TimetableAgent::new(Arc::clone(&ctx.rules), m.points.len());
    Ok(Episode::new(sim, agent, RbAgent::new(Vec::new(), ctx.placements.len()), ControlAssignment::all_timetable(m)))
}

fn c2_conservation(world: &World) -> Result<Outcome> {
    let ctx = &world.ctx;
    let (random, _) = random_run(world, 7, 10_000)?;
    let mut day = SafetyTally::default();
    let mut ep = EnvContext::timetable_episode(
        &ctx.model,
        &ctx.rules,
        &ctx.od,
        &ctx.placements,
        ctx.params,
        ctx.service_start(),
        11,
    )?;
    while !ep.finished() {
        ep.tick();
        tally(&ep.sim, &mut day);
    }
    let mut jam = SafetyTally::default();
    let mut ep = disrupted_timetable_episode(world, 12)?;
    for _ in 0..3 * 3600 {
        ep.tick();
        tally(&ep.sim, &mut jam);
    }
    let a = ep.sim.accounting();
    let runs = [("random commands", &random), ("full day", &day), ("closure with poisson", &jam)];
    let pass = runs.iter().all(|(_, t)| t.unconserved == 0 && t.other == 0);
    let detail = runs
        .iter()
        .map(|(n, t)| format!("{n}: {} of {} steps unbalanced", t.unconserved, t.steps))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(pass, format!("{detail}; last run generated {} arrived {}", a.generated, a.arrived))
}

fn c3_timetable_fidelity(world: &World) -> Result<Outcome> {
    let ctx = &world.ctx;
    let mut ep = EnvContext::timetable_episode(
        &ctx.model,
        &ctx.rules,
        &ctx.od,
        &ctx.placements,
        ctx.params,
        ctx.service_start(),
        0,
    )?;
    let mut arrivals: Vec<Vec<(u32, u32)>> = vec![Vec::new(); ctx.placements.len()];
    let mut stops = 0;
    while !ep.finished() && ep.sim.now() < ctx.service_start() + 86_400 {
        for e in ep.tick() {
            match e.kind {
                EventKind::Arrive => {
                    let tr = e.train.ok_or_else(|| anyhow!("arrival without train"))?;
                    let b = e.block.ok_or_else(|| anyhow!("arrival without block"))?;
                    arrivals[tr.index()].push((b.index() as u32, e.t));
                }
                EventKind::StopBetweenStationsBegin => stops += 1,
                _ => {}
            }
        }
    }
    let mut worst = 0i64;
    let mut matched = 0;
    let mut missing = 0;
    for (plan, got) in ctx.schedule.iter().zip(&arrivals) {
        // A train starts at its first stop, so that stop has no arrival.
        let plan = &plan[1.min(plan.len())..];
        if plan.len() != got.len() {
            missing += plan.len().abs_diff(got.len());
        }
        for ((pb, pt), (gb, gt)) in plan.iter().zip(got) {
            ensure!(pb.index() as u32 == *gb, "arrival at block {gb}, planned {}", pb.index());
            worst = worst.max((*gt as i64 - *pt as i64).abs());
            matched += 1;
        }
    }
    outcome(
        worst <= 5 && missing == 0 && stops == 0,
        format!(
            "{matched} arrivals, {missing} missing, worst deviation {worst} s (limit 5 s), {stops} interstation stops"
        ),
    )
}

/// Interstation stop intervals (train, begin, end); open stops run to the
/// end of the record.
fn stop_intervals(rec: &RunRecord) -> Vec<(u32, u32, u32)> {
    let mut open: Vec<(u32, u32)> = Vec::new();
    let mut out = Vec::new();
    for e in &rec.events {
        let Some(tr) = e.train else { continue };
        match e.kind {
            EventKind::StopBetweenStationsBegin => open.push((tr, e.t)),
            EventKind::StopBetweenStationsEnd => {
                if let Some(i) = open.iter().position(|(t, _)| *t == tr) {
                    let (_, b) = open.remove(i);
                    out.push((tr, b, e.t));
                }
            }
            _ => {}
        }
    }
    out.extend(open.into_iter().map(|(tr, b)| (tr, b, rec.end_s)));
    out
}

fn c4_disruption_jams(world: &World) -> Result<Outcome> {
    let (scenario, horizon) = midline(&world.inputs)?;
    let clear = scenario.disruption.as_ref().map(|d| d.end()).ok_or_else(|| anyhow!("no disruption"))?;
    let seeds: Vec<u64> = (0..EVAL_SEEDS).collect();
    let recs = run_seeds(&world.inputs, &world.ctx, &scenario, &Controller::TimetableOnly, Some(horizon), &seeds)?;
    let mut pass = true;
    let (mut events, mut time, mut after) = (0u64, 0u64, 0u64);
    for r in &recs {
        let m = compute_metrics(r);
        let late: u64 = stop_intervals(r).iter().map(|&(_, b, e)| e.saturating_sub(b.max(clear)) as u64).sum();
        pass &= m.stop_events >= 1 && m.stop_time_s > 0 && late > 0;
        events += m.stop_events;
        time += m.stop_time_s;
        after += late;
    }
    let n = recs.len() as f64;
    outcome(
        pass,
        format!(
            "{} seeds, mean {:.1} stop events, {:.0} s stopped, {:.0} s of it after the closure lifts; every seed jams",
            recs.len(),
            events as f64 / n,
            time as f64 / n,
            after as f64 / n
        ),
    )
}

fn c5_policy_beats_baseline(world: &mut World) -> Result<Outcome> {
    let (params, _, train_s) = world.policy()?;
    let (scenario, horizon) = midline(&world.inputs)?;
    let seeds: Vec<u64> = (0..EVAL_SEEDS).collect();
    let lines = |c: &Controller| -> Result<Vec<MetricsLine>> {
        Ok(run_seeds(&world.inputs, &world.ctx, &scenario, c, Some(horizon), &seeds)?
            .iter()
            .map(MetricsLine::new)
            .collect())
    };
    let base = mean_metrics(&lines(&Controller::TimetableOnly)?);
    let pol = mean_metrics(&lines(&Controller::Policy(params))?);
    let reduction = if base.stop_time_s > 0.0 { 1.0 - pol.stop_time_s / base.stop_time_s } else { 0.0 };
    outcome(
        reduction >= 0.5 && pol.arrived >= base.arrived,
        format!(
            "{} poisson seeds: stop time {:.0} s -> {:.0} s ({:.1}% reduction, need >= 50%), arrived {:.1} -> {:.1} \
             (need no drop); trained in {train_s:.0} s",
            base.runs,
            base.stop_time_s,
            pol.stop_time_s,
            100.0 * reduction,
            base.arrived,
            pol.arrived
        ),
    )
}

fn c6_action_space(world: &World) -> Result<Outcome> {
    let m = &world.ctx.model;
    let raw = m.points.len();
    let macro_points = decision_points(m, None).len();
    let (scenario, _) = midline(&world.inputs)?;
    let a = assign_control(m, scenario.disruption.as_ref())?;
    let rl_raw = a.rl_count();
    let rl_macro = decision_points(m, Some(&a.rl_stations)).len();
    outcome(
        macro_points > 0 && raw >= 4 * macro_points,
        format!(
            "{raw} control points vs {macro_points} decision points ({:.2}x, need >= 4x); \
             closure span: {rl_raw} points vs {rl_macro} decisions",
            raw as f64 / macro_points.max(1) as f64
        ),
    )
}

fn c7_full_day_speed(world: &mut World) -> Result<Outcome> {
    let (params, _, _) = world.policy()?;
    let (mut scenario, _) = midline(&world.inputs)?;
    scenario.start_s = None;
    let last = world.ctx.timetable.entries.iter().map(|e| e.depart_s).max().unwrap_or(0);
    let mut parts = Vec::new();
    let mut pass = true;
    for c in [Controller::TimetableOnly, Controller::Policy(params)] {
        let rec = run(&world.inputs, &world.ctx, &scenario, &c, None, 5)?;
        let ok = rec.wall_clock_s < FULL_DAY_LIMIT_S && rec.end_s >= last;
        pass &= ok;
        parts.push(format!(
            "{}: {} simulated s in {:.2} s, {} arrived",
            rec.controller,
            rec.end_s - rec.start_s,
            rec.wall_clock_s,
            rec.accum.arrived
        ));
    }
    outcome(pass, format!("{} (limit {FULL_DAY_LIMIT_S} s, must cover the whole timetable)", parts.join("; ")))
}

fn random_batch(rng: &mut ChaCha8Rng, obs: usize, heads: usize, k: usize, n: usize) -> Batch {
    let mut b = Batch::default();
    for _ in 0..n {
        b.obs.push((0..obs).map(|_| rng.random_range(-1.0..1.0)).collect());
        let mut mask: Vec<bool> = (0..heads).map(|_| rng.random_bool(0.7)).collect();
        mask[0] = true;
        b.mask.push(mask);
        b.actions.push((0..heads).map(|_| rng.random_range(0..k)).collect());
        b.logp.push(rng.random_range(-3.0..-0.5));
        b.adv.push(rng.random_range(-2.0..2.0));
        b.ret.push(rng.random_range(-1.0..1.0));
    }
    b
}

fn gradient_error() -> Result<f64> {
    let cfg = PpoConfig { ent_coef: 0.05, clip: 10.0, ..PpoConfig::default() };
    let mut worst: f64 = 0.0;
    for seed in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = PolicyParams::init(7, [6, 5], 3, 4, &mut rng);
        // Larger head weights than at init keep the policy away from uniform.
        for x in &mut p.theta {
            *x *= 2.0;
        }
        let batch = random_batch(&mut rng, 7, 3, 4, 12);
        let idx: Vec<usize> = (0..batch.len()).collect();
        let mut g = vec![0.0; p.theta.len()];
        loss_and_grad(&p, &batch, &idx, &cfg, Some(&mut g))?;
        let h = 1e-5;
        for (i, &gi) in g.iter().enumerate() {
            let x = p.theta[i];
            p.theta[i] = x + h;
            let up = loss_and_grad(&p, &batch, &idx, &cfg, None)?.total;
            p.theta[i] = x - h;
            let down = loss_and_grad(&p, &batch, &idx, &cfg, None)?.total;
            p.theta[i] = x;
            let fd = (up - down) / (2.0 * h);
            worst = worst.max((gi - fd).abs() / gi.abs().max(fd.abs()).max(1e-3));
        }
    }
    Ok(worst)
}

fn gae_error() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..60);
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let d: Vec<bool> = (0..n).map(|_| rng.random_bool(0.1)).collect();
        let boot = rng.random_range(-5.0..5.0);
        let (g, l) = (rng.random_range(0.8..1.0), rng.random_range(0.5..1.0));
        let (adv, ret) = gae(&r, &v, &d, boot, g, l)?;
        for t in 0..n {
            // Discounted sum of TD errors up to the first episode end.
            let mut sum = 0.0;
            let mut w = 1.0;
            for s in t..n {
                let next = if s + 1 < n { v[s + 1] } else { boot };
                let live = if d[s] { 0.0 } else { 1.0 };
                sum += w * (r[s] + g * next * live - v[s]);
                if d[s] {
                    break;
                }
                w *= g * l;
            }
            worst = worst.max((adv[t] - sum).abs()).max((ret[t] - sum - v[t]).abs());
        }
    }
    Ok(worst)
}

fn chi_square() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let logits = [0.3, -1.2, 2.0, 0.0, -0.4, 1.1, -2.5, 0.7];
    let p = softmax(&logits);
    let draws = 100_000;
    let mut counts = [0u32; 8];
    for _ in 0..draws {
        counts[sample_action(&logits, 8, None, &mut rng).0[0]] += 1;
    }
    counts
        .iter()
        .zip(&p)
        .map(|(&c, &pi)| {
            let e = pi * draws as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

fn c8_numerics() -> Result<Outcome> {
    let grad = gradient_error()?;
    let gae = gae_error()?;
    let chi = chi_square();
    // Upper 1% point of chi-square with 7 degrees of freedom.
    let critical = 18.475;
    outcome(
        grad < 1e-4 && gae < 1e-10 && chi < critical,
        format!(
            "gradient vs central differences: max rel error {grad:.2e} (need < 1e-4); \
             advantages vs direct sum: max error {gae:.2e} (need < 1e-10); \
             sampler chi-square {chi:.2} over 1e5 draws (need < {critical})"
        ),
    )
}

fn cli(args: &[&str]) -> Result<()> {
    let out = Process::new(env!("CARGO_BIN_EXE_railsched")).args(args).output()?;
    ensure!(out.status.success(), "railsched {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    Ok(())
}

fn c9_determinism(world: &mut World) -> Result<Outcome> {
    let (params, json, _) = world.policy()?;
    let dir = tempfile::tempdir()?;
    let ckpt = dir.path().join("policy.json");
    std::fs::write(&ckpt, json)?;
    let f = fixtures();
    let path = |p: &Path| p.to_str().map(str::to_owned).ok_or_else(|| anyhow!("non-utf8 path"));
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let svg = out.join("run.svg");
        cli(&[
            "simulate",
            "--route",
            &path(&f.join("line.toml"))?,
            "--timetable",
            &path(&f.join("timetable.csv"))?,
            "--od",
            &path(&f.join("od.csv"))?,
            "--scenario",
            &path(&f.join("midline.toml"))?,
            "--controller",
            "policy",
            "--checkpoint",
            &path(&ckpt)?,
            "--seed",
            "4",
            "--out-dir",
            &path(&out)?,
            "--svg",
            &path(&svg)?,
        ])?;
        let metrics = std::fs::read(out.join("metrics.jsonl")).context("metrics.jsonl")?;
        outputs.push((metrics, std::fs::read(&svg).context("svg")?));
    }
    let same_files = outputs[0] == outputs[1];
    let file = train_file("train.toml")?;
    let env = RailEnv::new(Arc::clone(&world.ctx), file.episode_config(&world.inputs)?)?;
    let seeds: Vec<u64> = (100..108).collect();
    let parallel = vector_rollout(&env, &params, &seeds, false)?;
    let sequential = SequentialRunner { env }.run(&params, &seeds, false)?;
    let same_rollouts = serde_json::to_string(&parallel)? == serde_json::to_string(&sequential)?;
    outcome(
        same_files && same_rollouts,
        format!(
            "two CLI simulate runs: metrics and SVG {}; {} parallel rollouts {} sequential ones",
            if same_files { "byte-identical" } else { "differ" },
            seeds.len(),
            if same_rollouts { "equal" } else { "differ from" }
        ),
    )
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

fn c10_toy_task() -> Result<Outcome> {
    let inputs = fixture_inputs()?;
    let ctx = inputs.context()?;
    let file = train_file("toy.toml")?;
    let t = Instant::now();
    let trained = train(&inputs, &ctx, &file, |_, _| {})?;
    let train_s = t.elapsed().as_secs_f64();
    let env = RailEnv::new(Arc::clone(&ctx), file.episode_config(&inputs)?)?;
    let seeds: Vec<u64> = (1000..1000 + EVAL_SEEDS).collect();
    let uniform = PolicyParams::zeros(env.obs_len(), file.train.ppo.hidden, env.n_heads(), env.n_actions());
    let returns = |p: &PolicyParams, greedy: bool| -> Result<Vec<f64>> {
        Ok(vector_rollout(&env, p, &seeds, greedy)?.iter().map(|t| t.total_reward()).collect())
    };
    let (rm, rs) = mean_sd(&returns(&uniform, false)?);
    let (tm, ts) = mean_sd(&returns(&trained.params, true)?);
    let n = seeds.len() as f64;
    let se = ((rs * rs + ts * ts) / n).sqrt();
    let z = if se > 0.0 { (tm - rm) / se } else { f64::INFINITY };
    let per_episode = if rs > 0.0 { (tm - rm) / rs } else { f64::INFINITY };
    outcome(
        z >= 3.0 && train_s < 1800.0,
        format!(
            "{} episodes: random {rm:.1} (sd {rs:.1}), trained {tm:.1} (sd {ts:.1}); \
             gap {z:.1} standard errors (need >= 3), {per_episode:.2} random-episode sd; trained in {train_s:.1} s",
            seeds.len()
        ),
    )
}

fn main() -> ExitCode {
    let inputs = match fixture_inputs() {
        Ok(i) => i,
        Err(e) => {
            eprintln!("cannot load fixture inputs: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    let ctx = match inputs.context() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("cannot build context: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut world = World { inputs, ctx, policy: None };
    let mut failed = 0;
    let mut report = |n: u32, r: Result<Outcome>| {
        let (pass, detail) = match r {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e:#}")),
        };
        if !pass {
            failed += 1;
        }
        println!("criterion {n}: {} - {detail}", if pass { "PASS" } else { "FAIL" });
    };
    report(1, c1_safety(&world));
    report(2, c2_conservation(&world));
    report(3, c3_timetable_fidelity(&world));
    report(4, c4_disruption_jams(&world));
    report(5, c5_policy_beats_baseline(&mut world));
    report(6, c6_action_space(&world));
    report(7, c7_full_day_speed(&mut world));
    report(8, c8_numerics());
    report(9, c9_determinism(&mut world));
    report(10, c10_toy_task());
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        println!("all criteria passed");
        ExitCode::SUCCESS
    }
}
