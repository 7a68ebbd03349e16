//! Timed, fingerprinted scenario runs and their text and JSON reports.

use std::fmt::Write;
use std::sync::Arc;
use std::time::Instant;

use railsched_core::env::EnvContext;
use railsched_core::harness::{
    compute_metrics, run_scenario, Comparison, Controller, EventRecord, HarnessError, Metrics, RunRecord, Scenario,
    SegmentRate,
};
use railsched_core::route::RouteModel;
use railsched_core::sim::EventKind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::inputs::{digest, Inputs};

/// Digest identifying a controller, including policy weights.
pub fn controller_digest(c: &Controller) -> String {
    match c {
        Controller::Policy(p) => {
            let bytes: Vec<u8> = p.theta.iter().flat_map(|x| x.to_le_bytes()).collect();
            let shape = format!("{}:{:?}:{}:{}", p.obs_dim, p.hidden, p.n_heads, p.n_actions);
            digest(&[c.name().as_bytes(), shape.as_bytes(), &bytes])
        }
        _ => digest(&[c.name().as_bytes()]),
    }
}

/// Run one scenario, stamping fingerprints and wall-clock time.
pub fn run(
    inputs: &Inputs,
    ctx: &Arc<EnvContext>,
    scenario: &Scenario,
    controller: &Controller,
    horizon_s: Option<u32>,
    seed: u64,
) -> Result<RunRecord, HarnessError> {
    let t = Instant::now();
    let mut rec = run_scenario(ctx, scenario, controller, horizon_s, seed)?;
    rec.wall_clock_s = t.elapsed().as_secs_f64();
    rec.scenario_fingerprint = inputs.scenario_fingerprint(scenario);
    rec.config_fingerprint = digest(&[
        rec.scenario_fingerprint.as_bytes(),
        controller_digest(controller).as_bytes(),
        &seed.to_le_bytes(),
        format!("{horizon_s:?}").as_bytes(),
    ]);
    Ok(rec)
}

/// Independent runs over several seeds, executed concurrently and returned
/// in seed order.
pub fn run_seeds(
    inputs: &Inputs,
    ctx: &Arc<EnvContext>,
    scenario: &Scenario,
    controller: &Controller,
    horizon_s: Option<u32>,
    seeds: &[u64],
) -> Result<Vec<RunRecord>, HarnessError> {
    seeds.par_iter().map(|&s| run(inputs, ctx, scenario, controller, horizon_s, s)).collect()
}

/// One line of a metrics file. Contains nothing time- or host-dependent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsLine {
    pub scenario: String,
    pub controller: String,
    pub seed: u64,
    pub scenario_fingerprint: String,
    pub config_fingerprint: String,
    pub start_s: u32,
    pub end_s: u32,
    pub generated: u64,
    pub arrived: u64,
    pub stop_time_s: u64,
    pub stop_events: u64,
    pub mean_deviation: f64,
    pub segments: Vec<SegmentRate>,
}

impl MetricsLine {
    pub fn new(rec: &RunRecord) -> MetricsLine {
        let Metrics { arrived, stop_time_s, stop_events, mean_deviation, segments } = compute_metrics(rec);
        MetricsLine {
            scenario: rec.scenario.clone(),
            controller: rec.controller.clone(),
            seed: rec.seed,
            scenario_fingerprint: rec.scenario_fingerprint.clone(),
            config_fingerprint: rec.config_fingerprint.clone(),
            start_s: rec.start_s,
            end_s: rec.end_s,
            generated: rec.accum.generated,
            arrived,
            stop_time_s,
            stop_events,
            mean_deviation,
            segments,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingLine {
    pub scenario: String,
    pub controller: String,
    pub seed: u64,
    pub simulated_s: u32,
    pub wall_clock_s: f64,
}

impl TimingLine {
    pub fn new(rec: &RunRecord) -> TimingLine {
        TimingLine {
            scenario: rec.scenario.clone(),
            controller: rec.controller.clone(),
            seed: rec.seed,
            simulated_s: rec.end_s - rec.start_s,
            wall_clock_s: rec.wall_clock_s,
        }
    }
}

/// An event with ids resolved to names. `t` is seconds since midnight;
/// `detail` carries the point, route and reason when present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedEvent {
    pub t: u32,
    pub kind: EventKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub station: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

pub fn named_events(rec: &RunRecord, model: &RouteModel) -> Vec<NamedEvent> {
    let name = |i: Option<u32>, f: &dyn Fn(usize) -> Option<String>| i.and_then(|i| f(i as usize));
    rec.events
        .iter()
        .map(|e: &EventRecord| {
            let parts: Vec<String> = [
                name(e.point, &|i| model.points.get(i).map(|p| format!("point={}", p.id))),
                name(e.route, &|i| model.routes.get(i).map(|r| format!("route={}", r.id))),
                e.reason.as_ref().map(|r| format!("reason={r}")),
            ]
            .into_iter()
            .flatten()
            .collect();
            NamedEvent {
                t: e.t,
                kind: e.kind,
                train: name(e.train, &|i| rec.traces.get(i).map(|t| t.name.clone())),
                station: name(e.station, &|i| model.stations.get(i).map(|s| s.id.clone())),
                block: name(e.block, &|i| model.blocks.get(i).map(|b| b.id.clone())),
                detail: (!parts.is_empty()).then(|| parts.join(" ")),
            }
        })
        .collect()
}

/// Fixed-width table of metrics lines.
pub fn summary_table(lines: &[MetricsLine]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<16} {:<15} {:>6} {:>10} {:>10} {:>12} {:>11} {:>14}",
        "scenario", "controller", "seed", "generated", "arrived", "stop_time_s", "stop_events", "mean_deviation"
    );
    for l in lines {
        let _ = writeln!(
            s,
            "{:<16} {:<15} {:>6} {:>10} {:>10} {:>12} {:>11} {:>14.3}",
            l.scenario, l.controller, l.seed, l.generated, l.arrived, l.stop_time_s, l.stop_events, l.mean_deviation
        );
    }
    s
}

fn fmt_pct(p: f64) -> String {
    if p.is_finite() {
        format!("{p:+.1}%")
    } else if p > 0.0 {
        "+inf".into()
    } else {
        "-inf".into()
    }
}

pub fn comparison_table(c: &Comparison) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<24} {:>14} {:>14} {:>9}", "metric", c.baseline, c.candidate, "delta");
    for r in &c.rows {
        let _ = writeln!(s, "{:<24} {:>14.3} {:>14.3} {:>9}", r.metric, r.baseline, r.candidate, fmt_pct(r.delta_pct));
    }
    s
}

/// Seed-averaged metrics of one controller.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub runs: usize,
    pub arrived: f64,
    pub stop_time_s: f64,
    pub stop_events: f64,
}

pub fn mean_metrics(lines: &[MetricsLine]) -> MeanMetrics {
    let n = lines.len().max(1) as f64;
    MeanMetrics {
        runs: lines.len(),
        arrived: lines.iter().map(|l| l.arrived as f64).sum::<f64>() / n,
        stop_time_s: lines.iter().map(|l| l.stop_time_s as f64).sum::<f64>() / n,
        stop_events: lines.iter().map(|l| l.stop_events as f64).sum::<f64>() / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use railsched_core::harness::compare;

    #[test]
    fn fingerprints_and_timing_are_stamped() {
        let inputs = Inputs::desk();
        let ctx = inputs.context().unwrap();
        let sc = Scenario { name: "clear".into(), start_s: Some(30000), ..Scenario::default() };
        let a = run(&inputs, &ctx, &sc, &Controller::TimetableOnly, Some(600), 1).unwrap();
        let b = run(&inputs, &ctx, &sc, &Controller::TimetableOnly, Some(600), 1).unwrap();
        let c = run(&inputs, &ctx, &sc, &Controller::TimetableOnly, Some(600), 2).unwrap();
        assert!(a.wall_clock_s > 0.0);
        assert_eq!(a.scenario_fingerprint, c.scenario_fingerprint);
        assert_eq!(a.config_fingerprint, b.config_fingerprint);
        assert_ne!(a.config_fingerprint, c.config_fingerprint);
        assert_eq!(MetricsLine::new(&a), MetricsLine::new(&b));
        let cmp = compare(&a, &b).unwrap();
        assert!(cmp.rows.iter().all(|r| r.delta_pct == 0.0));
        assert!(comparison_table(&cmp).contains("+0.0%"));
        let ev = named_events(&a, &inputs.model);
        assert_eq!(ev.len(), a.events.len());
        assert!(ev.iter().any(|e| e.train.as_deref().is_some_and(|t| t.starts_with('T'))));
    }

    #[test]
    fn parallel_seeds_match_one_by_one() {
        let inputs = Inputs::desk();
        let ctx = inputs.context().unwrap();
        let sc = Scenario { name: "clear".into(), start_s: Some(30000), ..Scenario::default() };
        let many = run_seeds(&inputs, &ctx, &sc, &Controller::AllProceed, Some(300), &[4, 5, 6]).unwrap();
        for (r, s) in many.iter().zip([4, 5, 6]) {
            let one = run(&inputs, &ctx, &sc, &Controller::AllProceed, Some(300), s).unwrap();
            assert_eq!(MetricsLine::new(r), MetricsLine::new(&one));
        }
    }
}
