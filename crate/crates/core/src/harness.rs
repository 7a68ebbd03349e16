//! Scenario runs under a chosen controller, evaluation metrics and
//! baseline comparison.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::env::{ControlMode, EnvContext, EnvError, EpisodeConfig, RailEnv, RewardWeights, DECISION_INTERVAL_S};
use crate::passenger::ArrivalMode;
use crate::ppo::{greedy_action, PolicyParams};
use crate::sim::{Disruption, Event, EventKind};

/// Default run length cap; runs also end when every train leaves service.
pub const MAX_RUN_S: u32 = 2 * 86_400;

/// A disruption and run settings.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub disruption: Option<Disruption>,
    /// Run start, time of day; service start when absent.
    pub start_s: Option<u32>,
    pub arrivals: ArrivalMode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Controller {
    /// The original timetable everywhere, disruption or not.
    TimetableOnly,
    /// The hierarchical setup with every macro decision set to proceed.
    AllProceed,
    /// The hierarchical setup driven by a trained policy, most likely action.
    Policy(Arc<PolicyParams>),
}

impl Controller {
    pub fn name(&self) -> &'static str {
        match self {
            Controller::TimetableOnly => "timetable-only",
            Controller::AllProceed => "all-proceed",
            Controller::Policy(_) => "policy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("checkpoint shape {got:?} does not match the model's (observations, heads, actions) {expected:?}")]
    IncompatibleCheckpoint { expected: (usize, usize, usize), got: (usize, usize, usize) },
    #[error("records come from different scenarios ({0} vs {1})")]
    FingerprintMismatch(String, String),
}

/// Position trace of one train from its first second in service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub name: String,
    pub first_s: u32,
    /// Line coordinate in meters, one sample per second.
    pub x: Vec<f64>,
}

/// An event with plain indices, for logs and records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: u32,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub station: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl From<&Event> for EventRecord {
    fn from(e: &Event) -> Self {
        EventRecord {
            t: e.t,
            kind: e.kind,
            train: e.train.map(|x| x.index() as u32),
            station: e.station.map(|x| x.index() as u32),
            block: e.block.map(|x| x.index() as u32),
            point: e.point.map(|x| x.index() as u32),
            route: e.route.map(|x| x.index() as u32),
            reason: e.reason.map(ToString::to_string),
        }
    }
}

/// A disrupted stretch of line and period, for diagrams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisruptionSpan {
    pub start_s: u32,
    pub end_s: u32,
    pub lo_m: f64,
    pub hi_m: f64,
}

/// Totals gathered while running.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Accumulators {
    pub generated: u64,
    pub arrived: u64,
    /// The simulator's own interstation stop counter.
    pub stop_seconds: u64,
    pub deviation_sum: f64,
    pub deviation_samples: u64,
}

/// Everything one run produced.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunRecord {
    pub controller: String,
    pub scenario: String,
    pub seed: u64,
    /// Digest of route, timetable, OD and scenario inputs.
    pub scenario_fingerprint: String,
    /// Digest of the scenario inputs plus controller, seed and horizon.
    pub config_fingerprint: String,
    pub start_s: u32,
    pub end_s: u32,
    pub line_length_m: f64,
    /// Station names and line positions.
    pub stations: Vec<(String, f64)>,
    pub traces: Vec<TrainTrace>,
    pub events: Vec<EventRecord>,
    pub disruptions: Vec<DisruptionSpan>,
    pub accum: Accumulators,
    pub wall_clock_s: f64,
}

/// Trains per hour through one interstation segment, both directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRate {
    pub segment: String,
    pub trains_per_hour: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub arrived: u64,
    pub stop_time_s: u64,
    pub stop_events: u64,
    pub mean_deviation: f64,
    pub segments: Vec<SegmentRate>,
}

/// Evaluation metrics of a record. Stop time pairs each train's begin and
/// end events; a stop still open at the end runs to the end of the record.
pub fn compute_metrics(record: &RunRecord) -> Metrics {
    let mut stops: Vec<&EventRecord> = record
        .events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::StopBetweenStationsBegin | EventKind::StopBetweenStationsEnd))
        .collect();
    // Begin sorts before end, so ordering within a second is irrelevant.
    stops.sort_by_key(|e| (e.train, e.t, e.kind));
    let mut stop_time = 0;
    let mut stop_events = 0;
    let mut open: Option<(Option<u32>, u32)> = None;
    for e in stops {
        if let Some((train, t0)) = open {
            if train != e.train {
                stop_time += record.end_s.saturating_sub(t0) as u64;
                open = None;
            }
        }
        match e.kind {
            EventKind::StopBetweenStationsBegin => {
                stop_events += 1;
                if open.is_none() {
                    open = Some((e.train, e.t));
                }
            }
            _ => {
                if let Some((_, t0)) = open.take() {
                    stop_time += e.t.saturating_sub(t0) as u64;
                }
            }
        }
    }
    if let Some((_, t0)) = open {
        stop_time += record.end_s.saturating_sub(t0) as u64;
    }
    let a = &record.accum;
    let mean_deviation = if a.deviation_samples == 0 { 0.0 } else { a.deviation_sum / a.deviation_samples as f64 };
    let hours = record.end_s.saturating_sub(record.start_s) as f64 / 3600.0;
    let segments = record
        .stations
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0].1 + w[1].1);
            let crossings: usize =
                record.traces.iter().map(|tr| tr.x.windows(2).filter(|p| (p[0] < mid) != (p[1] < mid)).count()).sum();
            SegmentRate {
                segment: alloc::format!("{}-{}", w[0].0, w[1].0),
                trains_per_hour: if hours > 0.0 { crossings as f64 / hours } else { 0.0 },
            }
        })
        .collect();
    Metrics { arrived: a.arrived, stop_time_s: stop_time, stop_events, mean_deviation, segments }
}

/// Run a scenario at 1 s resolution. Fingerprints and wall-clock time are
/// left for the caller.
pub fn run_scenario(
    ctx: &Arc<EnvContext>,
    scenario: &Scenario,
    controller: &Controller,
    horizon_s: Option<u32>,
    seed: u64,
) -> Result<RunRecord, HarnessError> {
    let start = scenario.start_s.unwrap_or_else(|| ctx.service_start());
    let horizon = horizon_s.unwrap_or(MAX_RUN_S);
    let cfg = EpisodeConfig {
        start_window_s: (start, start),
        horizon_s: horizon,
        decision_interval_s: DECISION_INTERVAL_S,
        disruption: None,
        weights: RewardWeights::RESCHEDULING,
        arrival_mode: scenario.arrivals,
    };
    let mut env = RailEnv::new(Arc::clone(ctx), cfg)?;
    if let Controller::Policy(p) = controller {
        let expected = (env.obs_len(), env.n_heads(), env.n_actions());
        let got = (p.obs_dim, p.n_heads, p.n_actions);
        if expected != got || !p.shape_matches() {
            return Err(HarnessError::IncompatibleCheckpoint { expected, got });
        }
    }
    let mode = match controller {
        Controller::TimetableOnly => ControlMode::TimetableOnly,
        _ => ControlMode::Hierarchical,
    };
    env.reset_scenario(scenario.disruption.clone(), start, seed, mode)?;
    let m = &ctx.model;
    let ep = env.episode().expect("reset");
    let mut traces: Vec<TrainTrace> =
        ep.sim.trains.iter().map(|t| TrainTrace { name: t.name.clone(), first_s: start, x: Vec::new() }).collect();
    let sample = |ep: &crate::env::Episode, traces: &mut Vec<TrainTrace>| {
        for (i, t) in ep.sim.trains.iter().enumerate() {
            if t.active {
                traces[i].x.push(ep.sim.train_position(t.id));
            }
        }
    };
    sample(ep, &mut traces);
    let accounting0 = ep.sim.accounting();
    let stop0 = ep.sim.stats.stop_seconds;
    let mut events = Vec::new();
    let mut accum = Accumulators::default();
    let n = env.n_heads();
    let mut actions = vec![0; n];
    while !env.is_done() {
        if let Controller::Policy(p) = controller {
            let (logits, _) = p.forward(env.observation()).map_err(|e| HarnessError::IncompatibleCheckpoint {
                expected: (e.expected, n, p.n_actions),
                got: (e.got, p.n_heads, p.n_actions),
            })?;
            actions = greedy_action(&logits, p.n_actions, Some(env.action_mask())).0;
        }
        let r = env.step_with(&actions, |ep, evs| {
            events.extend(evs.iter().map(EventRecord::from));
            sample(ep, &mut traces);
        })?;
        accum.deviation_sum += r.info.aggregates.deviation * r.info.seconds as f64;
        accum.deviation_samples += r.info.seconds as u64;
    }
    let ep = env.episode().expect("reset");
    let acc = ep.sim.accounting();
    accum.generated = acc.generated - accounting0.generated;
    accum.arrived = acc.arrived - accounting0.arrived;
    accum.stop_seconds = ep.sim.stats.stop_seconds - stop0;
    let disruptions = scenario
        .disruption
        .iter()
        .map(|d| DisruptionSpan {
            start_s: d.start,
            end_s: d.end(),
            lo_m: d.blocks.iter().map(|b| m.geometry.lo[b.index()]).fold(f64::INFINITY, f64::min),
            hi_m: d.blocks.iter().map(|b| m.geometry.hi[b.index()]).fold(f64::NEG_INFINITY, f64::max),
        })
        .collect();
    let stations = m
        .stations_in_line_order()
        .into_iter()
        .map(|s| (m.stations[s.index()].name.clone(), m.station_pos[s.index()]))
        .collect();
    Ok(RunRecord {
        controller: controller.name().to_string(),
        scenario: scenario.name.clone(),
        seed,
        start_s: start,
        end_s: ep.sim.now(),
        line_length_m: m.geometry.length,
        stations,
        traces,
        events,
        disruptions,
        accum,
        ..RunRecord::default()
    })
}

/// One metric side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub metric: String,
    pub baseline: f64,
    pub candidate: f64,
    /// Percentage change from the baseline; 0 when both are 0.
    pub delta_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    pub candidate: String,
    pub rows: Vec<MetricDelta>,
}

pub fn pct_change(baseline: f64, candidate: f64) -> f64 {
    if baseline == candidate {
        0.0
    } else if baseline == 0.0 {
        if candidate > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        100.0 * (candidate - baseline) / crate::math::abs(baseline)
    }
}

/// Side-by-side metrics of two runs of the same scenario.
pub fn compare(baseline: &RunRecord, candidate: &RunRecord) -> Result<Comparison, HarnessError> {
    if baseline.scenario_fingerprint != candidate.scenario_fingerprint {
        return Err(HarnessError::FingerprintMismatch(
            baseline.scenario_fingerprint.clone(),
            candidate.scenario_fingerprint.clone(),
        ));
    }
    let (a, b) = (compute_metrics(baseline), compute_metrics(candidate));
    let row = |metric: &str, x: f64, y: f64| MetricDelta {
        metric: metric.to_string(),
        baseline: x,
        candidate: y,
        delta_pct: pct_change(x, y),
    };
    let mut rows = vec![
        row("arrived", a.arrived as f64, b.arrived as f64),
        row("stop_time_s", a.stop_time_s as f64, b.stop_time_s as f64),
        row("stop_events", a.stop_events as f64, b.stop_events as f64),
        row("mean_deviation", a.mean_deviation, b.mean_deviation),
    ];
    for (x, y) in a.segments.iter().zip(&b.segments) {
        rows.push(row(&alloc::format!("tph {}", x.segment), x.trains_per_hour, y.trains_per_hour));
    }
    Ok(Comparison { baseline: baseline.controller.clone(), candidate: candidate.controller.clone(), rows })
}
