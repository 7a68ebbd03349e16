//! The hierarchical episodic environment: macro decisions at RL-controlled
//! turnaround stations, executed by the RB agent, with the timetable agent
//! running every other control point.

mod episode;
mod observe;
mod randomize;
mod reference;
mod reward;

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{
    assign_control, extract_operation_rules, AssignError, ControlAssignment, MacroChoice, OperationRules, RbAgent,
    RuleError, Timetable, TimetableAgent, MACRO_ACTIONS,
};
use crate::ids::{BlockId, TrainId};
use crate::passenger::{onboard_total, ArrivalGenerator, ArrivalMode, OdMatrix, PassengerWorld};
use crate::route::RouteModel;
use crate::sim::{init_sim, Disruption, Event, EventKind, InitError, Placement, SimParams};

pub use episode::Episode;
use observe::{build_observation, ObsInputs};
pub use observe::{
    ObsLayout, APPROACH_M, BLOCK_FEATURES, DELAY_CLIP_S, ELAPSED_CLIP_S, GLOBAL_FEATURES, POINT_FEATURES,
};
pub use randomize::{randomize_domain, DisruptionRanges, RandomizeError};
pub use reference::{deviation, head_blocks, PlanTrace, ReferenceRun, SNAPSHOT_S};
pub use reward::{compute_reward, Aggregates, RewardWeights, COMFORT_LOAD};

/// Lead time between a route request and the departure it serves.
pub const RULE_LEAD_S: u32 = 30;
/// Default seconds between macro decisions.
pub const DECISION_INTERVAL_S: u32 = 60;
/// The reference run stops this long after the last scheduled departure.
const REFERENCE_TAIL_S: u32 = 4 * 3600;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvError {
    #[error(transparent)]
    Randomize(#[from] RandomizeError),
    #[error(transparent)]
    Init(#[from] InitError),
    #[error(transparent)]
    Assign(#[from] AssignError),
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error("expected {expected} macro actions, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("macro action {0} out of range")]
    ActionRange(usize),
    #[error("invalid episode config: {0}")]
    Config(&'static str),
    #[error("step called before reset")]
    NotReset,
}

/// Immutable inputs shared by every environment instance.
#[derive(Debug)]
pub struct EnvContext {
    pub model: Arc<RouteModel>,
    pub timetable: Arc<Timetable>,
    pub rules: Arc<OperationRules>,
    pub od: Arc<OdMatrix>,
    pub placements: Vec<Placement>,
    pub params: SimParams,
    pub layout: ObsLayout,
    pub reference: ReferenceRun,
    /// Planned arrivals (platform, time) per train, in placement order.
    pub schedule: Vec<Vec<(BlockId, u32)>>,
}

impl EnvContext {
    /// Build the timetable-only episode at service start.
    pub fn timetable_episode(
        model: &Arc<RouteModel>,
        rules: &Arc<OperationRules>,
        od: &Arc<OdMatrix>,
        placements: &[Placement],
        params: SimParams,
        start_s: u32,
        seed: u64,
    ) -> Result<Episode, EnvError> {
        let mut sim = init_sim(Arc::clone(model), placements, seed)?;
        sim.params = params;
        sim.epoch_s = start_s;
        sim.set_passengers(PassengerWorld::new(model, Arc::clone(od), ArrivalMode::Deterministic));
        let agent = TimetableAgent::new(Arc::clone(rules), model.points.len());
        Ok(Episode::new(
            sim,
            agent,
            RbAgent::new(Vec::new(), placements.len()),
            ControlAssignment::all_timetable(model),
        ))
    }

    pub fn new(
        model: Arc<RouteModel>,
        timetable: Timetable,
        od: OdMatrix,
        placements: Vec<Placement>,
        params: SimParams,
    ) -> Result<EnvContext, EnvError> {
        let rules = Arc::new(extract_operation_rules(&timetable, &model, RULE_LEAD_S)?);
        let od = Arc::new(od);
        let start = timetable.entries.iter().map(|e| e.arrive_s).min().unwrap_or(0);
        let last = timetable.entries.iter().map(|e| e.depart_s).max().unwrap_or(start);
        let ep = Self::timetable_episode(&model, &rules, &od, &placements, params, start, 0)?;
        let reference = ReferenceRun::record(ep, last + REFERENCE_TAIL_S);
        let schedule = placements
            .iter()
            .map(|p| timetable.stops_of(&p.name).map(|e| (e.platform_block(&model), e.arrive_s)).collect())
            .collect();
        Ok(EnvContext {
            layout: ObsLayout::for_model(&model),
            timetable: Arc::new(timetable),
            model,
            rules,
            od,
            placements,
            params,
            reference,
            schedule,
        })
    }

    pub fn service_start(&self) -> u32 {
        self.reference.plan.start()
    }

    /// Service start and the last second of the reference run.
    pub fn service_window(&self) -> (u32, u32) {
        (self.reference.plan.start(), self.reference.plan.end().saturating_sub(1))
    }
}

/// Episode sampling and reward settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    /// Episode start time of day, inclusive range.
    pub start_window_s: (u32, u32),
    pub horizon_s: u32,
    pub decision_interval_s: u32,
    pub disruption: Option<DisruptionRanges>,
    pub weights: RewardWeights,
    pub arrival_mode: ArrivalMode,
}

impl EpisodeConfig {
    pub fn validate(&self, ctx: &EnvContext) -> Result<(), EnvError> {
        if self.horizon_s == 0 {
            return Err(EnvError::Config("horizon must be positive"));
        }
        if self.decision_interval_s == 0 {
            return Err(EnvError::Config("decision interval must be positive"));
        }
        if !self.weights.is_finite() {
            return Err(EnvError::Config("weights must be finite"));
        }
        let (lo, hi) = self.start_window_s;
        let (s, e) = ctx.service_window();
        if lo > hi {
            return Err(RandomizeError::EmptyRange("episode start").into());
        }
        if lo < s || hi > e {
            return Err(EnvError::Config("start window outside the reference run"));
        }
        if let Some(r) = &self.disruption {
            if r.locations.is_empty() || r.locations.iter().any(|l| l.is_empty()) {
                return Err(RandomizeError::NoLocations.into());
            }
            if r.locations.iter().flatten().any(|b| b.index() >= ctx.model.blocks.len()) {
                return Err(EnvError::Config("disruption block outside the model"));
            }
            if r.start_offset_s.0 > r.start_offset_s.1 {
                return Err(RandomizeError::EmptyRange("disruption start").into());
            }
            if r.duration_s.0 > r.duration_s.1 {
                return Err(RandomizeError::EmptyRange("disruption duration").into());
            }
            if r.duration_s.1 == 0 {
                return Err(RandomizeError::ZeroDuration.into());
            }
        }
        Ok(())
    }
}

/// Who controls the line during a disrupted episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlMode {
    /// The timetable agent keeps every point.
    TimetableOnly,
    /// Points around the disruption pass to the RB agent.
    #[default]
    Hierarchical,
}

/// Per-transition diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepInfo {
    pub aggregates: Aggregates,
    /// Turnback requests at points that cannot honor them.
    pub refusals: u32,
    pub seconds: u32,
    /// Decision points whose latched choice a train acted on this step.
    pub consumed: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// One environment instance.
#[derive(Debug, Clone)]
pub struct RailEnv {
    ctx: Arc<EnvContext>,
    cfg: EpisodeConfig,
    ep: Option<Episode>,
    disruption: Option<Disruption>,
    active: Vec<bool>,
    span: Vec<bool>,
    arrivals: Vec<Option<(BlockId, u32)>>,
    start: u32,
    obs: Vec<f64>,
}

impl RailEnv {
    pub fn new(ctx: Arc<EnvContext>, cfg: EpisodeConfig) -> Result<RailEnv, EnvError> {
        cfg.validate(&ctx)?;
        let n = ctx.layout.points.len();
        let nb = ctx.layout.blocks.len();
        Ok(RailEnv {
            ctx,
            cfg,
            ep: None,
            disruption: None,
            active: vec![false; n],
            span: vec![false; nb],
            arrivals: Vec::new(),
            start: 0,
            obs: Vec::new(),
        })
    }

    pub fn context(&self) -> &Arc<EnvContext> {
        &self.ctx
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.cfg
    }

    pub fn obs_len(&self) -> usize {
        self.ctx.layout.obs_len()
    }

    pub fn n_heads(&self) -> usize {
        self.ctx.layout.n_heads()
    }

    pub fn n_actions(&self) -> usize {
        MACRO_ACTIONS
    }

    /// Decision points under RL control this episode.
    pub fn action_mask(&self) -> &[bool] {
        &self.active
    }

    pub fn observation(&self) -> &[f64] {
        &self.obs
    }

    pub fn episode(&self) -> Option<&Episode> {
        self.ep.as_ref()
    }

    pub fn disruption(&self) -> Option<&Disruption> {
        self.disruption.as_ref()
    }

    pub fn start(&self) -> u32 {
        self.start
    }

    /// Sample a scenario from the config and start an episode.
    pub fn reset(&mut self, seed: u64) -> Result<&[f64], EnvError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, start) = randomize_domain(self.cfg.start_window_s, self.cfg.disruption.as_ref(), &mut rng)?;
        let passenger_seed = rng.next_u64();
        self.reset_with(d, start, passenger_seed)
    }

    /// Start an episode with a given scenario at time of day `start`.
    pub fn reset_with(&mut self, disruption: Option<Disruption>, start: u32, seed: u64) -> Result<&[f64], EnvError> {
        self.reset_scenario(disruption, start, seed, ControlMode::Hierarchical)
    }

    /// As `reset_with`, choosing whether the disruption hands control to
    /// the RL side.
    pub fn reset_scenario(
        &mut self,
        disruption: Option<Disruption>,
        start: u32,
        seed: u64,
        mode: ControlMode,
    ) -> Result<&[f64], EnvError> {
        let (lo, hi) = self.ctx.service_window();
        if !(lo..=hi).contains(&start) {
            return Err(EnvError::Config("episode start outside the reference run"));
        }
        let mut ep = self.ctx.reference.snapshot_before(start).clone();
        while ep.sim.now() < start {
            ep.tick();
        }
        ep.sim.reseed(seed);
        if self.cfg.arrival_mode != ArrivalMode::Deterministic {
            ep.sim.passengers.generator = ArrivalGenerator::new(self.ctx.model.stations.len(), self.cfg.arrival_mode);
        }
        if let Some(d) = &disruption {
            ep.sim.add_disruption(d.clone())?;
        }
        let assignment = match (&disruption, mode) {
            (Some(d), ControlMode::Hierarchical) => assign_control(&self.ctx.model, Some(d))?,
            _ => ControlAssignment::all_timetable(&self.ctx.model),
        };
        ep.timetable.drop_points(&assignment);
        let layout = &self.ctx.layout;
        self.active = layout.points.iter().map(|p| assignment.is_rl_station(p.station)).collect();
        self.span = match assignment.span {
            Some((a, b)) => {
                let m = &self.ctx.model;
                let (pa, pb) = (m.station_pos[a.index()], m.station_pos[b.index()]);
                let (lo, hi) = (pa.min(pb), pa.max(pb));
                layout.blocks.iter().map(|&b| (lo..=hi).contains(&m.geometry.center(b))).collect()
            }
            None => vec![false; layout.blocks.len()],
        };
        ep.rb = RbAgent::new(layout.points.clone(), ep.sim.trains.len());
        ep.assignment = assignment;
        self.arrivals = vec![None; ep.sim.trains.len()];
        self.disruption = disruption;
        self.start = start;
        self.ep = Some(ep);
        self.refresh_observation();
        Ok(&self.obs)
    }

    fn refresh_observation(&mut self) {
        let Some(ep) = &self.ep else { return };
        let inp = ObsInputs {
            layout: &self.ctx.layout,
            active: &self.active,
            span: &self.span,
            disruption: self.disruption.as_ref(),
            arrivals: &self.arrivals,
            schedule: &self.ctx.schedule,
        };
        build_observation(&ep.sim, &inp, &mut self.obs);
    }

    pub fn is_done(&self) -> bool {
        self.ep.as_ref().is_none_or(|ep| ep.sim.now() >= self.start + self.cfg.horizon_s || ep.finished())
    }

    pub fn step(&mut self, actions: &[usize]) -> Result<StepResult, EnvError> {
        self.step_with(actions, |_, _| {})
    }

    /// Latch `actions` and advance one decision interval, calling `each`
    /// after every simulated second.
    pub fn step_with(
        &mut self,
        actions: &[usize],
        mut each: impl FnMut(&Episode, &[Event]),
    ) -> Result<StepResult, EnvError> {
        let n = self.ctx.layout.points.len();
        if actions.len() != n {
            return Err(EnvError::Dimension { expected: n, got: actions.len() });
        }
        if let Some(&a) = actions.iter().find(|&&a| a >= MACRO_ACTIONS) {
            return Err(EnvError::ActionRange(a));
        }
        let horizon_end = self.start + self.cfg.horizon_s;
        let ep = self.ep.as_mut().ok_or(EnvError::NotReset)?;
        let mut refusals = 0;
        for (k, &a) in actions.iter().enumerate() {
            let choice = MacroChoice::from_index(a);
            if self.active[k] {
                ep.rb.set_macro(k, choice);
            } else if choice.turn_back {
                refusals += 1;
            }
        }
        let decisions0 = ep.rb.decisions.clone();
        let arrived0 = ep.sim.passengers.totals.arrived;
        let stop0 = ep.sim.stats.stop_seconds;
        let (speed0, samples0) = (ep.sim.stats.speed_sum, ep.sim.stats.running_samples);
        let mut excess = 0.0;
        let mut dev = 0u64;
        let mut seconds = 0;
        let mut heads = Vec::new();
        while seconds < self.cfg.decision_interval_s && ep.sim.now() < horizon_end && !ep.finished() {
            let events = ep.tick();
            seconds += 1;
            for e in &events {
                match e.kind {
                    EventKind::Arrive => {
                        if let (Some(t), Some(b)) = (e.train, e.block) {
                            self.arrivals[t.index()] = Some((b, e.t));
                        }
                    }
                    EventKind::Refusal => refusals += 1,
                    _ => {}
                }
            }
            for tr in ep.sim.trains.iter().filter(|t| t.active && t.capacity > 0) {
                excess += (onboard_total(&tr.onboard) as f64 / tr.capacity as f64 - COMFORT_LOAD).max(0.0);
            }
            heads.clear();
            heads.extend(head_blocks(&ep.sim));
            heads.sort_unstable();
            dev += deviation(self.ctx.reference.plan.heads_at(ep.sim.now()), &heads) as u64;
            each(ep, &events);
        }
        let samples = ep.sim.stats.running_samples - samples0;
        let per_second = |x: f64| if seconds == 0 { 0.0 } else { x / seconds as f64 };
        let aggregates = Aggregates {
            arrived: (ep.sim.passengers.totals.arrived - arrived0) as f64,
            mean_speed: if samples == 0 { 0.0 } else { (ep.sim.stats.speed_sum - speed0) / samples as f64 },
            stop_seconds: (ep.sim.stats.stop_seconds - stop0) as f64,
            excess_load: per_second(excess),
            deviation: per_second(dev as f64),
        };
        let consumed = ep.rb.decisions.iter().zip(&decisions0).map(|(a, b)| a > b).collect();
        let reward = compute_reward(&aggregates, &self.cfg.weights);
        self.refresh_observation();
        Ok(StepResult { reward, done: self.is_done(), info: StepInfo { aggregates, refusals, seconds, consumed } })
    }

    /// The train currently waiting for a decision at layout point `k`.
    pub fn waiting_train(&self, k: usize) -> Option<TrainId> {
        self.ep.as_ref().and_then(|ep| ep.rb.train_waiting(&ep.sim, k))
    }
}

#[cfg(test)]
mod tests;
