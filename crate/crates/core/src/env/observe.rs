use alloc::vec::Vec;

use crate::agents::{decision_points, DecisionPoint};
use crate::ids::{BlockId, Direction, TrainId};
use crate::math;
use crate::passenger::onboard_total;
use crate::route::RouteModel;
use crate::sim::{Disruption, Phase, SimState};

/// Features per decision point: active, train present, train approaching,
/// delay, platform queue load, train load factor, disruption ahead.
pub const POINT_FEATURES: usize = 7;
/// Features per block: occupied, disrupted.
pub const BLOCK_FEATURES: usize = 2;
/// Global features: disruption flag, disruption position, elapsed
/// disruption time, remaining-unknown mask, time of day as sin and cos.
pub const GLOBAL_FEATURES: usize = 6;

/// Delays are clipped to this many seconds before scaling to [-1, 1].
pub const DELAY_CLIP_S: f64 = 1800.0;
/// Elapsed disruption time saturates here.
pub const ELAPSED_CLIP_S: f64 = 3600.0;
/// How far upstream a running train counts as approaching.
pub const APPROACH_M: f64 = 2000.0;

/// Fixed observation and action layout for a model: every decision point
/// and every block, masked per episode by the control assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsLayout {
    pub points: Vec<DecisionPoint>,
    pub blocks: Vec<BlockId>,
}

impl ObsLayout {
    pub fn for_model(model: &RouteModel) -> ObsLayout {
        ObsLayout {
            points: decision_points(model, None),
            blocks: (0..model.blocks.len()).map(BlockId::from_index).collect(),
        }
    }

    pub fn obs_len(&self) -> usize {
        POINT_FEATURES * self.points.len() + BLOCK_FEATURES * self.blocks.len() + GLOBAL_FEATURES
    }

    pub fn n_heads(&self) -> usize {
        self.points.len()
    }
}

/// Per-episode inputs to the observation besides the simulator state.
pub(crate) struct ObsInputs<'a> {
    pub layout: &'a ObsLayout,
    pub active: &'a [bool],
    pub span: &'a [bool],
    pub disruption: Option<&'a Disruption>,
    /// Latest arrival (platform, time) per train.
    pub arrivals: &'a [Option<(BlockId, u32)>],
    /// Planned arrivals (platform, time) per train.
    pub schedule: &'a [Vec<(BlockId, u32)>],
}

fn clip(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

fn waiting_train(state: &SimState, p: &DecisionPoint) -> Option<TrainId> {
    let t = state.occupant(p.platform)?;
    let tr = &state.trains[t.index()];
    (tr.head == p.platform && tr.is_stopped_at_platform() && tr.direction == p.direction).then_some(t)
}

fn approaching(state: &SimState, p: &DecisionPoint) -> bool {
    let x = state.model.geometry.center(p.platform);
    state.trains.iter().enumerate().any(|(i, tr)| {
        if !tr.active || tr.direction != p.direction || tr.phase != Phase::Running {
            return false;
        }
        let gap = match p.direction {
            Direction::Up => x - state.train_position(TrainId::from_index(i)),
            Direction::Down => state.train_position(TrainId::from_index(i)) - x,
        };
        gap > 0.0 && gap <= APPROACH_M
    })
}

/// A currently disrupted block lies ahead of the platform in its direction.
fn disruption_ahead(state: &SimState, d: Option<&Disruption>, p: &DecisionPoint) -> bool {
    let Some(d) = d.filter(|d| d.active_at(state.now())) else { return false };
    let g = &state.model.geometry;
    let x = g.center(p.platform);
    d.blocks.iter().any(|b| match p.direction {
        Direction::Up => g.lo[b.index()] >= x,
        Direction::Down => g.hi[b.index()] <= x,
    })
}

fn delay(inp: &ObsInputs, t: TrainId, platform: BlockId) -> f64 {
    let Some(Some((b, actual))) = inp.arrivals.get(t.index()) else { return 0.0 };
    if *b != platform {
        return 0.0;
    }
    let Some(plan) = inp.schedule.get(t.index()) else { return 0.0 };
    let nearest = plan
        .iter()
        .filter(|(pb, _)| *pb == platform)
        .map(|&(_, s)| *actual as f64 - s as f64)
        .min_by(|a, b| math::abs(*a).total_cmp(&math::abs(*b)));
    nearest.map_or(0.0, |d| clip(d, -DELAY_CLIP_S, DELAY_CLIP_S) / DELAY_CLIP_S)
}

pub(crate) fn build_observation(state: &SimState, inp: &ObsInputs, out: &mut Vec<f64>) {
    out.clear();
    let m = &*state.model;
    let now = state.now();
    for (k, p) in inp.layout.points.iter().enumerate() {
        if !inp.active[k] {
            out.extend_from_slice(&[0.0; POINT_FEATURES]);
            continue;
        }
        let present = waiting_train(state, p);
        let station_cap = state.passengers.station_capacity(p.station);
        let queue = if station_cap == 0 {
            0.0
        } else {
            clip(state.passengers.queue_len(p.station, p.direction) as f64 / station_cap as f64, 0.0, 1.0)
        };
        let (d, load) = match present {
            Some(t) => {
                let tr = &state.trains[t.index()];
                let load = if tr.capacity == 0 { 0.0 } else { onboard_total(&tr.onboard) as f64 / tr.capacity as f64 };
                (delay(inp, t, p.platform), clip(load, 0.0, 1.0))
            }
            None => (0.0, 0.0),
        };
        out.extend_from_slice(&[
            1.0,
            present.is_some() as u8 as f64,
            approaching(state, p) as u8 as f64,
            d,
            queue,
            load,
            disruption_ahead(state, inp.disruption, p) as u8 as f64,
        ]);
    }
    for (k, &b) in inp.layout.blocks.iter().enumerate() {
        if !inp.span[k] {
            out.extend_from_slice(&[0.0; BLOCK_FEATURES]);
            continue;
        }
        out.push(state.occupant(b).is_some() as u8 as f64);
        out.push(state.is_disrupted(b, now) as u8 as f64);
    }
    match inp.disruption.filter(|d| d.active_at(now)) {
        Some(d) => {
            let lo = d.blocks.iter().map(|b| m.geometry.lo[b.index()]).fold(f64::INFINITY, f64::min);
            let hi = d.blocks.iter().map(|b| m.geometry.hi[b.index()]).fold(f64::NEG_INFINITY, f64::max);
            let len = m.geometry.length.max(1.0);
            let elapsed = (now - d.start) as f64;
            out.extend_from_slice(&[
                1.0,
                clip(0.5 * (lo + hi) / len, 0.0, 1.0),
                clip(elapsed / ELAPSED_CLIP_S, 0.0, 1.0),
                1.0,
            ]);
        }
        None => out.extend_from_slice(&[0.0; 4]),
    }
    let phase = 2.0 * core::f64::consts::PI * (now % 86_400) as f64 / 86_400.0;
    out.push(math::sin(phase));
    out.push(math::cos(phase));
}
