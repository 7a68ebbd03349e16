use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::straight_step;
use crate::ids::{BlockId, Direction, PointId, RouteId, StationId};
use crate::route::{RouteKind, RouteModel};
use crate::sim::Disruption;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Controller {
    Timetable,
    Rl,
}

/// Which controller owns each control point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlAssignment {
    pub points: Vec<Controller>,
    /// Stations inside the handed-over span.
    pub rl_stations: Vec<bool>,
    /// Boundary stations of the span, lower coordinate first.
    pub span: Option<(StationId, StationId)>,
}

impl ControlAssignment {
    pub fn all_timetable(model: &RouteModel) -> ControlAssignment {
        ControlAssignment {
            points: vec![Controller::Timetable; model.points.len()],
            rl_stations: vec![false; model.stations.len()],
            span: None,
        }
    }

    #[inline]
    pub fn is_timetable(&self, p: PointId) -> bool {
        self.points.get(p.index()).is_none_or(|c| *c == Controller::Timetable)
    }

    #[inline]
    pub fn is_rl_station(&self, s: StationId) -> bool {
        self.rl_stations[s.index()]
    }

    pub fn rl_count(&self) -> usize {
        self.points.iter().filter(|c| **c == Controller::Rl).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AssignError {
    #[error("disrupted block {0} is not on the line")]
    OffLine(BlockId),
}

/// Hand every control point of the stations between the nearest turnaround
/// or depot station on each side of the disrupted span to the RL agent.
/// Without a disruption everything stays with the timetable agent.
pub fn assign_control(model: &RouteModel, disruption: Option<&Disruption>) -> Result<ControlAssignment, AssignError> {
    let mut out = ControlAssignment::all_timetable(model);
    let Some(d) = disruption else { return Ok(out) };
    let (lo, hi) = disrupted_extent(model, &d.blocks)?;
    let order = model.stations_in_line_order();
    let Some((&first, &last)) = order.first().zip(order.last()) else { return Ok(out) };
    let pos = |s: StationId| model.station_pos[s.index()];
    let capable = |s: &&StationId| {
        let st = &model.stations[s.index()];
        st.can_turn_back || st.has_depot
    };
    let left = order.iter().rev().filter(capable).find(|&&s| pos(s) < lo).copied().unwrap_or(first);
    let right = order.iter().filter(capable).find(|&&s| pos(s) > hi).copied().unwrap_or(last);
    for &s in &order {
        if pos(s) >= pos(left) && pos(s) <= pos(right) {
            out.rl_stations[s.index()] = true;
            for &p in model.station_points(s) {
                out.points[p.index()] = Controller::Rl;
            }
        }
    }
    out.span = Some((left, right));
    Ok(out)
}

/// Line-coordinate extent of a block set.
pub(crate) fn disrupted_extent(model: &RouteModel, blocks: &[BlockId]) -> Result<(f64, f64), AssignError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &b in blocks {
        if b.index() >= model.blocks.len() {
            return Err(AssignError::OffLine(b));
        }
        lo = lo.min(model.geometry.lo[b.index()]);
        hi = hi.max(model.geometry.hi[b.index()]);
    }
    Ok((lo, hi))
}

/// A station side where a train finishing its dwell may either continue or
/// reverse: the unit of macro decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionPoint {
    pub station: StationId,
    pub direction: Direction,
    pub platform: BlockId,
    pub turnback: RouteId,
}

/// Decision points of turnaround stations, in line order then direction.
/// `stations` restricts the result when given.
pub fn decision_points(model: &RouteModel, stations: Option<&[bool]>) -> Vec<DecisionPoint> {
    let mut out = Vec::new();
    for s in model.stations_in_line_order() {
        if !model.stations[s.index()].can_turn_back || stations.is_some_and(|m| !m[s.index()]) {
            continue;
        }
        for dir in Direction::BOTH {
            let Some(platform) = model.platform_for(s, dir) else { continue };
            if straight_step(model, platform, dir).is_none() {
                continue;
            }
            if let Some(turnback) = model.route_from(platform, dir, RouteKind::TurnBack) {
                out.push(DecisionPoint { station: s, direction: dir, platform, turnback });
            }
        }
    }
    out
}
