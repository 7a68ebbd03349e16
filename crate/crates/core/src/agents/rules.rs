use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::assign::ControlAssignment;
use super::straight_step;
use super::timetable::{PostAction, Timetable};
use crate::ids::{PointId, RouteId};
use crate::route::{RouteKind, RouteModel};
use crate::sim::{Aspect, Command, Event, EventKind, RouteRequest, SimState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleAction {
    /// Lock the route and clear its entry signal.
    SetRoute(RouteId),
    /// Clear a departure signal.
    Proceed(PointId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationRule {
    pub t: u32,
    pub action: RuleAction,
    pub point: PointId,
    /// Timetable entry the rule was derived from.
    pub entry: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OperationRules {
    pub rules: Vec<OperationRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("timetable entry {entry} ({train}): no {what} from platform {platform}")]
    Unreachable { entry: usize, train: String, what: &'static str, platform: String },
}

/// Route openings and departure clearances implied by the timetable.
///
/// Each stop yields route requests `lead` seconds before departure (the
/// straight path to the next platform, or the turnback or depot route) and a
/// departure clearance at the departure time. Rules are sorted by time.
pub fn extract_operation_rules(
    timetable: &Timetable,
    model: &RouteModel,
    lead: u32,
) -> Result<OperationRules, RuleError> {
    let mut rules = Vec::new();
    for (i, e) in timetable.entries.iter().enumerate() {
        let block = e.platform_block(model);
        let dir = e.direction(model);
        let unreachable = |what| RuleError::Unreachable {
            entry: i,
            train: e.train.clone(),
            what,
            platform: model.block(block).id.clone(),
        };
        let t_route = e.depart_s.saturating_sub(lead);
        match e.post_action {
            PostAction::Proceed => {
                let mut cur = block;
                let mut first = true;
                for _ in 0..model.blocks.len() {
                    let Some((next, route)) = straight_step(model, cur, dir) else {
                        if first {
                            return Err(unreachable("straight path"));
                        }
                        break;
                    };
                    first = false;
                    if let Some(r) = route {
                        rules.push(OperationRule {
                            t: t_route,
                            action: RuleAction::SetRoute(r),
                            point: model.route(r).entry,
                            entry: i,
                        });
                    }
                    if model.block(next).is_platform {
                        break;
                    }
                    cur = next;
                }
            }
            PostAction::TurnBack | PostAction::ToDepot => {
                let (kind, what) = if e.post_action == PostAction::TurnBack {
                    (RouteKind::TurnBack, "turnback route")
                } else {
                    (RouteKind::Depot, "depot route")
                };
                let r = model.route_from(block, dir, kind).ok_or_else(|| unreachable(what))?;
                rules.push(OperationRule {
                    t: t_route,
                    action: RuleAction::SetRoute(r),
                    point: model.route(r).entry,
                    entry: i,
                });
            }
        }
        let p = model.departure_point(block, dir).ok_or_else(|| unreachable("departure signal"))?;
        rules.push(OperationRule { t: e.depart_s, action: RuleAction::Proceed(p), point: p, entry: i });
    }
    rules.sort_by_key(|r| (r.t, r.entry, matches!(r.action, RuleAction::Proceed(_))));
    Ok(OperationRules { rules })
}

/// Replays operation rules on the points it controls. A due rule stays
/// pending, and is re-issued every second, until a train passes its signal.
#[derive(Debug, Clone)]
pub struct TimetableAgent {
    rules: Arc<OperationRules>,
    cursor: usize,
    pending: Vec<VecDeque<usize>>,
}

impl TimetableAgent {
    pub fn new(rules: Arc<OperationRules>, n_points: usize) -> TimetableAgent {
        TimetableAgent { rules, cursor: 0, pending: vec![VecDeque::new(); n_points] }
    }

    pub fn rules(&self) -> &OperationRules {
        &self.rules
    }

    /// Forget pending rules on points now controlled elsewhere.
    pub fn drop_points(&mut self, assignment: &ControlAssignment) {
        for (p, q) in self.pending.iter_mut().enumerate() {
            if !assignment.is_timetable(PointId::from_index(p)) {
                q.clear();
            }
        }
    }

    pub fn pending_count(&self) -> usize {
        self.pending.iter().map(|q| q.len()).sum()
    }

    /// Commands due at the state's current time.
    pub fn act(&mut self, state: &SimState, assignment: &ControlAssignment, out: &mut Vec<Command>) {
        let now = state.now();
        let rules = &self.rules.rules;
        while self.cursor < rules.len() && rules[self.cursor].t <= now {
            let r = &rules[self.cursor];
            if assignment.is_timetable(r.point) {
                self.pending[r.point.index()].push_back(self.cursor);
            }
            self.cursor += 1;
        }
        for q in &self.pending {
            let Some(&front) = q.front() else { continue };
            match rules[front].action {
                RuleAction::SetRoute(route) => {
                    let entry = state.model.route(route).entry;
                    if state.is_locked(route) {
                        if state.aspect(entry) == Aspect::Stop {
                            out.push(Command::SetSignal { point: entry, aspect: Aspect::Proceed });
                        }
                    } else if state.check_route(route, now) == RouteRequest::Granted {
                        out.push(Command::SetRoute { route });
                    }
                }
                RuleAction::Proceed(point) => {
                    if state.aspect(point) == Aspect::Stop {
                        out.push(Command::SetSignal { point, aspect: Aspect::Proceed });
                    }
                }
            }
        }
    }

    /// Retire rules whose signal a train has just passed.
    pub fn observe(&mut self, events: &[Event]) {
        for e in events {
            if e.kind == EventKind::Pass {
                if let Some(p) = e.point {
                    self.pending[p.index()].pop_front();
                }
            }
        }
    }
}
