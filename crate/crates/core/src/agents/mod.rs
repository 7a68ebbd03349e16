//! Rule-based controllers: the timetable agent replaying operation rules,
//! the micro executor carrying out macro decisions, and the assigner that
//! splits control points between them.

mod assign;
mod micro;
mod rules;
mod timetable;

pub use assign::{assign_control, decision_points, AssignError, ControlAssignment, Controller, DecisionPoint};
pub use micro::{MacroChoice, RbAgent, DWELL_BUCKETS, MACRO_ACTIONS, TURNBACK_WAIT_S};
pub use rules::{extract_operation_rules, OperationRule, OperationRules, RuleAction, RuleError, TimetableAgent};
pub use timetable::{parse_hms, Hms, PostAction, Timetable, TimetableEntry, TimetableError};

use crate::ids::{BlockId, Direction, RouteId};
use crate::route::{RouteKind, RouteModel};

/// Next block when continuing in `dir` without turning: the first successor
/// that is either unguarded or the start of a straight route.
pub fn straight_step(model: &RouteModel, block: BlockId, dir: Direction) -> Option<(BlockId, Option<RouteId>)> {
    for &c in model.block(block).successors(dir) {
        let mut guarded = false;
        let mut straight = None;
        for &r in model.routes_entering(c) {
            let route = model.route(r);
            if route.approaches.contains(&(block, dir)) {
                guarded = true;
                if route.kind == RouteKind::Straight {
                    straight = Some(r);
                }
            }
        }
        match (guarded, straight) {
            (false, _) => return Some((c, None)),
            (true, Some(r)) => return Some((c, Some(r))),
            _ => {}
        }
    }
    None
}
