use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::assign::{ControlAssignment, DecisionPoint};
use super::straight_step;
use crate::ids::{BlockId, Direction, RouteId, StationId, TrainId};
use crate::route::RouteKind;
use crate::sim::{Aspect, Command, Event, EventKind, Phase, RouteRequest, SimState};

/// Dwell extensions selectable by the macro action, seconds.
pub const DWELL_BUCKETS: [u32; 4] = [0, 30, 60, 120];
/// Macro actions per decision point: {proceed, turn back} x dwell bucket.
pub const MACRO_ACTIONS: usize = 2 * DWELL_BUCKETS.len();
/// A turnback not granted within this many seconds becomes a proceed. Two
/// trains turning back into each other's platforms would otherwise wait on
/// each other forever.
pub const TURNBACK_WAIT_S: u32 = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MacroChoice {
    pub turn_back: bool,
    pub bucket: u8,
}

impl MacroChoice {
    pub const PROCEED: MacroChoice = MacroChoice { turn_back: false, bucket: 0 };

    pub fn from_index(i: usize) -> MacroChoice {
        let i = i % MACRO_ACTIONS;
        MacroChoice { turn_back: i >= DWELL_BUCKETS.len(), bucket: (i % DWELL_BUCKETS.len()) as u8 }
    }

    pub fn index(self) -> usize {
        usize::from(self.turn_back) * DWELL_BUCKETS.len() + self.bucket as usize
    }

    pub fn extension_s(self) -> u32 {
        DWELL_BUCKETS[self.bucket as usize % DWELL_BUCKETS.len()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TaskKind {
    Proceed { ready_at: u32 },
    TurnBack { route: RouteId, since: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Task {
    train: TrainId,
    platform: BlockId,
    kind: TaskKind,
}

/// Executes macro decisions at RL-controlled stations as signal and route
/// commands, one task per train standing at such a station.
#[derive(Debug, Clone)]
pub struct RbAgent {
    points: Vec<DecisionPoint>,
    latch: Vec<MacroChoice>,
    tasks: Vec<Task>,
    turned_at: Vec<Option<StationId>>,
    /// Decisions taken so far, per decision point.
    pub decisions: Vec<u32>,
}

impl RbAgent {
    pub fn new(points: Vec<DecisionPoint>, n_trains: usize) -> RbAgent {
        RbAgent {
            latch: vec![MacroChoice::PROCEED; points.len()],
            decisions: vec![0; points.len()],
            points,
            tasks: Vec::new(),
            turned_at: vec![None; n_trains],
        }
    }

    pub fn decision_points(&self) -> &[DecisionPoint] {
        &self.points
    }

    /// Latch the choice read by the next train completing its dwell at
    /// decision point `k`.
    pub fn set_macro(&mut self, k: usize, choice: MacroChoice) {
        self.latch[k] = choice;
    }

    pub fn latched(&self, k: usize) -> MacroChoice {
        self.latch[k]
    }

    fn point_index(&self, station: StationId, dir: Direction) -> Option<usize> {
        self.points.iter().position(|p| p.station == station && p.direction == dir)
    }

    /// Whether a train is waiting on a decision at `k` right now.
    pub fn train_waiting(&self, state: &SimState, k: usize) -> Option<TrainId> {
        let p = &self.points[k];
        let t = state.occupant(p.platform)?;
        let tr = &state.trains[t.index()];
        (tr.is_stopped_at_platform() && tr.direction == p.direction).then_some(t)
    }

    /// Track reversals and departures.
    pub fn observe(&mut self, events: &[Event]) {
        for e in events {
            let Some(t) = e.train else { continue };
            if t.index() >= self.turned_at.len() {
                self.turned_at.resize(t.index() + 1, None);
            }
            match e.kind {
                EventKind::Reverse => self.turned_at[t.index()] = e.station,
                EventKind::Depart => self.turned_at[t.index()] = None,
                _ => {}
            }
        }
    }

    /// Commands for trains standing at RL-controlled stations.
    pub fn act(
        &mut self,
        state: &SimState,
        assignment: &ControlAssignment,
        out: &mut Vec<Command>,
        events: &mut Vec<Event>,
    ) {
        let now = state.now();
        let m = &*state.model;
        self.tasks.retain(|task| {
            let tr = &state.trains[task.train.index()];
            tr.active && tr.head == task.platform && tr.is_stopped_at_platform()
        });
        if self.turned_at.len() < state.trains.len() {
            self.turned_at.resize(state.trains.len(), None);
        }
        for tr in state.trains.iter().filter(|t| t.active && t.phase == Phase::Held) {
            let Some((station, _)) = m.platform_of(tr.head) else { continue };
            if !assignment.is_rl_station(station) || tr.served != Some(tr.head) {
                continue;
            }
            let dir = tr.direction;
            let mut task = match self.tasks.iter().find(|x| x.train == tr.id) {
                Some(t) => *t,
                None => {
                    let turnback = m.route_from(tr.head, dir, RouteKind::TurnBack);
                    let kind = if straight_step(m, tr.head, dir).is_none() {
                        match turnback {
                            Some(route) => TaskKind::TurnBack { route, since: now },
                            None => continue,
                        }
                    } else if self.turned_at[tr.id.index()] == Some(station) {
                        TaskKind::Proceed { ready_at: now }
                    } else if let Some(k) = self.point_index(station, dir) {
                        let choice = self.latch[k];
                        self.decisions[k] += 1;
                        match (choice.turn_back, turnback, m.stations[station.index()].can_turn_back) {
                            (true, Some(route), true) => TaskKind::TurnBack { route, since: now },
                            (true, _, _) => {
                                events.push(Event::new(now, EventKind::Refusal).train(tr.id).station(station));
                                TaskKind::Proceed { ready_at: now + choice.extension_s() }
                            }
                            (false, _, _) => TaskKind::Proceed { ready_at: now + choice.extension_s() },
                        }
                    } else {
                        TaskKind::Proceed { ready_at: now }
                    };
                    let task = Task { train: tr.id, platform: tr.head, kind };
                    self.tasks.push(task);
                    task
                }
            };
            if let TaskKind::TurnBack { route, since } = task.kind {
                let stalled = now >= since + TURNBACK_WAIT_S && !state.is_locked(route);
                if stalled && straight_step(m, tr.head, dir).is_some() {
                    events.push(Event::new(now, EventKind::Refusal).train(tr.id).station(station));
                    task.kind = TaskKind::Proceed { ready_at: now };
                    if let Some(t) = self.tasks.iter_mut().find(|x| x.train == tr.id) {
                        *t = task;
                    }
                }
            }
            let Some(dep) = m.departure_point(tr.head, dir) else { continue };
            let route = match task.kind {
                TaskKind::Proceed { ready_at } => {
                    if now < ready_at || !path_free(state, tr.head, dir) {
                        continue;
                    }
                    straight_step(m, tr.head, dir).and_then(|(_, r)| r)
                }
                TaskKind::TurnBack { route, .. } => {
                    // A straight route set before the decision blocks the turnback.
                    if let Some((_, Some(straight))) = straight_step(m, tr.head, dir) {
                        if state.is_locked(straight) {
                            if !state.route_has_train(straight) {
                                out.push(Command::ReleaseRoute { route: straight });
                            }
                            continue;
                        }
                    }
                    Some(route)
                }
            };
            if let Some(r) = route {
                if state.is_locked(r) {
                    if state.aspect(m.route(r).entry) == Aspect::Stop {
                        out.push(Command::SetSignal { point: m.route(r).entry, aspect: Aspect::Proceed });
                    }
                } else if state.check_route(r, now) == RouteRequest::Granted {
                    out.push(Command::SetRoute { route: r });
                } else {
                    continue;
                }
            }
            if state.aspect(dep) == Aspect::Stop {
                out.push(Command::SetSignal { point: dep, aspect: Aspect::Proceed });
            }
        }
    }

    /// Decide for a single train as if it had just finished its dwell; used
    /// to trace the executor in isolation.
    pub fn execute(&mut self, state: &SimState, assignment: &ControlAssignment) -> (Vec<Command>, Vec<Event>) {
        let mut cmds = Vec::new();
        let mut events = Vec::new();
        self.act(state, assignment, &mut cmds, &mut events);
        (cmds, events)
    }
}

/// Every block from the platform up to and including the next platform is
/// free, undisrupted and not reserved by someone else's route.
pub fn path_free(state: &SimState, platform: BlockId, dir: Direction) -> bool {
    let m = &*state.model;
    let now = state.now();
    let mut cur = platform;
    let mut own: Option<RouteId> = None;
    for _ in 0..m.blocks.len() {
        let Some((next, route)) = straight_step(m, cur, dir) else { return true };
        if route.is_some() {
            own = route;
        }
        if state.occupant(next).is_some() || state.is_disrupted(next, now) {
            return false;
        }
        if m.routes_containing(next).iter().any(|&r| Some(r) != own && state.is_locked(r)) {
            return false;
        }
        if m.block(next).is_platform {
            return true;
        }
        cur = next;
    }
    true
}
