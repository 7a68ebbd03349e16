//! One-second world stepping: movement authority, interlocking, kinematics,
//! disruptions and the platform passenger exchange.

mod event;
mod kinematics;

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use event::{Event, EventKind};
pub use kinematics::{kinematic_step, Motion, SimParams, SpeedTarget};

use crate::ids::{BlockId, Direction, PointId, RouteId, StationId, TrainId};
use crate::passenger::{self, PassengerGroup, PassengerWorld};
use crate::route::{PointKind, PointLocation, RouteModel};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aspect {
    Stop,
    Proceed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Running,
    Dwelling {
        remaining: u32,
    },
    /// Stopped at a served platform waiting for authority.
    Held,
    /// Counting down to a reversal; at zero the train has reversed and waits
    /// for authority in the new direction.
    ReversePending {
        remaining: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub id: TrainId,
    pub name: String,
    pub head: BlockId,
    /// Meters from the entry end of `head` in the direction of travel.
    pub offset: f64,
    /// Blocks behind the head still covered by the body, nearest first.
    pub trail: Vec<BlockId>,
    pub length: f64,
    pub v: f64,
    pub direction: Direction,
    pub capacity: u32,
    pub onboard: Vec<PassengerGroup>,
    pub phase: Phase,
    /// Platform block where the current stop has already been made.
    pub served: Option<BlockId>,
    /// Junction route the train is currently following.
    pub route: Option<RouteId>,
    pub last_station: Option<StationId>,
    pub active: bool,
    pub stopped_between: bool,
}

impl TrainState {
    pub fn occupied(&self) -> impl Iterator<Item = BlockId> + '_ {
        core::iter::once(self.head).chain(self.trail.iter().copied())
    }

    pub fn is_stopped_at_platform(&self) -> bool {
        matches!(self.phase, Phase::Dwelling { .. } | Phase::Held) && self.served == Some(self.head)
    }
}

/// Initial train placement. `offset` locates the head within `block`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub name: String,
    pub block: BlockId,
    pub offset: f64,
    pub direction: Direction,
    pub length: f64,
    pub capacity: u32,
}

/// Blocks that may not be entered during `[start, start + duration)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disruption {
    pub blocks: Vec<BlockId>,
    /// Time of day, seconds.
    pub start: u32,
    pub duration: u32,
}

impl Disruption {
    #[inline]
    pub fn active_at(&self, t: u32) -> bool {
        t >= self.start && t - self.start < self.duration
    }

    pub fn end(&self) -> u32 {
        self.start + self.duration
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InitError {
    #[error("placement {name}: block {block} is not in the model")]
    OffModel { name: String, block: BlockId },
    #[error("placement {name}: offset {offset} outside block {block}")]
    BadOffset { name: String, block: BlockId, offset: f64 },
    #[error("placement {name}: body runs off the line behind block {block}")]
    NoRoomBehind { name: String, block: BlockId },
    #[error("placements {a} and {b} overlap on block {block}")]
    Overlap { a: String, b: String, block: BlockId },
    #[error("disruption must cover at least one block for a positive duration")]
    EmptyDisruption,
    #[error("disruption names unknown block {0}")]
    UnknownBlock(BlockId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum CommandError {
    #[error("unknown control point")]
    UnknownPoint,
    #[error("unknown route")]
    UnknownRoute,
    #[error("proceed without route lock")]
    ProceedWithoutLock,
    #[error("route in use")]
    RouteInUse,
}

impl CommandError {
    pub fn reason(self) -> &'static str {
        match self {
            CommandError::UnknownPoint => "unknown-point",
            CommandError::UnknownRoute => "unknown-route",
            CommandError::ProceedWithoutLock => "proceed-without-lock",
            CommandError::RouteInUse => "route-in-use",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Denial {
    Conflict,
    Occupied,
    Disrupted,
}

impl Denial {
    pub fn as_str(self) -> &'static str {
        match self {
            Denial::Conflict => "conflict",
            Denial::Occupied => "occupied",
            Denial::Disrupted => "disrupted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteRequest {
    Granted,
    Denied(Denial),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Command {
    SetSignal {
        point: PointId,
        aspect: Aspect,
    },
    RequestRoute {
        route: RouteId,
    },
    /// Request the route and, once granted, clear its entry signal.
    SetRoute {
        route: RouteId,
    },
    ReleaseRoute {
        route: RouteId,
    },
}

/// Cumulative counters since `init_sim`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimStats {
    /// Train-seconds at rest on non-platform blocks while running.
    pub stop_seconds: u64,
    pub stop_events: u64,
    pub arrivals: u64,
    /// Sum over steps of the speed of every running train.
    pub speed_sum: f64,
    pub running_samples: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    SharedBlock { block: BlockId, a: TrainId, b: TrainId },
    Overspeed { train: TrainId },
    ConflictingLocks { a: RouteId, b: RouteId },
    MovingWhileStopped { train: TrainId },
    OffsetOutOfRange { train: TrainId },
    PassengerLeak,
}

struct PathStep {
    block: BlockId,
    /// Route whose first block this is, when entered under its signal.
    enters: Option<RouteId>,
    route_ctx: Option<(RouteId, usize)>,
}

struct Authority {
    distance: f64,
    path: Vec<PathStep>,
    targets: Vec<SpeedTarget>,
}

/// Dynamic world state.
#[derive(Debug, Clone)]
pub struct SimState {
    pub model: Arc<RouteModel>,
    pub params: SimParams,
    /// Time of day at clock 0.
    pub epoch_s: u32,
    pub clock: u32,
    pub trains: Vec<TrainState>,
    pub signals: Vec<Aspect>,
    /// Locked route per junction.
    pub locks: Vec<Option<RouteId>>,
    entered: Vec<bool>,
    pub disruptions: Vec<Disruption>,
    occupancy: Vec<Option<TrainId>>,
    pub passengers: PassengerWorld,
    pub stats: SimStats,
    rng: ChaCha8Rng,
    events: Vec<Event>,
}

/// Build a state at clock 0: all signals at stop, no locks.
pub fn init_sim(model: Arc<RouteModel>, placements: &[Placement], seed: u64) -> Result<SimState, InitError> {
    let passengers = PassengerWorld::empty(&model);
    let mut state = SimState {
        params: SimParams::default(),
        epoch_s: 0,
        clock: 0,
        trains: Vec::new(),
        signals: vec![Aspect::Stop; model.points.len()],
        locks: vec![None; model.junctions.len()],
        entered: vec![false; model.routes.len()],
        disruptions: Vec::new(),
        occupancy: vec![None; model.blocks.len()],
        passengers,
        stats: SimStats::default(),
        rng: ChaCha8Rng::seed_from_u64(seed),
        events: Vec::new(),
        model,
    };
    for p in placements {
        state.place(p)?;
    }
    Ok(state)
}

impl SimState {
    /// Current time of day.
    #[inline]
    pub fn now(&self) -> u32 {
        self.epoch_s + self.clock
    }

    pub fn set_passengers(&mut self, world: PassengerWorld) {
        self.passengers = world;
    }

    /// Restart the passenger-arrival random stream.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn add_disruption(&mut self, d: Disruption) -> Result<(), InitError> {
        if d.blocks.is_empty() || d.duration == 0 {
            return Err(InitError::EmptyDisruption);
        }
        if let Some(&b) = d.blocks.iter().find(|b| b.index() >= self.model.blocks.len()) {
            return Err(InitError::UnknownBlock(b));
        }
        self.disruptions.push(d);
        Ok(())
    }

    fn place(&mut self, p: &Placement) -> Result<(), InitError> {
        let m = Arc::clone(&self.model);
        if p.block.index() >= m.blocks.len() {
            return Err(InitError::OffModel { name: p.name.clone(), block: p.block });
        }
        let blen = m.block(p.block).length;
        if !(0.0..=blen).contains(&p.offset) {
            return Err(InitError::BadOffset { name: p.name.clone(), block: p.block, offset: p.offset });
        }
        let mut trail = Vec::new();
        let mut behind = p.length - p.offset;
        let mut cur = p.block;
        while behind > EPS {
            let prev = predecessor(&m, cur, p.direction)
                .ok_or_else(|| InitError::NoRoomBehind { name: p.name.clone(), block: cur })?;
            trail.push(prev);
            behind -= m.block(prev).length;
            cur = prev;
        }
        let id = TrainId::from_index(self.trains.len());
        for b in core::iter::once(p.block).chain(trail.iter().copied()) {
            if let Some(other) = self.occupancy[b.index()] {
                return Err(InitError::Overlap {
                    a: self.trains[other.index()].name.clone(),
                    b: p.name.clone(),
                    block: b,
                });
            }
            self.occupancy[b.index()] = Some(id);
        }
        let at_end = m.block(p.block).is_platform && p.offset >= blen - EPS;
        let station = m.platform_of(p.block).map(|(s, _)| s);
        self.trains.push(TrainState {
            id,
            name: p.name.clone(),
            head: p.block,
            offset: p.offset,
            trail,
            length: p.length,
            v: 0.0,
            direction: p.direction,
            capacity: p.capacity,
            onboard: Vec::new(),
            phase: if at_end { Phase::Held } else { Phase::Running },
            served: if at_end { Some(p.block) } else { None },
            route: None,
            last_station: station,
            active: true,
            stopped_between: false,
        });
        Ok(())
    }

    #[inline]
    pub fn occupant(&self, block: BlockId) -> Option<TrainId> {
        self.occupancy[block.index()]
    }

    pub fn is_disrupted(&self, block: BlockId, t: u32) -> bool {
        self.disruptions.iter().any(|d| d.active_at(t) && d.blocks.contains(&block))
    }

    pub fn any_disruption_active(&self) -> bool {
        let t = self.now();
        self.disruptions.iter().any(|d| d.active_at(t))
    }

    #[inline]
    pub fn aspect(&self, point: PointId) -> Aspect {
        self.signals[point.index()]
    }

    pub fn is_locked(&self, route: RouteId) -> bool {
        self.locks[self.model.route(route).junction.index()] == Some(route)
    }

    /// Whether `block` belongs to a locked route other than `except`.
    fn reserved(&self, block: BlockId, except: Option<RouteId>) -> bool {
        self.model.routes_containing(block).iter().any(|&r| Some(r) != except && self.is_locked(r))
    }

    /// Whether any block of the route is occupied.
    pub fn route_has_train(&self, route: RouteId) -> bool {
        self.model.route(route).blocks.iter().any(|b| self.occupancy[b.index()].is_some())
    }

    /// Set a signal aspect. Junction signals may show proceed only while
    /// their route is locked.
    pub fn set_signal(&mut self, point: PointId, aspect: Aspect) -> Result<(), CommandError> {
        let cp = self.model.points.get(point.index()).ok_or(CommandError::UnknownPoint)?;
        if let (PointKind::Junction, PointLocation::Route { route, .. }, Aspect::Proceed) =
            (cp.kind, cp.location, aspect)
        {
            if !self.is_locked(route) {
                return Err(CommandError::ProceedWithoutLock);
            }
        }
        self.signals[point.index()] = aspect;
        Ok(())
    }

    /// Try to lock `route`. Requesting an already held route is granted again.
    pub fn request_route(&mut self, route: RouteId) -> RouteRequest {
        let t = self.now();
        let outcome = self.check_route(route, t);
        if outcome == RouteRequest::Granted && !self.is_locked(route) {
            let r = self.model.route(route);
            self.locks[r.junction.index()] = Some(route);
            self.entered[route.index()] = false;
            self.events.push(Event::new(t, EventKind::Lock).route(route));
        }
        outcome
    }

    /// The grant predicate without side effects.
    pub fn check_route(&self, route: RouteId, t: u32) -> RouteRequest {
        let r = self.model.route(route);
        match self.locks[r.junction.index()] {
            Some(held) if held == route => return RouteRequest::Granted,
            Some(_) => return RouteRequest::Denied(Denial::Conflict),
            None => {}
        }
        if r.conflicts.iter().any(|&c| self.is_locked(c)) || r.blocks.iter().any(|&b| self.reserved(b, Some(route))) {
            return RouteRequest::Denied(Denial::Conflict);
        }
        if r.blocks.iter().any(|b| self.occupancy[b.index()].is_some()) {
            return RouteRequest::Denied(Denial::Occupied);
        }
        if r.blocks.iter().any(|&b| self.is_disrupted(b, t)) {
            return RouteRequest::Denied(Denial::Disrupted);
        }
        RouteRequest::Granted
    }

    /// Cancel a lock that no train is using.
    pub fn release_route(&mut self, route: RouteId) -> Result<(), CommandError> {
        if route.index() >= self.model.routes.len() {
            return Err(CommandError::UnknownRoute);
        }
        if !self.is_locked(route) {
            return Ok(());
        }
        if self.route_has_train(route) {
            return Err(CommandError::RouteInUse);
        }
        self.unlock(route);
        Ok(())
    }

    fn unlock(&mut self, route: RouteId) {
        let r = self.model.route(route);
        self.locks[r.junction.index()] = None;
        self.signals[r.entry.index()] = Aspect::Stop;
        let t = self.now();
        self.events.push(Event::new(t, EventKind::Release).route(route));
    }

    fn apply(&mut self, cmd: &Command) {
        let t = self.now();
        let result = match *cmd {
            Command::SetSignal { point, aspect } => self.set_signal(point, aspect).map_err(|e| (e, Some(point), None)),
            Command::RequestRoute { route } => {
                if route.index() >= self.model.routes.len() {
                    Err((CommandError::UnknownRoute, None, Some(route)))
                } else {
                    self.request_route(route);
                    Ok(())
                }
            }
            Command::SetRoute { route } => {
                if route.index() >= self.model.routes.len() {
                    Err((CommandError::UnknownRoute, None, Some(route)))
                } else {
                    if self.request_route(route) == RouteRequest::Granted {
                        let entry = self.model.route(route).entry;
                        self.signals[entry.index()] = Aspect::Proceed;
                    }
                    Ok(())
                }
            }
            Command::ReleaseRoute { route } => self.release_route(route).map_err(|e| (e, None, Some(route))),
        };
        if let Err((e, point, route)) = result {
            let mut ev = Event::new(t, EventKind::Reject).reason(e.reason());
            ev.point = point.filter(|p| p.index() < self.model.points.len());
            ev.route = route.filter(|r| r.index() < self.model.routes.len());
            self.events.push(ev);
        }
    }

    fn block_free(&self, block: BlockId, train: TrainId, own_route: Option<RouteId>, t: u32) -> bool {
        self.occupancy[block.index()].is_none_or(|o| o == train)
            && !self.is_disrupted(block, t)
            && !self.reserved(block, own_route)
    }

    fn route_ctx(&self, tr: &TrainState) -> Option<(RouteId, usize)> {
        let r = tr.route?;
        let k = self.model.route(r).blocks.iter().position(|&b| b == tr.head)?;
        Some((r, k))
    }

    fn authority(&self, i: usize) -> Authority {
        let m = &*self.model;
        let tr = &self.trains[i];
        let t = self.now();
        let dir = tr.direction;
        let head = m.block(tr.head);
        let mut out = Authority { distance: 0.0, path: Vec::new(), targets: Vec::new() };
        let mut dist = (head.length - tr.offset).max(0.0);
        if head.is_platform && tr.served != Some(tr.head) {
            out.distance = dist;
            return out;
        }
        let mut cur = tr.head;
        let mut ctx = self.route_ctx(tr);
        while dist < self.params.lookahead {
            let succ = m.block(cur).successors(dir);
            let mut chosen: Option<PathStep> = None;
            if let Some((r, k)) = ctx {
                let rb = &m.route(r).blocks;
                if k + 1 < rb.len() {
                    let nb = rb[k + 1];
                    if !succ.contains(&nb) {
                        break;
                    }
                    chosen = Some(PathStep { block: nb, enters: None, route_ctx: Some((r, k + 1)) });
                }
            }
            if chosen.is_none() {
                if m.block(cur).is_platform {
                    match m.departure_point(cur, dir) {
                        Some(p) if self.signals[p.index()] == Aspect::Proceed => {}
                        _ => break,
                    }
                }
                for &c in succ {
                    let mut guarded = false;
                    let mut open = None;
                    for &r in m.routes_entering(c) {
                        let route = m.route(r);
                        if !route.approaches.contains(&(cur, dir)) {
                            continue;
                        }
                        guarded = true;
                        if self.is_locked(r) && self.signals[route.entry.index()] == Aspect::Proceed {
                            open = Some(r);
                            break;
                        }
                    }
                    let step = match (guarded, open) {
                        (false, _) => PathStep { block: c, enters: None, route_ctx: None },
                        (true, Some(r)) => PathStep { block: c, enters: Some(r), route_ctx: Some((r, 0)) },
                        (true, None) => continue,
                    };
                    if self.block_free(c, tr.id, step.route_ctx.map(|x| x.0), t) {
                        chosen = Some(step);
                        break;
                    }
                }
            }
            let Some(step) = chosen else { break };
            if !self.block_free(step.block, tr.id, step.route_ctx.map(|x| x.0), t) {
                break;
            }
            let b = m.block(step.block);
            out.targets.push(SpeedTarget { distance: dist, vmax: b.vmax });
            dist += b.length;
            ctx = step.route_ctx;
            let stop_here = b.is_platform;
            cur = step.block;
            out.path.push(step);
            if stop_here {
                break;
            }
        }
        out.distance = dist.min(self.params.lookahead);
        out
    }

    /// Distance the train may travel before it must be at rest.
    pub fn movement_authority(&self, train: TrainId) -> f64 {
        self.authority(train.index()).distance
    }

    fn local_limit(&self, tr: &TrainState) -> f64 {
        tr.occupied().map(|b| self.model.block(b).vmax).fold(f64::INFINITY, f64::min)
    }

    /// Advance the world by one second.
    pub fn step(&mut self, commands: &[Command]) -> Vec<Event> {
        let t = self.now();
        for d in &self.disruptions {
            if d.start == t {
                self.events.push(Event::new(t, EventKind::DisruptionStart).block(d.blocks[0]));
            }
            if d.end() == t {
                self.events.push(Event::new(t, EventKind::DisruptionEnd).block(d.blocks[0]));
            }
        }
        for c in commands {
            self.apply(c);
        }
        let model = Arc::clone(&self.model);
        self.passengers.tick(&model, t, &mut self.rng);
        for i in 0..self.trains.len() {
            if self.trains[i].active {
                self.advance_train(i, t);
            }
        }
        self.release_cleared(t);
        self.clock += 1;
        core::mem::take(&mut self.events)
    }

    fn release_cleared(&mut self, _t: u32) {
        for j in 0..self.locks.len() {
            if let Some(r) = self.locks[j] {
                if self.entered[r.index()] && !self.route_has_train(r) {
                    self.unlock(r);
                }
            }
        }
    }

    fn exchange(&mut self, i: usize) {
        let model = Arc::clone(&self.model);
        let tr = &mut self.trains[i];
        if let Some((station, _)) = model.platform_of(tr.head) {
            self.passengers.exchange(&model, &mut tr.onboard, tr.capacity, tr.direction, station);
        }
    }

    fn advance_train(&mut self, i: usize, t: u32) {
        match self.trains[i].phase {
            Phase::Dwelling { remaining } => {
                self.exchange(i);
                if remaining > 1 {
                    self.trains[i].phase = Phase::Dwelling { remaining: remaining - 1 };
                    return;
                }
                self.trains[i].phase = Phase::Held;
                if !self.try_start(i, t) {
                    return;
                }
            }
            Phase::Held => {
                self.exchange(i);
                if !self.try_start(i, t) {
                    return;
                }
            }
            Phase::ReversePending { remaining } => {
                if remaining > 1 {
                    self.trains[i].phase = Phase::ReversePending { remaining: remaining - 1 };
                    return;
                }
                if remaining == 1 {
                    self.reverse(i, t);
                }
                if !self.try_start(i, t) {
                    return;
                }
            }
            Phase::Running => {}
        }
        self.move_train(i, t);
    }

    /// Switch a standing train to running if it has authority.
    fn try_start(&mut self, i: usize, t: u32) -> bool {
        if self.authority(i).distance <= EPS {
            if let Phase::ReversePending { .. } = self.trains[i].phase {
                self.trains[i].phase = Phase::ReversePending { remaining: 0 };
            }
            return false;
        }
        let tr = &mut self.trains[i];
        let was_held = tr.phase == Phase::Held;
        tr.phase = Phase::Running;
        if was_held {
            let mut ev = Event::new(t, EventKind::Depart).train(tr.id).block(tr.head);
            ev.station = self.model.platform_of(tr.head).map(|(s, _)| s);
            self.events.push(ev);
        }
        true
    }

    fn move_train(&mut self, i: usize, t: u32) {
        let auth = self.authority(i);
        let m = Arc::clone(&self.model);
        let vloc = self.local_limit(&self.trains[i]);
        let motion = kinematic_step(self.trains[i].v, auth.distance, vloc, &auth.targets, &self.params);
        let id = self.trains[i].id;
        let dir = self.trains[i].direction;

        let mut rem = motion.dx;
        let mut k = 0;
        loop {
            let tr = &self.trains[i];
            let room = m.block(tr.head).length - tr.offset;
            if rem <= room + EPS || k >= auth.path.len() {
                let tr = &mut self.trains[i];
                tr.offset = (tr.offset + rem).min(m.block(tr.head).length);
                break;
            }
            rem -= room;
            let step = &auth.path[k];
            k += 1;
            let from = tr.head;
            if let Some(p) = m.departure_point(from, dir) {
                if self.signals[p.index()] == Aspect::Proceed {
                    self.signals[p.index()] = Aspect::Stop;
                }
                self.events.push(Event::new(t, EventKind::Pass).train(id).point(p).block(from));
            }
            if let Some(r) = step.enters {
                let entry = m.route(r).entry;
                self.signals[entry.index()] = Aspect::Stop;
                self.entered[r.index()] = true;
                self.events.push(Event::new(t, EventKind::Pass).train(id).point(entry).route(r));
            }
            self.occupancy[step.block.index()] = Some(id);
            let tr = &mut self.trains[i];
            tr.route = step.route_ctx.map(|x| x.0);
            tr.trail.insert(0, from);
            tr.head = step.block;
            tr.offset = 0.0;
        }
        self.trim_trail(i);

        let vloc = self.local_limit(&self.trains[i]);
        let tr = &mut self.trains[i];
        tr.v = motion.v.min(vloc);
        let head = m.block(tr.head);
        let at_end = tr.offset >= head.length - EPS;
        if tr.v == 0.0 && at_end {
            if head.is_platform && tr.served != Some(tr.head) {
                self.arrive(i, t);
            } else if head.is_depot {
                self.absorb(i, t);
                return;
            } else if self.needs_reversal(i) {
                if self.params.reverse_s == 0 {
                    self.reverse(i, t);
                    self.trains[i].phase = Phase::ReversePending { remaining: 0 };
                } else {
                    self.trains[i].phase = Phase::ReversePending { remaining: self.params.reverse_s };
                }
            }
        }
        self.track_stop(i, t);
    }

    fn trim_trail(&mut self, i: usize) {
        let m = Arc::clone(&self.model);
        let tr = &mut self.trains[i];
        let mut behind = tr.length - tr.offset;
        let mut keep = 0;
        while keep < tr.trail.len() && behind > EPS {
            behind -= m.block(tr.trail[keep]).length;
            keep += 1;
        }
        for b in tr.trail.drain(keep..) {
            if self.occupancy[b.index()] == Some(tr.id) {
                self.occupancy[b.index()] = None;
            }
        }
    }

    fn needs_reversal(&self, i: usize) -> bool {
        let tr = &self.trains[i];
        let m = &*self.model;
        let block = m.block(tr.head);
        if block.successors(tr.direction).is_empty() {
            return true;
        }
        match self.route_ctx(tr) {
            Some((r, k)) => {
                let rb = &m.route(r).blocks;
                k + 1 < rb.len() && block.successors(tr.direction.opposite()).contains(&rb[k + 1])
            }
            None => false,
        }
    }

    fn track_stop(&mut self, i: usize, t: u32) {
        let m = &*self.model;
        let tr = &mut self.trains[i];
        let stopped = tr.active && tr.phase == Phase::Running && tr.v == 0.0 && !m.block(tr.head).is_platform;
        if tr.phase == Phase::Running && tr.active {
            self.stats.speed_sum += tr.v;
            self.stats.running_samples += 1;
        }
        if stopped {
            self.stats.stop_seconds += 1;
            if !tr.stopped_between {
                tr.stopped_between = true;
                self.stats.stop_events += 1;
                self.events.push(Event::new(t, EventKind::StopBetweenStationsBegin).train(tr.id).block(tr.head));
            }
        } else if tr.stopped_between {
            tr.stopped_between = false;
            self.events.push(Event::new(t, EventKind::StopBetweenStationsEnd).train(tr.id).block(tr.head));
        }
    }

    fn arrive(&mut self, i: usize, t: u32) {
        let m = Arc::clone(&self.model);
        let base = self.params.base_dwell_s.max(1);
        let tr = &mut self.trains[i];
        let station = m.platform_of(tr.head).map(|(s, _)| s);
        tr.served = Some(tr.head);
        tr.last_station = station.or(tr.last_station);
        tr.phase = Phase::Dwelling { remaining: base };
        let mut ev = Event::new(t, EventKind::Arrive).train(tr.id).block(tr.head);
        ev.station = station;
        self.events.push(ev);
        self.stats.arrivals += 1;
        self.exchange(i);
    }

    fn absorb(&mut self, i: usize, t: u32) {
        let m = Arc::clone(&self.model);
        let tr = &mut self.trains[i];
        tr.active = false;
        tr.v = 0.0;
        let groups = core::mem::take(&mut tr.onboard);
        let blocks: Vec<BlockId> = tr.occupied().collect();
        let station = tr.last_station;
        let id = tr.id;
        if tr.stopped_between {
            tr.stopped_between = false;
            self.events.push(Event::new(t, EventKind::StopBetweenStationsEnd).train(id).block(blocks[0]));
        }
        for b in blocks.iter() {
            if self.occupancy[b.index()] == Some(id) {
                self.occupancy[b.index()] = None;
            }
        }
        if let Some(s) = station {
            self.passengers.requeue(&m, s, groups);
        } else {
            debug_assert!(groups.is_empty());
        }
        self.events.push(Event::new(t, EventKind::Absorb).train(id).block(blocks[0]));
    }

    fn reverse(&mut self, i: usize, t: u32) {
        let m = Arc::clone(&self.model);
        let tr = &mut self.trains[i];
        let mut body: Vec<BlockId> = tr.occupied().collect();
        let new_offset = if body.len() == 1 {
            m.block(tr.head).length - (tr.offset - tr.length)
        } else {
            // Body length inside the rearmost block.
            let between: f64 = body[1..body.len() - 1].iter().map(|b| m.block(*b).length).sum();
            tr.length - tr.offset - between
        };
        body.reverse();
        tr.head = body[0];
        tr.trail = body[1..].to_vec();
        tr.offset = new_offset.clamp(0.0, m.block(tr.head).length);
        tr.direction = tr.direction.opposite();
        tr.v = 0.0;
        tr.served = if m.block(tr.head).is_platform { Some(tr.head) } else { None };
        let id = tr.id;
        let dir = tr.direction;
        let head = tr.head;
        let mut ev = Event::new(t, EventKind::Reverse).train(id).block(head);
        ev.station = tr.last_station;
        self.events.push(ev);
        if let Some(s) = tr.last_station {
            let mut keep = Vec::new();
            let mut off = Vec::new();
            for g in tr.onboard.drain(..) {
                if m.is_ahead(s, g.destination, dir) {
                    keep.push(g);
                } else {
                    off.push(g);
                }
            }
            tr.onboard = keep;
            self.passengers.requeue(&m, s, off);
        }
    }

    /// Line coordinate of a train's midpoint.
    pub fn train_position(&self, train: TrainId) -> f64 {
        let tr = &self.trains[train.index()];
        let g = &self.model.geometry;
        let head = g.position(tr.head, tr.direction, tr.offset);
        match tr.direction {
            Direction::Up => head - 0.5 * tr.length,
            Direction::Down => head + 0.5 * tr.length,
        }
    }

    /// Passenger totals, including what is on board.
    pub fn accounting(&self) -> passenger::PassengerAccounting {
        self.passengers.totals
    }

    /// Safety and bookkeeping invariants; empty when all hold.
    pub fn check_invariants(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let m = &*self.model;
        let mut owner: Vec<Option<TrainId>> = vec![None; m.blocks.len()];
        for tr in self.trains.iter().filter(|t| t.active) {
            for b in tr.occupied() {
                match owner[b.index()] {
                    Some(o) if o != tr.id => out.push(Violation::SharedBlock { block: b, a: o, b: tr.id }),
                    _ => owner[b.index()] = Some(tr.id),
                }
            }
            if tr.v > self.local_limit(tr) + 1e-9 {
                out.push(Violation::Overspeed { train: tr.id });
            }
            if !matches!(tr.phase, Phase::Running) && tr.v != 0.0 {
                out.push(Violation::MovingWhileStopped { train: tr.id });
            }
            if tr.offset < 0.0 || tr.offset > m.block(tr.head).length + EPS {
                out.push(Violation::OffsetOutOfRange { train: tr.id });
            }
        }
        let locked: Vec<RouteId> = self.locks.iter().flatten().copied().collect();
        for (x, &a) in locked.iter().enumerate() {
            for &b in &locked[x + 1..] {
                let ra = m.route(a);
                let overlap = ra.blocks.iter().any(|blk| m.route(b).blocks.contains(blk));
                if ra.conflicts.contains(&b) || m.route(b).conflicts.contains(&a) || overlap {
                    out.push(Violation::ConflictingLocks { a, b });
                }
            }
        }
        let onboard: u64 = self.trains.iter().map(|t| passenger::onboard_total(&t.onboard)).sum();
        let tot = self.passengers.totals;
        if !tot.is_conserved() || tot.onboard != onboard || tot.waiting != self.passengers.recount_waiting() {
            out.push(Violation::PassengerLeak);
        }
        out
    }
}

/// Block behind `block` for a train travelling in `dir`, preferring a
/// through edge.
fn predecessor(m: &RouteModel, block: BlockId, dir: Direction) -> Option<BlockId> {
    let preds = m.blocks.iter().enumerate().filter(|(_, b)| b.successors(dir).contains(&block));
    let mut first = None;
    for (i, b) in preds {
        if b.successors(dir).first() == Some(&block) {
            return Some(BlockId::from_index(i));
        }
        first.get_or_insert(BlockId::from_index(i));
    }
    first
}

#[cfg(test)]
mod tests;
