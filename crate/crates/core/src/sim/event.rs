use serde::{Deserialize, Serialize};

use crate::ids::{BlockId, PointId, RouteId, StationId, TrainId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Arrive,
    Depart,
    StopBetweenStationsBegin,
    StopBetweenStationsEnd,
    Lock,
    Release,
    Reject,
    Pass,
    Reverse,
    Absorb,
    DisruptionStart,
    DisruptionEnd,
    Refusal,
}

impl EventKind {
    pub const ALL: [EventKind; 13] = [
        EventKind::Arrive,
        EventKind::Depart,
        EventKind::StopBetweenStationsBegin,
        EventKind::StopBetweenStationsEnd,
        EventKind::Lock,
        EventKind::Release,
        EventKind::Reject,
        EventKind::Pass,
        EventKind::Reverse,
        EventKind::Absorb,
        EventKind::DisruptionStart,
        EventKind::DisruptionEnd,
        EventKind::Refusal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Arrive => "arrive",
            EventKind::Depart => "depart",
            EventKind::StopBetweenStationsBegin => "stop_between_stations_begin",
            EventKind::StopBetweenStationsEnd => "stop_between_stations_end",
            EventKind::Lock => "lock",
            EventKind::Release => "release",
            EventKind::Reject => "reject",
            EventKind::Pass => "pass",
            EventKind::Reverse => "reverse",
            EventKind::Absorb => "absorb",
            EventKind::DisruptionStart => "disruption_start",
            EventKind::DisruptionEnd => "disruption_end",
            EventKind::Refusal => "refusal",
        }
    }

    pub fn parse(s: &str) -> Option<EventKind> {
        EventKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// One log record. `t` is the time of day in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: u32,
    pub kind: EventKind,
    pub train: Option<TrainId>,
    pub station: Option<StationId>,
    pub block: Option<BlockId>,
    pub point: Option<PointId>,
    pub route: Option<RouteId>,
    pub reason: Option<&'static str>,
}

impl Event {
    pub fn new(t: u32, kind: EventKind) -> Event {
        Event { t, kind, train: None, station: None, block: None, point: None, route: None, reason: None }
    }

    pub fn train(mut self, id: TrainId) -> Event {
        self.train = Some(id);
        self
    }

    pub fn station(mut self, id: StationId) -> Event {
        self.station = Some(id);
        self
    }

    pub fn block(mut self, id: BlockId) -> Event {
        self.block = Some(id);
        self
    }

    pub fn point(mut self, id: PointId) -> Event {
        self.point = Some(id);
        self
    }

    pub fn route(mut self, id: RouteId) -> Event {
        self.route = Some(id);
        self
    }

    pub fn reason(mut self, r: &'static str) -> Event {
        self.reason = Some(r);
        self
    }
}
