use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::ids::{BlockId, Direction, StationId};
use crate::route::RouteModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostAction {
    Proceed,
    TurnBack,
    ToDepot,
}

impl PostAction {
    pub fn as_str(self) -> &'static str {
        match self {
            PostAction::Proceed => "proceed",
            PostAction::TurnBack => "turn_back",
            PostAction::ToDepot => "to_depot",
        }
    }

    pub fn parse(s: &str) -> Option<PostAction> {
        match s {
            "proceed" => Some(PostAction::Proceed),
            "turn_back" => Some(PostAction::TurnBack),
            "to_depot" => Some(PostAction::ToDepot),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimetableEntry {
    pub train: String,
    pub station: StationId,
    pub arrive_s: u32,
    pub depart_s: u32,
    /// Index into the station's platform list.
    pub platform: usize,
    pub post_action: PostAction,
}

impl TimetableEntry {
    pub fn platform_block(&self, model: &RouteModel) -> BlockId {
        model.stations[self.station.index()].platforms[self.platform].block
    }

    pub fn direction(&self, model: &RouteModel) -> Direction {
        model.platform_direction(self.platform_block(model)).unwrap_or(Direction::Up)
    }
}

/// Planned stops, grouped by train in the order given.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Timetable {
    pub entries: Vec<TimetableEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TimetableError {
    #[error("line {line}: unknown station {station}")]
    UnknownStation { line: usize, station: String },
    #[error("line {line}: station {station} has no platform {platform}")]
    UnknownPlatform { line: usize, station: String, platform: String },
    #[error("line {line}: departure before arrival")]
    DepartBeforeArrive { line: usize },
    #[error("line {line}: train {train} stops are not strictly increasing in time")]
    NotIncreasing { line: usize, train: String },
    #[error("line {line}: bad time {value}")]
    BadTime { line: usize, value: String },
    #[error("line {line}: bad post action {value}")]
    BadAction { line: usize, value: String },
}

impl Timetable {
    /// Check the per-entry and per-train ordering invariants.
    pub fn validate(&self, model: &RouteModel) -> Result<(), TimetableError> {
        let mut last: Vec<(&str, u32)> = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            let line = i + 1;
            let st = model
                .stations
                .get(e.station.index())
                .ok_or_else(|| TimetableError::UnknownStation { line, station: format!("{}", e.station) })?;
            if e.platform >= st.platforms.len() {
                return Err(TimetableError::UnknownPlatform {
                    line,
                    station: st.id.clone(),
                    platform: format!("#{}", e.platform),
                });
            }
            if e.depart_s < e.arrive_s {
                return Err(TimetableError::DepartBeforeArrive { line });
            }
            match last.iter_mut().find(|(t, _)| *t == e.train.as_str()) {
                Some((_, prev)) => {
                    if e.arrive_s <= *prev {
                        return Err(TimetableError::NotIncreasing { line, train: e.train.clone() });
                    }
                    *prev = e.depart_s;
                }
                None => last.push((e.train.as_str(), e.depart_s)),
            }
        }
        Ok(())
    }

    pub fn trains(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.train.as_str()) {
                out.push(&e.train);
            }
        }
        out
    }

    /// Stops of one train in time order.
    pub fn stops_of<'a>(&'a self, train: &'a str) -> impl Iterator<Item = &'a TimetableEntry> + 'a {
        self.entries.iter().filter(move |e| e.train == train)
    }
}

/// `HH:MM:SS` to seconds. Hours may exceed 23 for after-midnight service.
pub fn parse_hms(s: &str) -> Option<u32> {
    let mut it = s.trim().split(':');
    let h: u32 = it.next()?.parse().ok()?;
    let m: u32 = it.next()?.parse().ok()?;
    let sec: u32 = it.next().unwrap_or("0").parse().ok()?;
    if it.next().is_some() || m >= 60 || sec >= 60 {
        return None;
    }
    Some(h * 3600 + m * 60 + sec)
}

pub struct Hms(pub u32);

impl fmt::Display for Hms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}:{:02}", self.0 / 3600, self.0 / 60 % 60, self.0 % 60)
    }
}
