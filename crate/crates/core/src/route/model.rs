use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::config::{BlockConfig, JunctionConfig, JunctionRouteConfig, PlatformConfig, RouteConfig, StationConfig};
use super::validate::{validate_route, Violation};
use crate::ids::{BlockId, Direction, JunctionId, PointId, RouteId, StationId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RouteError {
    /// The first violation found, followed by the total count.
    #[error("{first} ({count} violation(s) in total)")]
    Invalid { first: Violation, count: usize, all: Vec<Violation> },
    #[error("unknown {kind} '{id}'")]
    Unknown { kind: &'static str, id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub id: String,
    pub name: String,
    pub platforms: Vec<Platform>,
    pub can_turn_back: bool,
    pub has_depot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Platform {
    pub id: String,
    pub block: BlockId,
    pub capacity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub id: String,
    pub length: f64,
    pub vmax: f64,
    /// Successors indexed by [`Direction::index`].
    pub succ: [Vec<BlockId>; 2],
    pub is_platform: bool,
    pub is_depot: bool,
}

impl Block {
    #[inline]
    pub fn successors(&self, dir: Direction) -> &[BlockId] {
        &self.succ[dir.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RouteKind {
    /// Continues in the approach direction.
    Straight,
    /// Reverses the train onto the opposite track.
    TurnBack,
    /// Ends in a depot block.
    Depot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Junction {
    pub id: String,
    pub routes: Vec<RouteId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub id: String,
    pub junction: JunctionId,
    pub blocks: Vec<BlockId>,
    pub entry: PointId,
    pub conflicts: Vec<RouteId>,
    pub kind: RouteKind,
    /// Direction in which a train enters the first block.
    pub direction: Direction,
    /// Blocks (with direction) from which the first route block is entered.
    pub approaches: Vec<(BlockId, Direction)>,
    pub station: Option<StationId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointKind {
    Departure,
    Junction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointLocation {
    Platform { station: StationId, platform: usize, block: BlockId },
    Route { junction: JunctionId, route: RouteId },
}

/// A two-aspect signal the controllers may set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint {
    pub id: String,
    pub kind: PointKind,
    pub location: PointLocation,
    pub station: Option<StationId>,
    pub direction: Direction,
}

/// Line coordinate of each block end, measured along the line from the
/// down-direction end (the lowest coordinate is 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineGeometry {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub length: f64,
}

impl LineGeometry {
    /// Coordinate of a point `offset` meters into `block` travelling in `dir`.
    #[inline]
    pub fn position(&self, block: BlockId, dir: Direction, offset: f64) -> f64 {
        match dir {
            Direction::Up => self.lo[block.index()] + offset,
            Direction::Down => self.hi[block.index()] - offset,
        }
    }

    pub fn center(&self, block: BlockId) -> f64 {
        0.5 * (self.lo[block.index()] + self.hi[block.index()])
    }
}

/// Immutable, fully resolved route description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteModel {
    pub stations: Vec<Station>,
    pub blocks: Vec<Block>,
    pub junctions: Vec<Junction>,
    pub routes: Vec<Route>,
    /// Control points in their canonical order; [`PointId`] indexes this list.
    pub points: Vec<ControlPoint>,
    pub geometry: LineGeometry,
    pub station_pos: Vec<f64>,
    block_platform: Vec<Option<(StationId, usize)>>,
    departure_point: Vec<[Option<PointId>; 2]>,
    route_entries: Vec<Vec<RouteId>>,
    routes_with_block: Vec<Vec<RouteId>>,
    station_points: Vec<Vec<PointId>>,
}

impl RouteModel {
    pub fn empty() -> RouteModel {
        RouteModel::from_config(&RouteConfig::default()).expect("empty model is valid")
    }

    pub fn from_config(cfg: &RouteConfig) -> Result<RouteModel, RouteError> {
        let violations = validate_route(cfg);
        if let Some(first) = violations.first().cloned() {
            return Err(RouteError::Invalid { first, count: violations.len(), all: violations });
        }

        let block_ix: BTreeMap<&str, BlockId> =
            cfg.blocks.iter().enumerate().map(|(i, b)| (b.id.as_str(), BlockId::from_index(i))).collect();
        let blocks: Vec<Block> = cfg
            .blocks
            .iter()
            .map(|b| Block {
                id: b.id.clone(),
                length: b.length_m,
                vmax: b.vmax_mps,
                succ: [
                    b.succ_up.iter().map(|s| block_ix[s.as_str()]).collect(),
                    b.succ_down.iter().map(|s| block_ix[s.as_str()]).collect(),
                ],
                is_platform: b.platform,
                is_depot: b.depot,
            })
            .collect();
        let stations: Vec<Station> = cfg
            .stations
            .iter()
            .map(|s| Station {
                id: s.id.clone(),
                name: s.name.clone(),
                platforms: s
                    .platforms
                    .iter()
                    .map(|p| Platform { id: p.id.clone(), block: block_ix[p.block.as_str()], capacity: p.capacity })
                    .collect(),
                can_turn_back: s.can_turn_back,
                has_depot: s.has_depot,
            })
            .collect();

        let mut block_platform = vec![None; blocks.len()];
        for (si, st) in stations.iter().enumerate() {
            for (pi, p) in st.platforms.iter().enumerate() {
                block_platform[p.block.index()] = Some((StationId::from_index(si), pi));
            }
        }

        let geometry = compute_geometry(&blocks, &stations);
        let station_pos: Vec<f64> = stations
            .iter()
            .map(|s| {
                let sum: f64 = s.platforms.iter().map(|p| geometry.center(p.block)).sum();
                sum / s.platforms.len() as f64
            })
            .collect();

        // Flatten junction routes.
        let route_ix: BTreeMap<&str, RouteId> = cfg
            .junctions
            .iter()
            .flat_map(|j| j.routes.iter())
            .enumerate()
            .map(|(i, r)| (r.id.as_str(), RouteId::from_index(i)))
            .collect();
        let mut junctions = Vec::with_capacity(cfg.junctions.len());
        let mut routes = Vec::new();
        for (ji, j) in cfg.junctions.iter().enumerate() {
            let mut ids = Vec::new();
            for r in &j.routes {
                let rblocks: Vec<BlockId> = r.blocks.iter().map(|b| block_ix[b.as_str()]).collect();
                let first = rblocks[0];
                let mut approaches = Vec::new();
                for (bi, b) in blocks.iter().enumerate() {
                    if rblocks.contains(&BlockId::from_index(bi)) {
                        continue;
                    }
                    for dir in Direction::BOTH {
                        if b.successors(dir).contains(&first) {
                            approaches.push((BlockId::from_index(bi), dir));
                        }
                    }
                }
                // Prefer an approach from a platform for direction and station.
                approaches.sort_by_key(|&(b, d)| (block_platform[b.index()].is_none(), b, d));
                let direction = approaches.first().map(|a| a.1).unwrap_or(Direction::Up);
                let crosses = rblocks.windows(2).any(|w| {
                    let a = &blocks[w[0].index()];
                    a.successors(direction.opposite()).contains(&w[1]) && !a.successors(direction).contains(&w[1])
                });
                let kind = if blocks[rblocks.last().unwrap().index()].is_depot {
                    RouteKind::Depot
                } else if crosses {
                    RouteKind::TurnBack
                } else {
                    RouteKind::Straight
                };
                let station = approaches
                    .iter()
                    .find_map(|(b, _)| block_platform[b.index()].map(|(s, _)| s))
                    .or_else(|| nearest_station(&station_pos, geometry.center(first)));
                ids.push(route_ix[r.id.as_str()]);
                routes.push(Route {
                    id: r.id.clone(),
                    junction: JunctionId::from_index(ji),
                    blocks: rblocks,
                    entry: PointId(u32::MAX),
                    conflicts: r.conflicts.iter().map(|c| route_ix[c.as_str()]).collect(),
                    kind,
                    direction,
                    approaches,
                    station,
                });
            }
            junctions.push(Junction { id: j.id.clone(), routes: ids });
        }

        // Control points, canonical order: station position, direction, kind, id.
        struct Pending {
            key: (f64, usize, usize),
            point: ControlPoint,
        }
        let mut pending: Vec<Pending> = Vec::new();
        for (si, st) in stations.iter().enumerate() {
            for (pi, p) in st.platforms.iter().enumerate() {
                for dir in Direction::BOTH {
                    if blocks[p.block.index()].successors(dir).is_empty() {
                        continue;
                    }
                    pending.push(Pending {
                        key: (station_pos[si], dir.index(), 0),
                        point: ControlPoint {
                            id: format!("{}/{}/{}-departure", st.id, p.id, dir),
                            kind: PointKind::Departure,
                            location: PointLocation::Platform {
                                station: StationId::from_index(si),
                                platform: pi,
                                block: p.block,
                            },
                            station: Some(StationId::from_index(si)),
                            direction: dir,
                        },
                    });
                }
            }
        }
        for (ri, r) in routes.iter().enumerate() {
            let jcfg = &cfg.junctions[r.junction.index()];
            let rcfg = jcfg.routes.iter().find(|x| x.id == r.id).unwrap();
            let pos = match r.station {
                Some(s) => station_pos[s.index()],
                None => geometry.center(r.blocks[0]),
            };
            pending.push(Pending {
                key: (pos, r.direction.index(), 1),
                point: ControlPoint {
                    id: rcfg.entry_signal.clone(),
                    kind: PointKind::Junction,
                    location: PointLocation::Route { junction: r.junction, route: RouteId::from_index(ri) },
                    station: r.station,
                    direction: r.direction,
                },
            });
        }
        pending.sort_by(|a, b| {
            a.key
                .0
                .total_cmp(&b.key.0)
                .then(a.key.1.cmp(&b.key.1))
                .then(a.key.2.cmp(&b.key.2))
                .then_with(|| a.point.id.cmp(&b.point.id))
        });
        let points: Vec<ControlPoint> = pending.into_iter().map(|p| p.point).collect();

        let mut departure_point = vec![[None, None]; blocks.len()];
        let mut station_points = vec![Vec::new(); stations.len()];
        for (i, p) in points.iter().enumerate() {
            let pid = PointId::from_index(i);
            match p.location {
                PointLocation::Platform { block, .. } => {
                    departure_point[block.index()][p.direction.index()] = Some(pid)
                }
                PointLocation::Route { route, .. } => routes[route.index()].entry = pid,
            }
            if let Some(s) = p.station {
                station_points[s.index()].push(pid);
            }
        }

        let mut route_entries = vec![Vec::new(); blocks.len()];
        let mut routes_with_block = vec![Vec::new(); blocks.len()];
        for (ri, r) in routes.iter().enumerate() {
            route_entries[r.blocks[0].index()].push(RouteId::from_index(ri));
            for b in &r.blocks {
                routes_with_block[b.index()].push(RouteId::from_index(ri));
            }
        }

        Ok(RouteModel {
            stations,
            blocks,
            junctions,
            routes,
            points,
            geometry,
            station_pos,
            block_platform,
            departure_point,
            route_entries,
            routes_with_block,
            station_points,
        })
    }

    /// Inverse of [`from_config`](Self::from_config).
    pub fn to_config(&self) -> RouteConfig {
        let bid = |b: &BlockId| self.blocks[b.index()].id.clone();
        RouteConfig {
            stations: self
                .stations
                .iter()
                .map(|s| StationConfig {
                    id: s.id.clone(),
                    name: s.name.clone(),
                    platforms: s
                        .platforms
                        .iter()
                        .map(|p| PlatformConfig { id: p.id.clone(), block: bid(&p.block), capacity: p.capacity })
                        .collect(),
                    can_turn_back: s.can_turn_back,
                    has_depot: s.has_depot,
                })
                .collect(),
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockConfig {
                    id: b.id.clone(),
                    length_m: b.length,
                    vmax_mps: b.vmax,
                    succ_up: b.succ[0].iter().map(bid).collect(),
                    succ_down: b.succ[1].iter().map(bid).collect(),
                    platform: b.is_platform,
                    depot: b.is_depot,
                })
                .collect(),
            junctions: self
                .junctions
                .iter()
                .map(|j| JunctionConfig {
                    id: j.id.clone(),
                    routes: j
                        .routes
                        .iter()
                        .map(|r| {
                            let r = &self.routes[r.index()];
                            JunctionRouteConfig {
                                id: r.id.clone(),
                                blocks: r.blocks.iter().map(bid).collect(),
                                entry_signal: self.points[r.entry.index()].id.clone(),
                                conflicts: r.conflicts.iter().map(|c| self.routes[c.index()].id.clone()).collect(),
                            }
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    #[inline]
    pub fn block(&self, id: BlockId) -> &Block {
        &self.blocks[id.index()]
    }

    #[inline]
    pub fn route(&self, id: RouteId) -> &Route {
        &self.routes[id.index()]
    }

    #[inline]
    pub fn point(&self, id: PointId) -> &ControlPoint {
        &self.points[id.index()]
    }

    /// Station and platform index for a platform block.
    #[inline]
    pub fn platform_of(&self, block: BlockId) -> Option<(StationId, usize)> {
        self.block_platform[block.index()]
    }

    #[inline]
    pub fn departure_point(&self, block: BlockId, dir: Direction) -> Option<PointId> {
        self.departure_point[block.index()][dir.index()]
    }

    /// Routes whose first block is `block`.
    #[inline]
    pub fn routes_entering(&self, block: BlockId) -> &[RouteId] {
        &self.route_entries[block.index()]
    }

    /// Routes that contain `block` anywhere in their sequence.
    #[inline]
    pub fn routes_containing(&self, block: BlockId) -> &[RouteId] {
        &self.routes_with_block[block.index()]
    }

    /// Control points located at a station, in canonical order.
    #[inline]
    pub fn station_points(&self, station: StationId) -> &[PointId] {
        &self.station_points[station.index()]
    }

    pub fn block_by_name(&self, id: &str) -> Result<BlockId, RouteError> {
        self.blocks
            .iter()
            .position(|b| b.id == id)
            .map(BlockId::from_index)
            .ok_or_else(|| RouteError::Unknown { kind: "block", id: String::from(id) })
    }

    pub fn station_by_name(&self, id: &str) -> Result<StationId, RouteError> {
        self.stations
            .iter()
            .position(|s| s.id == id)
            .map(StationId::from_index)
            .ok_or_else(|| RouteError::Unknown { kind: "station", id: String::from(id) })
    }

    pub fn route_by_name(&self, id: &str) -> Result<RouteId, RouteError> {
        self.routes
            .iter()
            .position(|r| r.id == id)
            .map(RouteId::from_index)
            .ok_or_else(|| RouteError::Unknown { kind: "route", id: String::from(id) })
    }

    pub fn point_by_name(&self, id: &str) -> Result<PointId, RouteError> {
        self.points
            .iter()
            .position(|p| p.id == id)
            .map(PointId::from_index)
            .ok_or_else(|| RouteError::Unknown { kind: "control point", id: String::from(id) })
    }

    /// Platform of `station` from which trains leave in `dir`.
    pub fn platform_for(&self, station: StationId, dir: Direction) -> Option<BlockId> {
        self.stations[station.index()]
            .platforms
            .iter()
            .map(|p| p.block)
            .find(|&b| self.departure_point(b, dir).is_some())
    }

    /// Direction served by a platform block (the first with a successor).
    pub fn platform_direction(&self, block: BlockId) -> Option<Direction> {
        Direction::BOTH.into_iter().find(|&d| !self.block(block).successors(d).is_empty())
    }

    /// Direction in which `to` lies from `from` along the line.
    pub fn direction_between(&self, from: StationId, to: StationId) -> Direction {
        if self.station_pos[to.index()] >= self.station_pos[from.index()] {
            Direction::Up
        } else {
            Direction::Down
        }
    }

    /// Whether station `dest` lies strictly ahead of `from` for a train running in `dir`.
    pub fn is_ahead(&self, from: StationId, dest: StationId, dir: Direction) -> bool {
        let (a, b) = (self.station_pos[from.index()], self.station_pos[dest.index()]);
        match dir {
            Direction::Up => b > a,
            Direction::Down => b < a,
        }
    }

    /// Route from `block` in `dir` of the requested kind, if any.
    pub fn route_from(&self, block: BlockId, dir: Direction, kind: RouteKind) -> Option<RouteId> {
        self.block(block).successors(dir).iter().flat_map(|&s| self.routes_entering(s).iter().copied()).find(|&r| {
            let route = self.route(r);
            route.kind == kind && route.approaches.contains(&(block, dir))
        })
    }

    /// Stations ordered along the line.
    pub fn stations_in_line_order(&self) -> Vec<StationId> {
        let mut ids: Vec<StationId> = (0..self.stations.len()).map(StationId::from_index).collect();
        ids.sort_by(|a, b| self.station_pos[a.index()].total_cmp(&self.station_pos[b.index()]));
        ids
    }
}

impl fmt::Display for RouteModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} stations, {} blocks, {} junction routes, {} control points, {:.0} m",
            self.stations.len(),
            self.blocks.len(),
            self.routes.len(),
            self.points.len(),
            self.geometry.length
        )
    }
}

fn nearest_station(station_pos: &[f64], x: f64) -> Option<StationId> {
    station_pos
        .iter()
        .enumerate()
        .min_by(|a, b| crate::math::abs(a.1 - x).total_cmp(&crate::math::abs(b.1 - x)))
        .map(|(i, _)| StationId::from_index(i))
}

/// Place block ends on the line by propagating along successor edges from
/// the first platform of the first station. An up edge `a -> b` joins
/// `a.hi` to `b.lo`, a down edge joins `a.lo` to `b.hi`.
fn compute_geometry(blocks: &[Block], stations: &[Station]) -> LineGeometry {
    let n = blocks.len();
    let mut lo = vec![f64::NAN; n];
    let mut hi = vec![f64::NAN; n];
    let mut pred: Vec<Vec<(usize, Direction)>> = vec![Vec::new(); n];
    for (a, b) in blocks.iter().enumerate() {
        for dir in Direction::BOTH {
            for s in b.successors(dir) {
                pred[s.index()].push((a, dir));
            }
        }
    }
    let mut queue = VecDeque::new();
    let anchor = stations.first().and_then(|s| s.platforms.first()).map(|p| p.block.index());
    let mut roots: Vec<usize> = anchor.into_iter().collect();
    roots.extend(0..n);
    for root in roots {
        if !lo[root].is_nan() {
            continue;
        }
        lo[root] = 0.0;
        hi[root] = blocks[root].length;
        queue.push_back(root);
        while let Some(a) = queue.pop_front() {
            for dir in Direction::BOTH {
                for s in blocks[a].successors(dir) {
                    let b = s.index();
                    if !lo[b].is_nan() {
                        continue;
                    }
                    match dir {
                        Direction::Up => {
                            lo[b] = hi[a];
                            hi[b] = lo[b] + blocks[b].length;
                        }
                        Direction::Down => {
                            hi[b] = lo[a];
                            lo[b] = hi[b] - blocks[b].length;
                        }
                    }
                    queue.push_back(b);
                }
            }
            for &(p, dir) in &pred[a] {
                if !lo[p].is_nan() {
                    continue;
                }
                match dir {
                    Direction::Up => {
                        hi[p] = lo[a];
                        lo[p] = hi[p] - blocks[p].length;
                    }
                    Direction::Down => {
                        lo[p] = hi[a];
                        hi[p] = lo[p] + blocks[p].length;
                    }
                }
                queue.push_back(p);
            }
        }
    }
    let min = lo.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = if min.is_finite() { -min } else { 0.0 };
    for x in lo.iter_mut().chain(hi.iter_mut()) {
        *x += shift;
    }
    let length = hi.iter().copied().fold(0.0, f64::max);
    LineGeometry { lo, hi, length }
}
