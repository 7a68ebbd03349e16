//! The desk-scale double-track line used by tests, examples and the CLI
//! defaults: eight stations, turnaround sidings at two intermediate stations
//! and both terminals, a depot at the lower terminal, six trains and a
//! full-day timetable planned from simulated run times.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::agents::{straight_step, PostAction, Timetable, TimetableEntry};
use crate::ids::{BlockId, Direction, StationId};
use crate::passenger::{OdMatrix, OdRecord};
use crate::route::{
    BlockConfig, JunctionConfig, JunctionRouteConfig, PlatformConfig, RouteConfig, RouteKind, RouteModel, StationConfig,
};
use crate::sim::{init_sim, Aspect, Command, EventKind, Phase, Placement, SimParams};

pub const STATIONS: usize = 8;
/// Platform end to platform end, meters.
pub const GAPS_M: [f64; STATIONS - 1] = [1400.0, 1600.0, 1200.0, 1800.0, 1500.0, 1300.0, 1700.0];
pub const TURNAROUNDS: [usize; 2] = [2, 5];
pub const PLATFORM_M: f64 = 200.0;
pub const SIDING_M: f64 = 200.0;
pub const DEPOT_M: f64 = 300.0;
pub const MAIN_VMAX: f64 = 25.0;
pub const SIDING_VMAX: f64 = 10.0;
pub const DEPOT_VMAX: f64 = 5.0;
pub const PLATFORM_CAPACITY: u32 = 800;
pub const TRAINS: usize = 6;
pub const TRAIN_LENGTH_M: f64 = 100.0;
pub const TRAIN_CAPACITY: u32 = 600;
/// 05:30 and 24:00.
pub const SERVICE_START_S: u32 = 19_800;
pub const SERVICE_END_S: u32 = 86_400;
pub const OD_BASE_PPS: f64 = 0.01;

fn block(id: String, length: f64, vmax: f64, up: &[String], down: &[String], platform: bool) -> BlockConfig {
    BlockConfig {
        id,
        length_m: length,
        vmax_mps: vmax,
        succ_up: up.to_vec(),
        succ_down: down.to_vec(),
        platform,
        depot: false,
    }
}

fn route(id: &str, blocks: &[String], conflicts: &[&str]) -> JunctionRouteConfig {
    JunctionRouteConfig {
        id: String::from(id),
        blocks: blocks.to_vec(),
        entry_signal: format!("{id}-signal"),
        conflicts: conflicts.iter().map(|c| String::from(*c)).collect(),
    }
}

/// Route description of the desk-scale line.
///
/// Up track `U{k} -> U{k}a -> U{k}b -> U{k+1}`, down track
/// `D{k+1} -> D{k}b -> D{k}a -> D{k}`. Turnaround stations have a siding
/// beyond each platform (`XU{k}` past the up platform, `XD{k}` past the down
/// platform) joined to the opposite platform.
pub fn desk_line() -> RouteConfig {
    let n = STATIONS;
    let u = |k: usize| format!("U{k}");
    let d = |k: usize| format!("D{k}");
    let turns = |k: usize| TURNAROUNDS.contains(&k);
    let mut blocks = Vec::new();
    #[allow(clippy::needless_range_loop)]
    for k in 0..n {
        let last = k + 1 == n;
        // Up platform.
        let mut up = Vec::new();
        if !last {
            up.push(format!("U{k}a"));
        }
        if last || turns(k) {
            up.push(format!("XU{k}"));
        }
        blocks.push(block(u(k), PLATFORM_M, MAIN_VMAX, &up, &[], true));
        // Down platform.
        let mut down = Vec::new();
        if k > 0 {
            down.push(format!("D{}b", k - 1));
        }
        if k == 0 || turns(k) {
            down.push(format!("XD{k}"));
        }
        if k == 0 {
            down.push(String::from("DEP0"));
        }
        blocks.push(block(d(k), PLATFORM_M, MAIN_VMAX, &[], &down, true));
        if !last {
            let half = GAPS_M[k] / 2.0;
            blocks.push(block(format!("U{k}a"), half, MAIN_VMAX, &[format!("U{k}b")], &[], false));
            blocks.push(block(format!("U{k}b"), half, MAIN_VMAX, &[u(k + 1)], &[], false));
            blocks.push(block(format!("D{k}b"), half, MAIN_VMAX, &[], &[format!("D{k}a")], false));
            blocks.push(block(format!("D{k}a"), half, MAIN_VMAX, &[], &[d(k)], false));
        }
        if last || turns(k) {
            blocks.push(block(format!("XU{k}"), SIDING_M, SIDING_VMAX, &[], &[d(k)], false));
        }
        if k == 0 || turns(k) {
            blocks.push(block(format!("XD{k}"), SIDING_M, SIDING_VMAX, &[u(k)], &[], false));
        }
    }
    let mut depot = block(String::from("DEP0"), DEPOT_M, DEPOT_VMAX, &[], &[], false);
    depot.depot = true;
    blocks.push(depot);

    let stations = (0..n)
        .map(|k| StationConfig {
            id: format!("S{k}"),
            name: format!("Station {k}"),
            platforms: vec![
                PlatformConfig { id: String::from("1"), block: u(k), capacity: PLATFORM_CAPACITY },
                PlatformConfig { id: String::from("2"), block: d(k), capacity: PLATFORM_CAPACITY },
            ],
            can_turn_back: k == 0 || k + 1 == n || turns(k),
            has_depot: k == 0,
        })
        .collect();

    let mut junctions = vec![JunctionConfig {
        id: String::from("J0"),
        routes: vec![
            route("R0-turn", &[String::from("XD0"), u(0)], &[]),
            route("R0-depot", &[String::from("DEP0")], &[]),
        ],
    }];
    for &k in &TURNAROUNDS {
        let (us, ut) = (format!("R{k}u-straight"), format!("R{k}u-turn"));
        let (ds, dt) = (format!("R{k}d-straight"), format!("R{k}d-turn"));
        junctions.push(JunctionConfig {
            id: format!("J{k}u"),
            routes: vec![route(&us, &[format!("U{k}a")], &[&ut]), route(&ut, &[format!("XU{k}"), d(k)], &[&us])],
        });
        junctions.push(JunctionConfig {
            id: format!("J{k}d"),
            routes: vec![route(&ds, &[format!("D{}b", k - 1)], &[&dt]), route(&dt, &[format!("XD{k}"), u(k)], &[&ds])],
        });
    }
    let last = n - 1;
    junctions.push(JunctionConfig {
        id: format!("J{last}"),
        routes: vec![route(&format!("R{last}-turn"), &[format!("XU{last}"), d(last)], &[])],
    });
    RouteConfig { stations, blocks, junctions }
}

pub fn desk_model() -> Arc<RouteModel> {
    Arc::new(RouteModel::from_config(&desk_line()).expect("desk line is valid"))
}

/// Uniform rates between all station pairs, tripled in the morning and
/// evening peaks, hourly buckets across the service day.
pub fn desk_od(n_stations: usize) -> OdMatrix {
    let mut records = Vec::new();
    for hour in 5..24u32 {
        let peak = matches!(hour, 7 | 8 | 17 | 18);
        let rate = if peak { 3.0 * OD_BASE_PPS } else { OD_BASE_PPS };
        for o in 0..n_stations {
            for d in 0..n_stations {
                if o != d {
                    records.push(OdRecord {
                        origin: StationId::from_index(o),
                        destination: StationId::from_index(d),
                        bucket_start_s: hour * 3600,
                        rate_pps: rate,
                    });
                }
            }
        }
    }
    OdMatrix::from_records(n_stations, 3600, &records).expect("fixture rates are valid")
}

/// One stop of the repeating cycle, times relative to the cycle origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleStop {
    pub station: StationId,
    pub platform: usize,
    pub arrive: i64,
    pub depart: i64,
    pub post_action: PostAction,
}

/// Measure one round trip of a lone train: up from the lower terminal,
/// turn back at the upper terminal, down, and turn back into the up platform
/// again. Returns each stop's (platform block, arrival, departure) with the
/// first departure at 0 and the closing arrival back at the start platform.
pub fn measure_round_trip(model: &Arc<RouteModel>, params: SimParams) -> Vec<(BlockId, u32, u32)> {
    let order = model.stations_in_line_order();
    let first = order[0];
    let last = order[order.len() - 1];
    let start = model.platform_for(first, Direction::Up).expect("lower terminal has an up platform");
    let place = Placement {
        name: String::from("probe"),
        block: start,
        offset: model.block(start).length,
        direction: Direction::Up,
        length: TRAIN_LENGTH_M,
        capacity: TRAIN_CAPACITY,
    };
    let mut sim = init_sim(Arc::clone(model), &[place], 0).expect("probe placement");
    sim.params = params;
    let mut stops: Vec<(BlockId, u32, u32)> = vec![(start, 0, 0)];
    let mut turns = 0;
    for _ in 0..20_000 {
        let tr = &sim.trains[0];
        let mut cmds = Vec::new();
        if tr.phase == Phase::Held {
            let (station, _) = model.platform_of(tr.head).expect("held at a platform");
            let dir = tr.direction;
            let terminal = (station == last && dir == Direction::Up) || (station == first && dir == Direction::Down);
            let route = if terminal {
                model.route_from(tr.head, dir, RouteKind::TurnBack)
            } else {
                straight_step(model, tr.head, dir).and_then(|(_, r)| r)
            };
            if let Some(r) = route {
                cmds.push(Command::SetRoute { route: r });
            }
            if let Some(p) = model.departure_point(tr.head, dir) {
                cmds.push(Command::SetSignal { point: p, aspect: Aspect::Proceed });
            }
        }
        let t = sim.clock;
        for e in sim.step(&cmds) {
            match e.kind {
                EventKind::Arrive => stops.push((e.block.expect("arrival block"), t, t)),
                EventKind::Depart => stops.last_mut().expect("a stop").2 = t,
                EventKind::Reverse => turns += 1,
                _ => {}
            }
        }
        if turns == 2 && stops.len() > 1 && stops.last().map(|s| s.0) == Some(start) {
            break;
        }
    }
    stops
}

/// Build the repeating cycle: measured run times, minimum dwell, and a
/// layover at both terminals stretching the cycle to a whole multiple of
/// `TRAINS * 60` seconds so the headway is a whole minute.
pub fn plan_cycle(model: &Arc<RouteModel>, params: SimParams) -> (Vec<CycleStop>, u32) {
    let trip = measure_round_trip(model, params);
    let dwell = params.base_dwell_s as i64;
    let closing = trip.last().expect("round trip").1 as i64;
    let unit = (TRAINS as i64) * 60;
    let min_cycle = closing + dwell;
    let cycle = (min_cycle + unit - 1) / unit * unit;
    let slack = cycle - min_cycle;
    let top = slack / 2;
    let order = model.stations_in_line_order();
    let last = order[order.len() - 1];
    let mut stops = Vec::new();
    let mut shift = 0i64;
    for (i, &(b, arr, dep)) in trip.iter().enumerate().take(trip.len() - 1) {
        let (station, platform) = model.platform_of(b).expect("platform stop");
        let dir = model.platform_direction(b).unwrap_or(Direction::Up);
        let (arrive, mut depart) = (arr as i64 + shift, dep as i64 + shift);
        if i == 0 {
            // Arrival of the previous cycle's closing leg.
            stops.push(CycleStop {
                station,
                platform,
                arrive: closing + top - cycle,
                depart: 0,
                post_action: PostAction::Proceed,
            });
            continue;
        }
        if station == last && dir == Direction::Down {
            depart += top;
            shift += top;
        }
        let turn = model
            .block(b)
            .successors(dir)
            .iter()
            .all(|&s| model.routes_entering(s).iter().any(|&r| model.route(r).kind != RouteKind::Straight));
        stops.push(CycleStop {
            station,
            platform,
            arrive,
            depart,
            post_action: if turn { PostAction::TurnBack } else { PostAction::Proceed },
        });
    }
    (stops, cycle as u32)
}

/// Full-day timetable: train `n` runs the cycle `n` headways ahead of train
/// 0 and starts at its next stop after `start_s`. Each train's last stop is
/// the first lower-terminal arrival after `end_s`, from where it runs to the
/// depot.
pub fn plan_timetable(model: &Arc<RouteModel>, params: SimParams, start_s: u32, end_s: u32) -> Timetable {
    let (cycle, period) = plan_cycle(model, params);
    let headway = period as i64 / TRAINS as i64;
    let mut entries = Vec::new();
    for n in 0..TRAINS {
        let origin = start_s as i64 - n as i64 * headway;
        let name = format!("T{n}");
        let mut started = false;
        'cycles: for c in 0.. {
            for s in &cycle {
                let arrive = origin + c * period as i64 + s.arrive;
                let depart = origin + c * period as i64 + s.depart;
                if !started {
                    if arrive < start_s as i64 {
                        continue;
                    }
                    started = true;
                }
                let last_leg = arrive >= end_s as i64 && s.post_action == PostAction::TurnBack && s.platform == 1;
                entries.push(TimetableEntry {
                    train: name.clone(),
                    station: s.station,
                    arrive_s: if entries.last().is_some_and(|e: &TimetableEntry| e.train == name) {
                        arrive as u32
                    } else {
                        start_s.max(arrive as u32)
                    },
                    depart_s: depart as u32,
                    platform: s.platform,
                    post_action: if last_leg { PostAction::ToDepot } else { s.post_action },
                });
                if last_leg {
                    break 'cycles;
                }
            }
        }
    }
    Timetable { entries }
}

/// Trains standing at the platform of their first stop.
pub fn placements_from_timetable(
    model: &RouteModel,
    timetable: &Timetable,
    length: f64,
    capacity: u32,
) -> Vec<Placement> {
    timetable
        .trains()
        .into_iter()
        .filter_map(|name| timetable.stops_of(name).next())
        .map(|e| {
            let b = e.platform_block(model);
            Placement {
                name: e.train.clone(),
                block: b,
                offset: model.block(b).length,
                direction: e.direction(model),
                length,
                capacity,
            }
        })
        .collect()
}

/// Everything needed to run the desk-scale line.
#[derive(Debug, Clone)]
pub struct DeskFixture {
    pub model: Arc<RouteModel>,
    pub timetable: Timetable,
    pub od: OdMatrix,
    pub placements: Vec<Placement>,
}

pub fn desk_fixture() -> DeskFixture {
    let model = desk_model();
    let timetable = plan_timetable(&model, SimParams::default(), SERVICE_START_S, SERVICE_END_S);
    let placements = placements_from_timetable(&model, &timetable, TRAIN_LENGTH_M, TRAIN_CAPACITY);
    let od = desk_od(model.stations.len());
    DeskFixture { model, timetable, od, placements }
}
