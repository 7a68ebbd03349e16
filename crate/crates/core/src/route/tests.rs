use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::fixture::desk_line;
use crate::ids::Direction;

fn s(v: &str) -> String {
    String::from(v)
}

fn blk(id: &str, length: f64, up: &[&str], down: &[&str], platform: bool) -> BlockConfig {
    BlockConfig {
        id: s(id),
        length_m: length,
        vmax_mps: 20.0,
        succ_up: up.iter().map(|x| s(x)).collect(),
        succ_down: down.iter().map(|x| s(x)).collect(),
        platform,
        depot: false,
    }
}

fn station(id: &str, block: &str) -> StationConfig {
    StationConfig {
        id: s(id),
        name: s(id),
        platforms: vec![PlatformConfig { id: s("1"), block: s(block), capacity: 100 }],
        can_turn_back: false,
        has_depot: false,
    }
}

/// Two single-platform stations joined by one bidirectional block.
fn two_stations() -> RouteConfig {
    RouteConfig {
        stations: vec![station("A", "A1"), station("B", "B1")],
        blocks: vec![
            blk("A1", 100.0, &["M"], &[], true),
            blk("M", 1000.0, &["B1"], &["A1"], false),
            blk("B1", 100.0, &[], &["M"], true),
        ],
        junctions: vec![],
    }
}

fn first_violation(cfg: &RouteConfig) -> String {
    match RouteModel::from_config(cfg) {
        Err(RouteError::Invalid { first, .. }) => first.to_string(),
        other => panic!("expected a violation, got {other:?}"),
    }
}

#[test]
fn minimal_two_station_line() {
    let m = RouteModel::from_config(&two_stations()).unwrap();
    assert_eq!(m.stations.len(), 2);
    assert_eq!(m.geometry.length, 1200.0);
    assert_eq!(m.station_pos, vec![50.0, 1150.0]);
    let ids: Vec<&str> = m.points.iter().map(|p| p.id.as_str()).collect();
    assert_eq!(ids, ["A/1/up-departure", "B/1/down-departure"]);
    assert!(m.points.iter().all(|p| p.kind == PointKind::Departure));
}

#[test]
fn empty_model_has_no_control_points() {
    let m = RouteModel::empty();
    assert!(m.points.is_empty());
    assert!(enumerate_control_points(&m).is_empty());
}

#[test]
fn dangling_reference_is_reported() {
    let mut cfg = two_stations();
    cfg.blocks[1].succ_up = vec![s("B9")];
    let msg = first_violation(&cfg);
    assert!(msg.starts_with("dangling reference"), "{msg}");
    assert!(msg.contains("B9"));
}

#[test]
fn zero_length_is_reported() {
    let mut cfg = two_stations();
    cfg.blocks[1].length_m = 0.0;
    let msg = first_violation(&cfg);
    assert!(msg.starts_with("nonpositive length"), "{msg}");
}

#[test]
fn duplicate_ids_are_reported() {
    let mut cfg = two_stations();
    cfg.stations[1].id = s("A");
    assert!(first_violation(&cfg).starts_with("duplicate id"));
    let mut cfg = two_stations();
    cfg.blocks.push(blk("M", 10.0, &[], &[], false));
    assert!(first_violation(&cfg).starts_with("duplicate id"));
}

#[test]
fn every_violation_is_collected() {
    let mut cfg = two_stations();
    cfg.blocks[0].length_m = -1.0;
    cfg.blocks[2].vmax_mps = 0.0;
    let all = validate_route(&cfg);
    assert_eq!(all.len(), 2);
    match RouteModel::from_config(&cfg) {
        Err(RouteError::Invalid { count, .. }) => assert_eq!(count, 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn directional_cycle_is_rejected() {
    let mut cfg = two_stations();
    cfg.blocks[2].succ_up = vec![s("A1")];
    assert!(validate_route(&cfg).iter().any(|v| matches!(v, Violation::DirectionalCycle { .. })));
}

#[test]
fn turnaround_needs_a_joining_route() {
    let mut cfg = two_stations();
    cfg.stations[0].can_turn_back = true;
    assert!(first_violation(&cfg).contains("turnaround station 'A'"));
}

#[test]
fn desk_line_turnaround_stations() {
    let m = RouteModel::from_config(&desk_line()).unwrap();
    let order = m.stations_in_line_order();
    let (first, last) = (order[0], order[order.len() - 1]);
    let intermediate: Vec<&str> = order
        .iter()
        .filter(|&&st| st != first && st != last && m.stations[st.index()].can_turn_back)
        .map(|st| m.stations[st.index()].id.as_str())
        .collect();
    assert_eq!(intermediate, ["S2", "S5"]);
    assert!(m.stations[first.index()].has_depot);
}

/// Hand count: every platform has a departure in its own direction (8
/// stations, 2 platforms), plus J0 (turn, depot), two junctions with two
/// routes at each of the two intermediate turnarounds, and the far
/// terminal's single turn route.
#[test]
fn desk_line_control_point_count() {
    let m = RouteModel::from_config(&desk_line()).unwrap();
    let departures = m.points.iter().filter(|p| p.kind == PointKind::Departure).count();
    let junction = m.points.iter().filter(|p| p.kind == PointKind::Junction).count();
    assert_eq!(departures, 8 * 2);
    assert_eq!(junction, 2 + 2 * 2 * 2 + 1);
    assert_eq!(m.points.len(), 27);
}

#[test]
fn control_points_are_in_canonical_order() {
    let m = RouteModel::from_config(&desk_line()).unwrap();
    let key = |p: &ControlPoint| {
        let pos = p.station.map_or(f64::NAN, |s| m.station_pos[s.index()]);
        let kind = match p.kind {
            PointKind::Departure => 0,
            PointKind::Junction => 1,
        };
        (pos, p.direction.index(), kind, p.id.clone())
    };
    for w in m.points.windows(2) {
        let (a, b) = (key(&w[0]), key(&w[1]));
        let ord = a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3));
        assert!(ord.is_lt(), "{} before {}", w[0].id, w[1].id);
    }
    // Same input, same list.
    assert_eq!(RouteModel::from_config(&desk_line()).unwrap().points, m.points);
}

#[test]
fn config_round_trips_through_the_model() {
    let cfg = desk_line();
    let m = RouteModel::from_config(&cfg).unwrap();
    assert_eq!(RouteModel::from_config(&m.to_config()).unwrap(), m);
}

#[test]
fn route_kinds_and_directions() {
    let m = RouteModel::from_config(&desk_line()).unwrap();
    let r = |id: &str| m.route(m.route_by_name(id).unwrap());
    assert_eq!(r("R2u-straight").kind, RouteKind::Straight);
    assert_eq!(r("R2u-turn").kind, RouteKind::TurnBack);
    assert_eq!(r("R2u-turn").direction, Direction::Up);
    assert_eq!(r("R2d-turn").direction, Direction::Down);
    assert_eq!(r("R0-depot").kind, RouteKind::Depot);
    let s2 = m.station_by_name("S2").unwrap();
    assert_eq!(r("R2u-turn").station, Some(s2));
    assert!(m.block_by_name("nope").is_err());
}

#[test]
fn geometry_places_stations_in_order() {
    let m = RouteModel::from_config(&desk_line()).unwrap();
    let order: Vec<&str> = m.stations_in_line_order().iter().map(|s| m.stations[s.index()].id.as_str()).collect();
    assert_eq!(order, ["S0", "S1", "S2", "S3", "S4", "S5", "S6", "S7"]);
    let u0 = m.block_by_name("U0").unwrap();
    let u1 = m.block_by_name("U1").unwrap();
    assert_eq!(m.geometry.lo[u1.index()] - m.geometry.hi[u0.index()], 1400.0);
}
