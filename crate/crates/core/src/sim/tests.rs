use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use proptest::{prop_assert, prop_assert_eq, proptest};

use super::*;
use crate::fixture::{desk_fixture, desk_model, SERVICE_START_S};
use crate::passenger::{ArrivalMode, PassengerWorld};
use crate::route::{BlockConfig, RouteConfig};

/// Unsignalled up-direction chain L0 (1000 m), B1 (800), B2 (600),
/// B3 (400), B4 (500).
fn chain() -> Arc<RouteModel> {
    let lengths = [("L0", 1000.0), ("B1", 800.0), ("B2", 600.0), ("B3", 400.0), ("B4", 500.0)];
    let blocks = lengths
        .iter()
        .enumerate()
        .map(|(i, &(id, len))| BlockConfig {
            id: String::from(id),
            length_m: len,
            vmax_mps: 20.0,
            succ_up: lengths.get(i + 1).map(|n| String::from(n.0)).into_iter().collect(),
            succ_down: Vec::new(),
            platform: false,
            depot: false,
        })
        .collect();
    Arc::new(RouteModel::from_config(&RouteConfig { stations: vec![], blocks, junctions: vec![] }).unwrap())
}

fn at(m: &RouteModel, name: &str, block: &str, offset: f64) -> Placement {
    Placement {
        name: String::from(name),
        block: m.block_by_name(block).unwrap(),
        offset,
        direction: Direction::Up,
        length: 100.0,
        capacity: 100,
    }
}

#[test]
fn empty_state() {
    let s = init_sim(desk_model(), &[], 0).unwrap();
    assert_eq!(s.clock, 0);
    assert!(s.trains.is_empty());
    assert!(s.signals.iter().all(|a| *a == Aspect::Stop));
    assert!(s.locks.iter().all(Option::is_none));
}

#[test]
fn overlapping_placements_are_rejected() {
    let m = chain();
    let err = init_sim(Arc::clone(&m), &[at(&m, "a", "B1", 300.0), at(&m, "b", "B1", 700.0)], 0).unwrap_err();
    assert!(matches!(err, InitError::Overlap { .. }));
    let mut off = at(&m, "a", "B1", 300.0);
    off.block = BlockId(99);
    assert!(matches!(init_sim(Arc::clone(&m), &[off], 0), Err(InitError::OffModel { .. })));
}

#[test]
fn signals() {
    let m = desk_model();
    let mut s = init_sim(Arc::clone(&m), &[], 0).unwrap();
    let dep = m.point_by_name("S1/1/up-departure").unwrap();
    s.set_signal(dep, Aspect::Proceed).unwrap();
    assert_eq!(s.aspect(dep), Aspect::Proceed);
    let before = s.signals.clone();
    s.set_signal(dep, Aspect::Proceed).unwrap();
    assert_eq!(s.signals, before);
    let junction = m.point_by_name("R2u-straight-signal").unwrap();
    assert_eq!(s.set_signal(junction, Aspect::Proceed), Err(CommandError::ProceedWithoutLock));
    assert_eq!(s.aspect(junction), Aspect::Stop);
    assert_eq!(s.set_signal(PointId(999), Aspect::Stop), Err(CommandError::UnknownPoint));
    s.request_route(m.route_by_name("R2u-straight").unwrap());
    s.set_signal(junction, Aspect::Proceed).unwrap();
}

#[test]
fn route_requests() {
    let m = desk_model();
    let straight = m.route_by_name("R2u-straight").unwrap();
    let turn = m.route_by_name("R2u-turn").unwrap();
    let mut s = init_sim(Arc::clone(&m), &[], 0).unwrap();
    assert_eq!(s.request_route(straight), RouteRequest::Granted);
    assert!(s.is_locked(straight));
    assert_eq!(s.request_route(straight), RouteRequest::Granted);
    assert_eq!(s.request_route(turn), RouteRequest::Denied(Denial::Conflict));
    s.release_route(straight).unwrap();
    assert_eq!(s.request_route(turn), RouteRequest::Granted);

    let mut s = init_sim(Arc::clone(&m), &[], 0).unwrap();
    let u2a = m.block_by_name("U2a").unwrap();
    s.add_disruption(Disruption { blocks: vec![u2a], start: 0, duration: 10 }).unwrap();
    assert_eq!(s.request_route(straight), RouteRequest::Denied(Denial::Disrupted));
    assert!(!s.is_locked(straight));

    let mut p = at(&m, "a", "U2a", 150.0);
    p.direction = Direction::Up;
    let mut s = init_sim(Arc::clone(&m), &[p], 0).unwrap();
    assert_eq!(s.request_route(straight), RouteRequest::Denied(Denial::Occupied));
}

#[test]
fn authority_stops_at_an_occupied_block() {
    let m = chain();
    let s = init_sim(Arc::clone(&m), &[at(&m, "a", "L0", 200.0), at(&m, "b", "B1", 300.0)], 0).unwrap();
    assert_eq!(s.movement_authority(TrainId(0)), 800.0);
}

#[test]
fn authority_sums_free_blocks() {
    let m = chain();
    let s = init_sim(Arc::clone(&m), &[at(&m, "a", "L0", 200.0), at(&m, "b", "B4", 300.0)], 0).unwrap();
    assert_eq!(s.movement_authority(TrainId(0)), 800.0 + 800.0 + 600.0 + 400.0);
}

#[test]
fn disrupted_block_ends_authority_only_within_its_window() {
    let m = chain();
    let mut s = init_sim(Arc::clone(&m), &[at(&m, "a", "L0", 200.0), at(&m, "b", "B4", 300.0)], 0).unwrap();
    let b2 = m.block_by_name("B2").unwrap();
    s.epoch_s = 1000;
    s.add_disruption(Disruption { blocks: vec![b2], start: 1000, duration: 10 }).unwrap();
    assert_eq!(s.movement_authority(TrainId(0)), 800.0 + 800.0);
    s.clock = 9;
    assert!(s.is_disrupted(b2, s.now()));
    s.clock = 10;
    assert!(!s.is_disrupted(b2, s.now()));
    assert_eq!(s.movement_authority(TrainId(0)), 2600.0);
    s.epoch_s = 0;
    s.clock = 999;
    assert!(!s.is_disrupted(b2, s.now()));
}

#[test]
fn empty_step_only_advances_the_clock() {
    let mut s = init_sim(desk_model(), &[], 0).unwrap();
    let signals = s.signals.clone();
    assert!(s.step(&[]).is_empty());
    assert_eq!(s.clock, 1);
    assert_eq!(s.signals, signals);
    assert_eq!(s.stats, SimStats::default());
}

#[test]
fn train_berths_at_the_boundary_before_an_occupied_block() {
    let m = chain();
    let mut s = init_sim(Arc::clone(&m), &[at(&m, "a", "L0", 200.0), at(&m, "b", "B4", 500.0)], 0).unwrap();
    let mut moved = false;
    for _ in 0..600 {
        let start = s.train_position(TrainId(0));
        let auth = s.movement_authority(TrainId(0));
        s.step(&[]);
        assert!(s.train_position(TrainId(0)) - start <= auth + 1e-9);
        assert!(s.check_invariants().is_empty());
        moved |= s.trains[0].v > 0.0;
        if moved && s.trains[0].v == 0.0 {
            break;
        }
    }
    let t = &s.trains[0];
    assert_eq!(t.head, m.block_by_name("B3").unwrap());
    assert_eq!((t.offset, t.v), (400.0, 0.0));
}

fn random_commands(m: &RouteModel, raw: &[(u8, u16, bool)]) -> Vec<Command> {
    let np = m.points.len() as u16 + 2;
    let nr = m.routes.len() as u16 + 2;
    raw.iter()
        .map(|&(kind, x, flag)| match kind % 4 {
            0 => Command::SetSignal {
                point: PointId((x % np) as u32),
                aspect: if flag { Aspect::Proceed } else { Aspect::Stop },
            },
            1 => Command::RequestRoute { route: RouteId((x % nr) as u32) },
            2 => Command::SetRoute { route: RouteId((x % nr) as u32) },
            _ => Command::ReleaseRoute { route: RouteId((x % nr) as u32) },
        })
        .collect()
}

fn apply_direct(s: &mut SimState, c: Command) {
    match c {
        Command::SetSignal { point, aspect } => {
            let _ = s.set_signal(point, aspect);
        }
        Command::RequestRoute { route } if route.index() < s.model.routes.len() => {
            s.request_route(route);
        }
        Command::SetRoute { route } if route.index() < s.model.routes.len() => {
            if s.request_route(route) == RouteRequest::Granted {
                let entry = s.model.route(route).entry;
                s.set_signal(entry, Aspect::Proceed).unwrap();
            }
        }
        Command::ReleaseRoute { route } => {
            let _ = s.release_route(route);
        }
        _ => {}
    }
}

fn head_position(s: &SimState, i: usize) -> f64 {
    let t = &s.trains[i];
    s.model.geometry.position(t.head, t.direction, t.offset)
}

fn desk_state(seed: u64) -> SimState {
    let f = desk_fixture();
    let mut s = init_sim(Arc::clone(&f.model), &f.placements, seed).unwrap();
    s.epoch_s = SERVICE_START_S;
    s.set_passengers(PassengerWorld::new(&f.model, Arc::new(f.od.clone()), ArrivalMode::Poisson));
    let mid = f.model.block_by_name("U3b").unwrap();
    s.add_disruption(Disruption { blocks: vec![mid], start: SERVICE_START_S + 100, duration: 200 }).unwrap();
    s
}

proptest! {
    #![proptest_config(proptest::test_runner::Config::with_cases(16))]

    #[test]
    fn random_commands_never_break_invariants(
        seed in 0u64..1000,
        script in proptest::collection::vec(proptest::collection::vec((0u8..4, 0u16..64, proptest::bool::ANY), 0..4), 400),
    ) {
        let mut s = desk_state(seed);
        for raw in &script {
            // Commands take effect before movement, so apply them first and
            // measure authority as the step will see it.
            for c in random_commands(&s.model, raw) {
                apply_direct(&mut s, c);
            }
            let before: Vec<(f64, f64, Direction)> = (0..s.trains.len())
                .map(|i| (head_position(&s, i), s.movement_authority(TrainId::from_index(i)), s.trains[i].direction))
                .collect();
            s.step(&[]);
            prop_assert!(s.check_invariants().is_empty(), "{:?} at {}", s.check_invariants(), s.clock);
            for (i, (pos, auth, dir)) in before.into_iter().enumerate() {
                // A reversal swaps head and tail without moving the train.
                if s.trains[i].active && s.trains[i].direction == dir {
                    prop_assert!((head_position(&s, i) - pos).abs() <= auth + 1e-6);
                }
            }
        }
    }

    #[test]
    fn identical_inputs_give_identical_logs(
        seed in 0u64..1000,
        script in proptest::collection::vec(proptest::collection::vec((0u8..4, 0u16..64, proptest::bool::ANY), 0..3), 200),
    ) {
        let mut a = desk_state(seed);
        let mut b = desk_state(seed);
        for raw in &script {
            let cmds = random_commands(&a.model, raw);
            prop_assert_eq!(a.step(&cmds), b.step(&cmds));
        }
        prop_assert_eq!(a.accounting(), b.accounting());
    }
}
