//! Structural checks over a [`RouteConfig`]. Violations are values, not
//! errors, so callers can report all of them at once.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::config::RouteConfig;
use crate::ids::Direction;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateId { kind: &'static str, id: String },
    DanglingReference { from: String, to: String },
    NonpositiveLength { block: String },
    NonpositiveSpeed { block: String },
    NoPlatforms { station: String },
    PlatformNotFlagged { station: String, block: String },
    PlatformBlockUnlisted { block: String },
    PlatformListedTwice { block: String },
    PlatformWithoutDeparture { block: String },
    EmptyRoute { route: String },
    RouteNotContiguous { route: String, from: String, to: String },
    AsymmetricConflict { route: String, other: String },
    DirectionalCycle { direction: Direction, block: String },
    NoTerminalReachable { block: String, direction: Direction },
    TurnaroundWithoutJunction { station: String },
    DepotWithoutRoute { station: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            DuplicateId { kind, id } => write!(f, "duplicate id: {kind} '{id}'"),
            DanglingReference { from, to } => {
                write!(f, "dangling reference: '{from}' refers to unknown '{to}'")
            }
            NonpositiveLength { block } => write!(f, "nonpositive length: block '{block}'"),
            NonpositiveSpeed { block } => write!(f, "nonpositive speed limit: block '{block}'"),
            NoPlatforms { station } => write!(f, "station '{station}' has no platforms"),
            PlatformNotFlagged { station, block } => {
                write!(f, "platform block '{block}' of station '{station}' is not flagged as a platform")
            }
            PlatformBlockUnlisted { block } => {
                write!(f, "platform block '{block}' belongs to no station")
            }
            PlatformListedTwice { block } => {
                write!(f, "platform block '{block}' is listed by more than one platform")
            }
            PlatformWithoutDeparture { block } => {
                write!(f, "platform block '{block}' has no successor in either direction")
            }
            EmptyRoute { route } => write!(f, "route '{route}' has no blocks"),
            RouteNotContiguous { route, from, to } => {
                write!(f, "route '{route}' is not contiguous between '{from}' and '{to}'")
            }
            AsymmetricConflict { route, other } => {
                write!(f, "asymmetric conflict: '{route}' lists '{other}' but not the reverse")
            }
            DirectionalCycle { direction, block } => {
                write!(f, "{direction} successor graph has a cycle through '{block}'")
            }
            NoTerminalReachable { block, direction } => {
                write!(f, "no {direction} terminal reachable from platform block '{block}'")
            }
            TurnaroundWithoutJunction { station } => {
                write!(f, "turnaround station '{station}' has no route joining its up and down sides")
            }
            DepotWithoutRoute { station } => {
                write!(f, "depot station '{station}' has no route into a depot block")
            }
        }
    }
}

/// Check every invariant of the route description. An empty result means the
/// configuration can be turned into a [`RouteModel`](super::RouteModel).
pub fn validate_route(cfg: &RouteConfig) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut block_ix: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, b) in cfg.blocks.iter().enumerate() {
        if block_ix.insert(b.id.as_str(), i).is_some() {
            out.push(Violation::DuplicateId { kind: "block", id: b.id.clone() });
        }
        if !(b.length_m.is_finite() && b.length_m > 0.0) {
            out.push(Violation::NonpositiveLength { block: b.id.clone() });
        }
        if !(b.vmax_mps.is_finite() && b.vmax_mps > 0.0) {
            out.push(Violation::NonpositiveSpeed { block: b.id.clone() });
        }
    }
    for b in &cfg.blocks {
        for s in b.succ_up.iter().chain(b.succ_down.iter()) {
            if !block_ix.contains_key(s.as_str()) {
                out.push(Violation::DanglingReference { from: b.id.clone(), to: s.clone() });
            }
        }
    }

    let mut station_ids = BTreeSet::new();
    let mut platform_owner: BTreeMap<&str, usize> = BTreeMap::new();
    for st in &cfg.stations {
        if !station_ids.insert(st.id.as_str()) {
            out.push(Violation::DuplicateId { kind: "station", id: st.id.clone() });
        }
        if st.platforms.is_empty() {
            out.push(Violation::NoPlatforms { station: st.id.clone() });
        }
        let mut local = BTreeSet::new();
        for p in &st.platforms {
            if !local.insert(p.id.as_str()) {
                out.push(Violation::DuplicateId { kind: "platform", id: format!("{}/{}", st.id, p.id) });
            }
            match block_ix.get(p.block.as_str()) {
                None => {
                    out.push(Violation::DanglingReference { from: format!("{}/{}", st.id, p.id), to: p.block.clone() })
                }
                Some(&bi) => {
                    if !cfg.blocks[bi].platform {
                        out.push(Violation::PlatformNotFlagged { station: st.id.clone(), block: p.block.clone() });
                    }
                    *platform_owner.entry(p.block.as_str()).or_insert(0) += 1;
                }
            }
        }
    }
    for b in &cfg.blocks {
        match platform_owner.get(b.id.as_str()) {
            None if b.platform => out.push(Violation::PlatformBlockUnlisted { block: b.id.clone() }),
            Some(&n) if n > 1 => out.push(Violation::PlatformListedTwice { block: b.id.clone() }),
            _ => {}
        }
        if b.platform && b.succ_up.is_empty() && b.succ_down.is_empty() {
            out.push(Violation::PlatformWithoutDeparture { block: b.id.clone() });
        }
    }

    let mut junction_ids = BTreeSet::new();
    let mut route_conflicts: BTreeMap<&str, &[String]> = BTreeMap::new();
    let mut signal_ids = BTreeSet::new();
    for j in &cfg.junctions {
        if !junction_ids.insert(j.id.as_str()) {
            out.push(Violation::DuplicateId { kind: "junction", id: j.id.clone() });
        }
        for r in &j.routes {
            if route_conflicts.insert(r.id.as_str(), &r.conflicts).is_some() {
                out.push(Violation::DuplicateId { kind: "route", id: r.id.clone() });
            }
            if !signal_ids.insert(r.entry_signal.as_str()) {
                out.push(Violation::DuplicateId { kind: "signal", id: r.entry_signal.clone() });
            }
            if r.blocks.is_empty() {
                out.push(Violation::EmptyRoute { route: r.id.clone() });
            }
            let mut all_known = true;
            for b in &r.blocks {
                if !block_ix.contains_key(b.as_str()) {
                    all_known = false;
                    out.push(Violation::DanglingReference { from: r.id.clone(), to: b.clone() });
                }
            }
            if all_known {
                for w in r.blocks.windows(2) {
                    let a = &cfg.blocks[block_ix[w[0].as_str()]];
                    if !a.succ_up.contains(&w[1]) && !a.succ_down.contains(&w[1]) {
                        out.push(Violation::RouteNotContiguous {
                            route: r.id.clone(),
                            from: w[0].clone(),
                            to: w[1].clone(),
                        });
                    }
                }
            }
        }
    }
    for (id, conflicts) in &route_conflicts {
        for c in conflicts.iter() {
            match route_conflicts.get(c.as_str()) {
                None => out.push(Violation::DanglingReference { from: String::from(*id), to: c.clone() }),
                Some(back) => {
                    if !back.iter().any(|x| x == id) {
                        out.push(Violation::AsymmetricConflict { route: String::from(*id), other: c.clone() });
                    }
                }
            }
        }
    }

    // Graph checks only make sense once every reference resolves.
    if out.iter().any(|v| matches!(v, Violation::DanglingReference { .. } | Violation::DuplicateId { .. })) {
        return out;
    }

    let n = cfg.blocks.len();
    let succ: Vec<[Vec<usize>; 2]> = cfg
        .blocks
        .iter()
        .map(|b| {
            [
                b.succ_up.iter().map(|s| block_ix[s.as_str()]).collect(),
                b.succ_down.iter().map(|s| block_ix[s.as_str()]).collect(),
            ]
        })
        .collect();

    for dir in Direction::BOTH {
        let d = dir.index();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut color = vec![0u8; n];
        let mut reported = false;
        for root in 0..n {
            if color[root] != 0 || reported {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            color[root] = 1;
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                if *next < succ[node][d].len() {
                    let child = succ[node][d][*next];
                    *next += 1;
                    match color[child] {
                        0 => {
                            color[child] = 1;
                            stack.push((child, 0));
                        }
                        1 => {
                            out.push(Violation::DirectionalCycle {
                                direction: dir,
                                block: cfg.blocks[child].id.clone(),
                            });
                            reported = true;
                            break;
                        }
                        _ => {}
                    }
                } else {
                    color[node] = 2;
                    stack.pop();
                }
            }
        }
        if reported {
            continue;
        }
        for (i, b) in cfg.blocks.iter().enumerate() {
            if !b.platform || succ[i][d].is_empty() {
                continue;
            }
            let mut seen = vec![false; n];
            let mut todo = vec![i];
            let mut found = false;
            while let Some(x) = todo.pop() {
                if core::mem::replace(&mut seen[x], true) {
                    continue;
                }
                if succ[x][d].is_empty() {
                    found = true;
                    break;
                }
                todo.extend(succ[x][d].iter().copied());
            }
            if !found {
                out.push(Violation::NoTerminalReachable { block: b.id.clone(), direction: dir });
            }
        }
    }

    for st in &cfg.stations {
        if !st.can_turn_back && !st.has_depot {
            continue;
        }
        let platforms: Vec<usize> = st.platforms.iter().map(|p| block_ix[p.block.as_str()]).collect();
        let mut turns = false;
        let mut depot = false;
        for j in &cfg.junctions {
            for r in &j.routes {
                let blocks: Vec<usize> = r.blocks.iter().map(|b| block_ix[b.as_str()]).collect();
                let Some(&first) = blocks.first() else { continue };
                for &p in &platforms {
                    for dir in Direction::BOTH {
                        if !succ[p][dir.index()].contains(&first) {
                            continue;
                        }
                        let opp = dir.opposite().index();
                        if blocks
                            .windows(2)
                            .any(|w| succ[w[0]][opp].contains(&w[1]) && !succ[w[0]][dir.index()].contains(&w[1]))
                        {
                            turns = true;
                        }
                        if cfg.blocks[*blocks.last().unwrap()].depot {
                            depot = true;
                        }
                    }
                }
            }
        }
        if st.can_turn_back && !turns {
            out.push(Violation::TurnaroundWithoutJunction { station: st.id.clone() });
        }
        if st.has_depot && !depot {
            out.push(Violation::DepotWithoutRoute { station: st.id.clone() });
        }
    }

    out
}
