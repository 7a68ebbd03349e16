use alloc::vec::Vec;

use crate::ids::BlockId;
use crate::sim::SimState;

use super::Episode;

/// Seconds between stored reference snapshots.
pub const SNAPSHOT_S: u32 = 600;

/// Planned head block of every running train, per second of the reference
/// run.
#[derive(Debug, Clone, Default)]
pub struct PlanTrace {
    start: u32,
    offsets: Vec<u32>,
    heads: Vec<BlockId>,
}

impl PlanTrace {
    fn push(&mut self, state: &SimState) {
        if self.offsets.is_empty() {
            self.start = state.now();
            self.offsets.push(0);
        }
        let mut heads = head_blocks(state);
        heads.sort_unstable();
        self.heads.extend(heads);
        self.offsets.push(self.heads.len() as u32);
    }

    /// Sorted planned head blocks at time of day `t`; empty outside the
    /// trace.
    pub fn heads_at(&self, t: u32) -> &[BlockId] {
        let Some(i) = t.checked_sub(self.start).map(|i| i as usize) else { return &[] };
        if i + 1 >= self.offsets.len() {
            return &[];
        }
        &self.heads[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn start(&self) -> u32 {
        self.start
    }

    /// First second past the trace.
    pub fn end(&self) -> u32 {
        self.start + self.offsets.len().saturating_sub(1) as u32
    }
}

/// Head blocks of active trains, unsorted.
pub fn head_blocks(state: &SimState) -> Vec<BlockId> {
    state.trains.iter().filter(|t| t.active).map(|t| t.head).collect()
}

/// L1 distance between the per-block train-count histograms of two sorted
/// head lists.
pub fn deviation(planned: &[BlockId], actual: &[BlockId]) -> u32 {
    let (mut i, mut j, mut d) = (0, 0, 0);
    while i < planned.len() && j < actual.len() {
        match planned[i].cmp(&actual[j]) {
            core::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
            core::cmp::Ordering::Less => {
                d += 1;
                i += 1;
            }
            core::cmp::Ordering::Greater => {
                d += 1;
                j += 1;
            }
        }
    }
    d + (planned.len() - i) as u32 + (actual.len() - j) as u32
}

/// The undisrupted timetable-only run: the source of episode start states
/// and of the planned train distribution.
#[derive(Debug, Clone)]
pub struct ReferenceRun {
    pub snapshots: Vec<Episode>,
    pub plan: PlanTrace,
}

impl ReferenceRun {
    /// Run `episode` until every train leaves service or `limit_s` is
    /// reached.
    pub fn record(mut episode: Episode, limit_s: u32) -> ReferenceRun {
        let start = episode.sim.now();
        let mut snapshots = Vec::new();
        let mut plan = PlanTrace::default();
        loop {
            let now = episode.sim.now();
            if (now - start).is_multiple_of(SNAPSHOT_S) {
                snapshots.push(episode.clone());
            }
            plan.push(&episode.sim);
            if episode.finished() || now >= limit_s {
                break;
            }
            episode.tick();
        }
        ReferenceRun { snapshots, plan }
    }

    /// The latest snapshot at or before `t`.
    pub fn snapshot_before(&self, t: u32) -> &Episode {
        let i = self.snapshots.partition_point(|e| e.sim.now() <= t);
        &self.snapshots[i.saturating_sub(1)]
    }
}
