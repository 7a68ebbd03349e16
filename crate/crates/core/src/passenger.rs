//! Origin-destination passenger generation, platform queues, boarding and
//! alighting, and the conservation ledger.
//!
//! Passengers are aggregated into groups with integer head counts. Rates are
//! stored as integer micro-persons per second so that fractional
//! accumulation is exact.

use alloc::collections::VecDeque;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::ids::{Direction, StationId};
use crate::math;
use crate::route::RouteModel;

const MICRO: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OdError {
    #[error("rate for {origin} -> {destination} must be finite and nonnegative, got {rate}")]
    BadRate { origin: StationId, destination: StationId, rate: f64 },
    #[error("nonzero rate from station {0} to itself")]
    SelfPair(StationId),
    #[error("station index {0} out of range")]
    UnknownStation(StationId),
    #[error("bucket width must be positive")]
    ZeroBucket,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdRecord {
    pub origin: StationId,
    pub destination: StationId,
    pub bucket_start_s: u32,
    pub rate_pps: f64,
}

/// Time-bucketed origin-destination arrival rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdMatrix {
    n: usize,
    bucket_s: u32,
    /// (bucket start, row-major n*n micro-persons/second), sorted by start.
    buckets: Vec<(u32, Vec<u64>)>,
}

impl OdMatrix {
    pub fn zeros(n_stations: usize, bucket_s: u32) -> OdMatrix {
        OdMatrix { n: n_stations, bucket_s: bucket_s.max(1), buckets: Vec::new() }
    }

    /// Build from sparse records; absent pairs are zero.
    pub fn from_records(n_stations: usize, bucket_s: u32, records: &[OdRecord]) -> Result<OdMatrix, OdError> {
        if bucket_s == 0 {
            return Err(OdError::ZeroBucket);
        }
        let mut m = OdMatrix::zeros(n_stations, bucket_s);
        for r in records {
            if r.origin.index() >= n_stations {
                return Err(OdError::UnknownStation(r.origin));
            }
            if r.destination.index() >= n_stations {
                return Err(OdError::UnknownStation(r.destination));
            }
            if !r.rate_pps.is_finite() || r.rate_pps < 0.0 {
                return Err(OdError::BadRate { origin: r.origin, destination: r.destination, rate: r.rate_pps });
            }
            if r.origin == r.destination {
                if r.rate_pps > 0.0 {
                    return Err(OdError::SelfPair(r.origin));
                }
                continue;
            }
            let start = r.bucket_start_s - r.bucket_start_s % bucket_s;
            let slot = match m.buckets.binary_search_by_key(&start, |b| b.0) {
                Ok(i) => i,
                Err(i) => {
                    m.buckets.insert(i, (start, vec![0; n_stations * n_stations]));
                    i
                }
            };
            let micro = math::round(r.rate_pps * MICRO as f64) as u64;
            m.buckets[slot].1[r.origin.index() * n_stations + r.destination.index()] = micro;
        }
        Ok(m)
    }

    pub fn n_stations(&self) -> usize {
        self.n
    }

    pub fn bucket_s(&self) -> u32 {
        self.bucket_s
    }

    fn row(&self, t: u32) -> Option<&[u64]> {
        let start = t - t % self.bucket_s;
        self.buckets.binary_search_by_key(&start, |b| b.0).ok().map(|i| self.buckets[i].1.as_slice())
    }

    /// Rate in micro-persons per second at time of day `t`.
    pub fn rate_micro(&self, origin: StationId, dest: StationId, t: u32) -> u64 {
        self.row(t).map_or(0, |r| r[origin.index() * self.n + dest.index()])
    }

    pub fn rate(&self, origin: StationId, dest: StationId, t: u32) -> f64 {
        self.rate_micro(origin, dest, t) as f64 / MICRO as f64
    }

    /// Sparse records, one per nonzero (origin, destination, bucket).
    pub fn records(&self) -> Vec<OdRecord> {
        let mut out = Vec::new();
        for (start, row) in &self.buckets {
            for (i, &r) in row.iter().enumerate() {
                if r > 0 {
                    out.push(OdRecord {
                        origin: StationId::from_index(i / self.n),
                        destination: StationId::from_index(i % self.n),
                        bucket_start_s: *start,
                        rate_pps: r as f64 / MICRO as f64,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalMode {
    /// Fractional accumulator: exact, reproducible.
    #[default]
    Deterministic,
    /// Poisson draws from the seeded simulation RNG.
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassengerGroup {
    pub count: u32,
    pub origin: StationId,
    pub destination: StationId,
    pub created_at: u32,
}

/// Per-pair fractional accumulators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalGenerator {
    accum: Vec<u64>,
    mode: ArrivalMode,
}

impl ArrivalGenerator {
    pub fn new(n_stations: usize, mode: ArrivalMode) -> ArrivalGenerator {
        ArrivalGenerator { accum: vec![0; n_stations * n_stations], mode }
    }

    /// Arrivals for the interval `[t, t + dt)`. Each pair's accumulator
    /// grows by `rate * dt`; its integer part is released as one group and
    /// the remainder carries over.
    pub fn generate<R: Rng + ?Sized>(&mut self, od: &OdMatrix, t: u32, dt: u32, rng: &mut R) -> Vec<PassengerGroup> {
        let mut out = Vec::new();
        let n = od.n;
        let Some(row) = od.row(t) else { return out };
        for (i, &rate) in row.iter().enumerate() {
            if rate == 0 {
                continue;
            }
            let count = match self.mode {
                ArrivalMode::Deterministic => {
                    let acc = &mut self.accum[i];
                    *acc += rate * dt as u64;
                    let whole = *acc / MICRO;
                    *acc %= MICRO;
                    whole
                }
                ArrivalMode::Poisson => {
                    let lambda = rate as f64 * dt as f64 / MICRO as f64;
                    match Poisson::new(lambda) {
                        Ok(p) => p.sample(rng) as u64,
                        Err(_) => 0,
                    }
                }
            };
            if count > 0 {
                out.push(PassengerGroup {
                    count: count as u32,
                    origin: StationId::from_index(i / n),
                    destination: StationId::from_index(i % n),
                    created_at: t,
                });
            }
        }
        out
    }
}

/// Outcome of one platform exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Exchange {
    pub alighted: u64,
    pub boarded: u64,
}

pub fn onboard_total(onboard: &[PassengerGroup]) -> u64 {
    onboard.iter().map(|g| g.count as u64).sum()
}

/// Alight every group destined for `station`, then board waiting groups
/// whose destination lies ahead in `dir`, oldest first, up to capacity.
/// Groups are split when only part of one fits.
pub fn exchange_at_platform(
    model: &RouteModel,
    onboard: &mut Vec<PassengerGroup>,
    capacity: u32,
    dir: Direction,
    station: StationId,
    queue: &mut VecDeque<PassengerGroup>,
) -> Exchange {
    let mut ex = Exchange::default();
    onboard.retain(|g| {
        if g.destination == station {
            ex.alighted += g.count as u64;
            false
        } else {
            true
        }
    });
    let mut room = (capacity as u64).saturating_sub(onboard_total(onboard));
    let mut i = 0;
    while room > 0 && i < queue.len() {
        let g = queue[i];
        if !model.is_ahead(station, g.destination, dir) {
            i += 1;
            continue;
        }
        let take = (g.count as u64).min(room) as u32;
        room -= take as u64;
        ex.boarded += take as u64;
        match onboard.iter_mut().find(|o| o.origin == g.origin && o.destination == g.destination) {
            Some(o) => o.count += take,
            None => onboard.push(PassengerGroup { count: take, ..g }),
        }
        if take == g.count {
            queue.remove(i);
        } else {
            queue[i].count -= take;
        }
    }
    ex
}

/// Load factor: persons on board over capacity (may exceed 1).
pub fn congestion(onboard: &[PassengerGroup], capacity: u32) -> Result<f64, ZeroCapacity> {
    if capacity == 0 {
        return Err(ZeroCapacity);
    }
    Ok(onboard_total(onboard) as f64 / capacity as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("train capacity is zero")]
pub struct ZeroCapacity;

/// Running totals. `generated == waiting + onboard + arrived` always.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PassengerAccounting {
    pub generated: u64,
    pub waiting: u64,
    pub onboard: u64,
    pub arrived: u64,
}

impl PassengerAccounting {
    pub fn is_conserved(&self) -> bool {
        self.generated == self.waiting + self.onboard + self.arrived
    }
}

/// Station-side passenger state owned by one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct PassengerWorld {
    pub od: Arc<OdMatrix>,
    pub generator: ArrivalGenerator,
    /// Inside-station queues per station, indexed by direction.
    pub queues: Vec<[VecDeque<PassengerGroup>; 2]>,
    /// Arrivals that found the station full, in arrival order.
    pub outside: Vec<VecDeque<PassengerGroup>>,
    inside_count: Vec<u64>,
    capacity: Vec<u64>,
    pub totals: PassengerAccounting,
}

impl PassengerWorld {
    pub fn new(model: &RouteModel, od: Arc<OdMatrix>, mode: ArrivalMode) -> PassengerWorld {
        let n = model.stations.len();
        PassengerWorld {
            generator: ArrivalGenerator::new(n, mode),
            od,
            queues: (0..n).map(|_| [VecDeque::new(), VecDeque::new()]).collect(),
            outside: (0..n).map(|_| VecDeque::new()).collect(),
            inside_count: vec![0; n],
            capacity: model.stations.iter().map(|s| s.platforms.iter().map(|p| p.capacity as u64).sum()).collect(),
            totals: PassengerAccounting::default(),
        }
    }

    pub fn empty(model: &RouteModel) -> PassengerWorld {
        let od = Arc::new(OdMatrix::zeros(model.stations.len(), 3600));
        PassengerWorld::new(model, od, ArrivalMode::Deterministic)
    }

    /// Generate this second's arrivals and move them into stations.
    pub fn tick<R: Rng + ?Sized>(&mut self, model: &RouteModel, t: u32, rng: &mut R) {
        if self.od.n != self.queues.len() {
            return;
        }
        let od = Arc::clone(&self.od);
        let groups = self.generator.generate(&od, t, 1, rng);
        for g in groups {
            self.totals.generated += g.count as u64;
            self.totals.waiting += g.count as u64;
            self.outside[g.origin.index()].push_back(g);
        }
        for s in 0..self.queues.len() {
            self.admit(model, StationId::from_index(s));
        }
    }

    /// Move outside arrivals into the station while space remains.
    fn admit(&mut self, model: &RouteModel, station: StationId) {
        let s = station.index();
        while let Some(front) = self.outside[s].front_mut() {
            let room = self.capacity[s].saturating_sub(self.inside_count[s]);
            if room == 0 {
                break;
            }
            let take = (front.count as u64).min(room) as u32;
            let mut g = *front;
            g.count = take;
            if take == front.count {
                self.outside[s].pop_front();
            } else {
                front.count -= take;
            }
            let dir = model.direction_between(g.origin, g.destination);
            self.queues[s][dir.index()].push_back(g);
            self.inside_count[s] += take as u64;
        }
    }

    /// Exchange passengers between a stopped train and the queue at `station`.
    pub fn exchange(
        &mut self,
        model: &RouteModel,
        onboard: &mut Vec<PassengerGroup>,
        capacity: u32,
        dir: Direction,
        station: StationId,
    ) -> Exchange {
        let s = station.index();
        let ex = exchange_at_platform(model, onboard, capacity, dir, station, &mut self.queues[s][dir.index()]);
        self.totals.onboard -= ex.alighted;
        self.totals.arrived += ex.alighted;
        self.totals.onboard += ex.boarded;
        self.totals.waiting -= ex.boarded;
        self.inside_count[s] -= ex.boarded;
        if ex.boarded > 0 {
            self.admit(model, station);
        }
        ex
    }

    /// Put groups back into the station they are at (after a turnback or
    /// withdrawal left them without a train going their way).
    pub fn requeue(
        &mut self,
        model: &RouteModel,
        station: StationId,
        groups: impl IntoIterator<Item = PassengerGroup>,
    ) {
        let s = station.index();
        for g in groups {
            self.totals.onboard -= g.count as u64;
            if g.destination == station {
                self.totals.arrived += g.count as u64;
                continue;
            }
            self.totals.waiting += g.count as u64;
            // Re-entering passengers queue outside behind anyone already there.
            self.outside[s].push_back(PassengerGroup { origin: station, ..g });
        }
        self.admit(model, station);
    }

    /// Persons waiting inside `station` for trains in `dir`.
    pub fn queue_len(&self, station: StationId, dir: Direction) -> u64 {
        self.queues[station.index()][dir.index()].iter().map(|g| g.count as u64).sum()
    }

    pub fn station_capacity(&self, station: StationId) -> u64 {
        self.capacity[station.index()]
    }

    pub fn inside(&self, station: StationId) -> u64 {
        self.inside_count[station.index()]
    }

    /// Recount waiting passengers from the queues themselves.
    pub fn recount_waiting(&self) -> u64 {
        let q: u64 = self.queues.iter().flat_map(|d| d.iter()).flat_map(|q| q.iter()).map(|g| g.count as u64).sum();
        let o: u64 = self.outside.iter().flat_map(|q| q.iter()).map(|g| g.count as u64).sum();
        q + o
    }
}
