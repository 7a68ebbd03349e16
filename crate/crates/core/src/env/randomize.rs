use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ids::BlockId;
use crate::sim::Disruption;

/// Ranges sampled per episode. Bounds are inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisruptionRanges {
    /// Candidate block sets; one is drawn uniformly.
    pub locations: Vec<Vec<BlockId>>,
    /// Disruption start, seconds after the episode start.
    pub start_offset_s: (u32, u32),
    pub duration_s: (u32, u32),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RandomizeError {
    #[error("empty range for {0}")]
    EmptyRange(&'static str),
    #[error("no candidate disruption locations")]
    NoLocations,
    #[error("disruption duration must be positive")]
    ZeroDuration,
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (u32, u32), what: &'static str) -> Result<u32, RandomizeError> {
    if lo > hi {
        return Err(RandomizeError::EmptyRange(what));
    }
    Ok(rng.random_range(lo..=hi))
}

/// Draw the episode start and, if configured, a disruption: location
/// uniform over the candidates, start uniform over its window relative to
/// the episode start, duration uniform over its range.
pub fn randomize_domain<R: Rng + ?Sized>(
    start_window_s: (u32, u32),
    ranges: Option<&DisruptionRanges>,
    rng: &mut R,
) -> Result<(Option<Disruption>, u32), RandomizeError> {
    let start = uniform(rng, start_window_s, "episode start")?;
    let Some(r) = ranges else { return Ok((None, start)) };
    if r.locations.is_empty() || r.locations.iter().any(|l| l.is_empty()) {
        return Err(RandomizeError::NoLocations);
    }
    if r.duration_s.1 == 0 {
        return Err(RandomizeError::ZeroDuration);
    }
    let k = rng.random_range(0..r.locations.len());
    let offset = uniform(rng, r.start_offset_s, "disruption start")?;
    let duration = uniform(rng, (r.duration_s.0.max(1), r.duration_s.1), "disruption duration")?;
    Ok((Some(Disruption { blocks: r.locations[k].clone(), start: start + offset, duration }), start))
}
