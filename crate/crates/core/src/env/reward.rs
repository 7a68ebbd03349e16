use serde::{Deserialize, Serialize};

/// Reward weights; the reward is maximized. Positive terms: arrivals and
/// speed. Penalties: interstation stoppage, excess load and schedule
/// deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    pub arrived: f64,
    pub speed: f64,
    pub stoppage: f64,
    pub congestion: f64,
    pub deviation: f64,
}

impl RewardWeights {
    /// Arrivals and stoppage only.
    pub const RESCHEDULING: RewardWeights =
        RewardWeights { arrived: 1.0, speed: 0.0, stoppage: 0.01, congestion: 0.0, deviation: 0.0 };
    /// Rescheduling plus a pull back toward the planned train distribution.
    pub const RECOVERY: RewardWeights =
        RewardWeights { arrived: 1.0, speed: 0.0, stoppage: 0.01, congestion: 0.0, deviation: 0.5 };

    pub fn preset(name: &str) -> Option<RewardWeights> {
        match name {
            "rescheduling" => Some(Self::RESCHEDULING),
            "recovery" => Some(Self::RECOVERY),
            "zero" => Some(Self::default()),
            _ => None,
        }
    }

    pub fn scaled(self, a: f64) -> RewardWeights {
        RewardWeights {
            arrived: a * self.arrived,
            speed: a * self.speed,
            stoppage: a * self.stoppage,
            congestion: a * self.congestion,
            deviation: a * self.deviation,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.arrived, self.speed, self.stoppage, self.congestion, self.deviation].iter().all(|w| w.is_finite())
    }
}

/// Per-transition totals the reward is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregates {
    /// Passengers reaching their destination.
    pub arrived: f64,
    /// Mean speed of running trains, m/s.
    pub mean_speed: f64,
    /// Train-seconds stopped between stations.
    pub stop_seconds: f64,
    /// Summed load factor above the comfort threshold, per train-second.
    pub excess_load: f64,
    /// Mean schedule-deviation distance.
    pub deviation: f64,
}

/// Load factor above which crowding is penalized.
pub const COMFORT_LOAD: f64 = 0.8;

pub fn compute_reward(a: &Aggregates, w: &RewardWeights) -> f64 {
    w.arrived * a.arrived + w.speed * a.mean_speed
        - w.stoppage * a.stop_seconds
        - w.congestion * a.excess_load
        - w.deviation * a.deviation
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_aggregates_give_zero() {
        assert_eq!(compute_reward(&Aggregates::default(), &RewardWeights::RECOVERY), 0.0);
    }

    #[test]
    fn linear_combination() {
        let w = RewardWeights { arrived: 1.0, speed: 0.0, stoppage: 0.01, congestion: 0.0, deviation: 0.1 };
        let a = Aggregates { arrived: 10.0, stop_seconds: 30.0, deviation: 4.0, ..Default::default() };
        assert!((compute_reward(&a, &w) - 9.3).abs() < 1e-12);
    }

    #[test]
    fn doubling_weights_doubles_reward() {
        let a = Aggregates { arrived: 7.0, mean_speed: 11.5, stop_seconds: 42.0, excess_load: 0.3, deviation: 2.5 };
        let w = RewardWeights { arrived: 1.0, speed: 0.2, stoppage: 0.01, congestion: 3.0, deviation: 0.5 };
        assert!((compute_reward(&a, &w.scaled(2.0)) - 2.0 * compute_reward(&a, &w)).abs() < 1e-12);
    }
}
