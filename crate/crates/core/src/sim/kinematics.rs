use serde::{Deserialize, Serialize};

use crate::math;

/// Train dynamics constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    /// Acceleration, m/s².
    pub accel: f64,
    /// Service braking rate, m/s².
    pub decel: f64,
    /// Margin kept to the end of authority while braking, m.
    pub guard: f64,
    /// Authority lookahead cap, m.
    pub lookahead: f64,
    /// Base dwell at every platform stop, s.
    pub base_dwell_s: u32,
    /// Standstill time needed to reverse, s.
    pub reverse_s: u32,
}

impl Default for SimParams {
    fn default() -> SimParams {
        SimParams { accel: 0.8, decel: 1.0, guard: 5.0, lookahead: 5000.0, base_dwell_s: 30, reverse_s: 30 }
    }
}

/// Speed restriction starting `distance` meters ahead of the head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedTarget {
    pub distance: f64,
    pub vmax: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Motion {
    pub v: f64,
    pub dx: f64,
}

/// Highest end-of-step speed from which the train can still slow to
/// `v_target` within `distance` after covering this step's trapezoid.
fn speed_cap(v: f64, distance: f64, v_target: f64, b: f64) -> f64 {
    // v1² + b·v1 + b·v - v_target² - 2·b·d <= 0
    let disc = b * b - 4.0 * (b * v - v_target * v_target - 2.0 * b * distance);
    if disc < 0.0 {
        return 0.0;
    }
    ((-b + math::sqrt(disc)) * 0.5).max(0.0)
}

/// Advance one step of `dt` = 1 s.
///
/// Accelerates toward `vmax_local` unless the braking curve to the end of
/// authority (less the guard) or to a lower limit ahead requires slowing, in
/// which case the train brakes at no more than `decel`. Displacement is the
/// trapezoid `(v + v') / 2` and never exceeds `authority`. A train that
/// comes to rest within the guard distance berths at the authority end.
pub fn kinematic_step(v: f64, authority: f64, vmax_local: f64, ahead: &[SpeedTarget], p: &SimParams) -> Motion {
    let authority = authority.max(0.0);
    let b = p.decel;
    let v_up = (v + p.accel).min(vmax_local);
    let mut cap = speed_cap(v, authority - p.guard, 0.0, b);
    for t in ahead {
        if t.vmax < v_up {
            cap = cap.min(speed_cap(v, t.distance, t.vmax, b));
        }
    }
    let mut v1 = v_up.min((v - b).max(cap)).max(0.0);
    let mut dx = 0.5 * (v + v1);
    if dx >= authority {
        dx = authority;
        v1 = 0.0;
    } else if v1 <= b && authority - dx <= p.guard + 0.5 * v1 + 1e-9 {
        // Berth: the last few meters are covered at creep speed.
        dx = authority;
        v1 = 0.0;
    }
    Motion { v: v1, dx }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> SimParams {
        SimParams::default()
    }

    #[test]
    fn accelerates_from_rest() {
        let m = kinematic_step(0.0, 5000.0, 25.0, &[], &p());
        assert!((m.v - 0.8).abs() < 1e-12);
        assert!((m.dx - 0.4).abs() < 1e-12);
    }

    #[test]
    fn holds_civil_limit() {
        let m = kinematic_step(25.0, 5000.0, 25.0, &[], &p());
        assert_eq!(m.v, 25.0);
        assert_eq!(m.dx, 25.0);
    }

    #[test]
    fn brakes_when_curve_exceeds_authority() {
        let m = kinematic_step(10.0, 20.0, 25.0, &[], &p());
        assert!((m.v - 9.0).abs() < 1e-12);
        assert!((m.dx - 9.5).abs() < 1e-12);
    }

    #[test]
    fn zero_authority_means_no_motion() {
        let m = kinematic_step(0.0, 0.0, 25.0, &[], &p());
        assert_eq!((m.v, m.dx), (0.0, 0.0));
    }

    #[test]
    fn stops_exactly_at_authority_end() {
        let params = p();
        for start in [50.0, 333.0, 1000.0, 2600.0] {
            let (mut v, mut left) = (0.0, start);
            let mut steps = 0;
            while steps < 2000 {
                let m = kinematic_step(v, left, 25.0, &[], &params);
                assert!(m.dx <= left + 1e-12);
                left -= m.dx;
                v = m.v;
                steps += 1;
                if v == 0.0 && left == 0.0 {
                    break;
                }
            }
            assert_eq!(left, 0.0, "start {start}");
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn slows_for_lower_limit_ahead() {
        let params = p();
        let (mut v, mut d) = (25.0, 600.0);
        while d > 0.0 {
            let m = kinematic_step(v, 5000.0, 25.0, &[SpeedTarget { distance: d, vmax: 10.0 }], &params);
            v = m.v;
            d -= m.dx;
        }
        assert!(v <= 10.0 + 1e-9, "entered at {v}");
    }
}
