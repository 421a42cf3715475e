//! Intelligent Driver Model car-following.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdmParams {
    pub desired_speed_mps: f64,
    pub time_headway_s: f64,
    pub max_accel_mps2: f64,
    pub comfortable_decel_mps2: f64,
    pub min_gap_m: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            desired_speed_mps: 13.89,
            time_headway_s: 1.2,
            max_accel_mps2: 2.0,
            comfortable_decel_mps2: 3.0,
            min_gap_m: 2.0,
        }
    }
}

impl IdmParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("desired_speed_mps", self.desired_speed_mps),
            ("time_headway_s", self.time_headway_s),
            ("max_accel_mps2", self.max_accel_mps2),
            ("comfortable_decel_mps2", self.comfortable_decel_mps2),
            ("min_gap_m", self.min_gap_m),
        ];
        for (name, value) in fields {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidConfig(format!("idm.{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }

    /// Desired dynamic gap `s*`. The velocity-dependent part is floored at zero
    /// so a much faster leader never induces braking.
    pub fn desired_gap(&self, v: f64, v_lead: f64) -> f64 {
        let interaction = v * self.time_headway_s
            + v * (v - v_lead) / (2.0 * (self.max_accel_mps2 * self.comfortable_decel_mps2).sqrt());
        self.min_gap_m + interaction.max(0.0)
    }

    /// Acceleration for speed `v` behind a leader at `gap_m` moving at `v_lead`.
    /// Pass `f64::INFINITY` for a free road.
    pub fn accel(&self, v: f64, v_lead: f64, gap_m: f64) -> Result<f64> {
        if !(gap_m > 0.0) {
            return Err(Error::NonPositiveGap(gap_m));
        }
        let free = 1.0 - (v / self.desired_speed_mps).powi(4);
        let interaction = if gap_m.is_infinite() {
            0.0
        } else {
            (self.desired_gap(v, v_lead) / gap_m).powi(2)
        };
        Ok(self.max_accel_mps2 * (free - interaction))
    }

    /// Largest speed at which a vehicle placed `gap_m` behind a leader moving at
    /// `v_lead` is at or beyond its desired gap; capped at the desired speed.
    pub fn safe_insertion_speed(&self, v_lead: f64, gap_m: f64) -> f64 {
        let slack = gap_m - self.min_gap_m;
        if slack <= 0.0 {
            return 0.0;
        }
        let c = 2.0 * (self.max_accel_mps2 * self.comfortable_decel_mps2).sqrt();
        // v^2 / c + v (T - v_lead / c) - slack <= 0
        let b = self.time_headway_s - v_lead / c;
        let root = 0.5 * c * (-b + (b * b + 4.0 * slack / c).sqrt());
        root.clamp(0.0, self.desired_speed_mps)
    }
}

/// Ballistic update over `dt`. A vehicle that would reverse stops exactly
/// where its speed reaches zero. Returns `(distance, new_speed)`.
pub fn ballistic_update(v: f64, accel: f64, dt: f64) -> (f64, f64) {
    let v_new = v + accel * dt;
    if v_new < 0.0 {
        (-v * v / (2.0 * accel), 0.0)
    } else {
        (0.5 * (v + v_new) * dt, v_new)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn free_flow_equilibrium() {
        let p = IdmParams::default();
        assert_abs_diff_eq!(p.accel(p.desired_speed_mps, 0.0, f64::INFINITY).unwrap(), 0.0);
    }

    #[test]
    fn start_from_rest() {
        let p = IdmParams::default();
        assert_abs_diff_eq!(p.accel(0.0, 0.0, f64::INFINITY).unwrap(), 2.0);
    }

    #[test]
    fn standing_equilibrium_at_min_gap() {
        let p = IdmParams::default();
        assert_abs_diff_eq!(p.accel(0.0, 0.0, p.min_gap_m).unwrap(), 0.0);
    }

    #[test]
    fn rejects_non_positive_gap() {
        let p = IdmParams::default();
        assert!(matches!(p.accel(1.0, 0.0, 0.0), Err(Error::NonPositiveGap(_))));
        assert!(p.accel(1.0, 0.0, -3.0).is_err());
        assert!(p.accel(1.0, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn insertion_speed_meets_desired_gap() {
        let p = IdmParams::default();
        for &(v_lead, gap) in &[(0.0, 2.0), (0.0, 30.0), (13.89, 2.5), (5.0, 10.0), (13.89, 80.0)] {
            let v = p.safe_insertion_speed(v_lead, gap);
            assert!(v >= 0.0 && v <= p.desired_speed_mps);
            if v < p.desired_speed_mps {
                assert_abs_diff_eq!(p.desired_gap(v, v_lead).max(p.min_gap_m), gap.max(p.min_gap_m), epsilon = 1e-9);
            } else {
                assert!(p.desired_gap(v, v_lead) <= gap + 1e-9);
            }
        }
        assert_eq!(p.safe_insertion_speed(0.0, 2.0), 0.0);
    }

    #[test]
    fn ballistic_update_never_reverses() {
        let (dx, v) = ballistic_update(2.0, -10.0, 0.5);
        assert_eq!(v, 0.0);
        assert_abs_diff_eq!(dx, 0.2);
        let (dx, v) = ballistic_update(0.0, 2.0, 0.5);
        assert_abs_diff_eq!(v, 1.0);
        assert_abs_diff_eq!(dx, 0.25);
    }
}
