//! Constant-acceleration move profiles.

/// Velocity shape of a single move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileShape {
    /// Too short to reach the speed limit; accelerate then decelerate.
    Triangular,
    /// Accelerate, cruise at the speed limit, decelerate.
    Trapezoidal,
}

/// Rest-to-rest motion over `distance` with speed limit `v_max` and constant
/// acceleration `accel`. Works for linear (m, m/s) and angular (rad, rad/s)
/// moves alike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionProfile {
    pub distance: f64,
    pub accel: f64,
    pub shape: ProfileShape,
    pub peak_speed: f64,
    pub t_accel: f64,
    pub t_cruise: f64,
}

impl MotionProfile {
    /// A distance of exactly `v_max²/accel` is classified triangular.
    pub fn new(distance: f64, v_max: f64, accel: f64) -> Self {
        assert!(distance >= 0.0 && v_max > 0.0 && accel > 0.0);
        if distance <= v_max * v_max / accel {
            let peak_speed = (accel * distance).sqrt().min(v_max);
            MotionProfile {
                distance,
                accel,
                shape: ProfileShape::Triangular,
                peak_speed,
                t_accel: peak_speed / accel,
                t_cruise: 0.0,
            }
        } else {
            let t_accel = v_max / accel;
            let ramp = 0.5 * accel * t_accel * t_accel;
            MotionProfile {
                distance,
                accel,
                shape: ProfileShape::Trapezoidal,
                peak_speed: v_max,
                t_accel,
                t_cruise: (distance - 2.0 * ramp) / v_max,
            }
        }
    }

    pub fn duration(&self) -> f64 {
        2.0 * self.t_accel + self.t_cruise
    }

    /// Travelled distance and speed at time `t` (clamped to the move).
    pub fn sample(&self, t: f64) -> (f64, f64) {
        let total = self.duration();
        let t = t.clamp(0.0, total);
        let a = self.accel;
        if t < self.t_accel {
            (0.5 * a * t * t, a * t)
        } else if t < self.t_accel + self.t_cruise {
            let ramp = 0.5 * a * self.t_accel * self.t_accel;
            (ramp + self.peak_speed * (t - self.t_accel), self.peak_speed)
        } else {
            let left = total - t;
            (self.distance - 0.5 * a * left * left, a * left)
        }
    }
}
