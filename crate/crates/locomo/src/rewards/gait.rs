use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::dynamics::{RobotModel, RobotState};
use crate::error::{Error, Result};

/// Width of the smoothstep band around each contact transition, phase units.
pub const TRANSITION_BAND: f64 = 0.05;

/// Periodic contact schedule: per-foot phase `frac(t / period + offset)`,
/// stance while the phase is below the duty factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaitSchedule {
    pub period: f64,
    pub duty_factor: f64,
    pub offsets: Vec<f64>,
}

impl GaitSchedule {
    /// Two alternating groups of three legs: {LF, LH, RM} and {LM, RF, RH}.
    pub fn tripod() -> Self {
        Self { period: 0.5, duty_factor: 0.5, offsets: vec![0.0, 0.5, 0.0, 0.5, 0.0, 0.5] }
    }

    /// Diagonal pairs {LF, RH} and {LH, RF}.
    pub fn trot() -> Self {
        Self { period: 0.5, duty_factor: 0.5, offsets: vec![0.0, 0.5, 0.5, 0.0] }
    }

    pub fn for_model(model: &RobotModel) -> Self {
        if model.leg_count == 6 {
            Self::tripod()
        } else {
            Self::trot()
        }
    }

    pub fn validate(&self, legs: usize) -> Result<()> {
        if self.offsets.len() != legs {
            return Err(Error::InvalidArgument(format!("gait has {} offsets for {legs} feet", self.offsets.len())));
        }
        if !(self.period > 0.0) || !(0.0..=1.0).contains(&self.duty_factor) || self.offsets.iter().any(|o| !(0.0..1.0).contains(o)) {
            return Err(Error::InvalidArgument(format!("invalid gait schedule {self:?}")));
        }
        Ok(())
    }

    pub fn stance_duration(&self) -> f64 {
        self.duty_factor * self.period
    }

    pub fn phase(&self, foot: usize, t: f64) -> f64 {
        let p = t / self.period + self.offsets[foot];
        p - p.floor()
    }

    /// Position of the foot along its stance sweep, from +0.5 at touchdown
    /// to -0.5 at lift-off and back during swing.
    pub fn sweep(&self, foot: usize, t: f64) -> f64 {
        let phi = self.phase(foot, t);
        let d = self.duty_factor;
        if phi < d {
            0.5 - phi / d
        } else {
            -0.5 + (phi - d) / (1.0 - d)
        }
    }
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// Offset of `u` from `edge` on the unit circle, in (-0.5, 0.5].
fn circular_offset(u: f64, edge: f64) -> f64 {
    let mut e = u - edge;
    e -= e.round();
    if e <= -0.5 {
        e + 1.0
    } else {
        e
    }
}

/// Commanded contact state: 1 stance, 0 swing, smoothstep across each edge.
pub fn contact_schedule(schedule: &GaitSchedule, foot: usize, t: f64) -> f64 {
    let d = schedule.duty_factor;
    if d <= 0.0 {
        return 0.0;
    }
    if d >= 1.0 {
        return 1.0;
    }
    let u = schedule.phase(foot, t);
    let b = TRANSITION_BAND / 2.0;
    let rise = circular_offset(u, 0.0);
    if rise.abs() < b {
        return smoothstep((rise + b) / (2.0 * b));
    }
    let fall = circular_offset(u, d);
    if fall.abs() < b {
        return 1.0 - smoothstep((fall + b) / (2.0 * b));
    }
    if u < d {
        1.0
    } else {
        0.0
    }
}

/// Raibert foothold targets in the yaw-aligned base frame, relative to the base.
pub fn raibert_targets(model: &RobotModel, schedule: &GaitSchedule, command: [f64; 3], stance_width: f64, t: f64) -> Vec<Vector2<f64>> {
    let v = Vector2::new(command[0], command[1]);
    let wz = command[2];
    (0..model.leg_count)
        .map(|leg| {
            let nominal = Vector2::new(model.hip_offsets[leg][0], model.side(leg) * stance_width / 2.0);
            let spin = Vector2::new(-wz * nominal.y, wz * nominal.x);
            nominal + (v + spin) * (schedule.sweep(leg, t) * schedule.stance_duration())
        })
        .collect()
}

/// Foot positions relative to the base, rotated into the yaw-aligned frame.
pub fn feet_in_yaw_frame(state: &RobotState) -> Vec<Vector2<f64>> {
    let (s, c) = state.yaw().sin_cos();
    state
        .foot_positions
        .iter()
        .map(|p| {
            let d = p - state.base_position;
            Vector2::new(c * d.x + s * d.y, -s * d.x + c * d.y)
        })
        .collect()
}
