use std::f64::consts::TAU;

use crate::dynamics::{DynamicsRandomization, RobotModel, RobotState};
use crate::terrain::SCAN_LEN;

pub const COMMAND_SCALE: [f64; 3] = [2.0, 2.0, 0.25];
pub const JOINT_VELOCITY_SCALE: f64 = 0.05;
pub const LIN_VEL_SCALE: f64 = 2.0;
pub const ANG_VEL_SCALE: f64 = 0.25;
pub const FORCE_SCALE: f64 = 0.02;
pub const SCAN_SCALE: f64 = 5.0;
pub const CLOCK_DIM: usize = 2;
/// Stage-I extras after `o^p`: body angular velocity and the gait clock.
pub const GAIT_EXTRA_DIM: usize = 3 + CLOCK_DIM;

/// `o^p`: projected gravity, command, joint offsets, joint velocities, previous action.
pub fn proprio_dim(model: &RobotModel) -> usize {
    6 + 3 * model.joint_count()
}

/// `s^p`: twists, nine dynamics parameters, foot forces and contacts,
/// collision count, base height and the last push.
pub fn privileged_dim(model: &RobotModel) -> usize {
    6 + 9 + 4 * model.leg_count + 3
}

/// `s^AMP`: joint positions and velocities, base linear and angular velocity.
pub fn amp_dim(model: &RobotModel) -> usize {
    2 * model.joint_count() + 6
}

pub fn scan_dim() -> usize {
    SCAN_LEN
}

pub fn proprioception(model: &RobotModel, state: &RobotState, command: [f64; 3], prev_action: &[f64], out: &mut Vec<f64>) {
    out.extend(state.projected_gravity().iter());
    out.extend(command.iter().zip(COMMAND_SCALE).map(|(c, s)| c * s));
    out.extend(state.joint_positions.iter().zip(&model.nominal_joint_positions).map(|(q, n)| q - n));
    out.extend(state.joint_velocities.iter().map(|v| v * JOINT_VELOCITY_SCALE));
    out.extend(prev_action);
}

pub fn body_rates(state: &RobotState, out: &mut Vec<f64>) {
    out.extend(state.body_angular_velocity().iter().map(|w| w * ANG_VEL_SCALE));
}

pub fn gait_clock(t: f64, period: f64, out: &mut Vec<f64>) {
    let phase = TAU * t / period;
    out.extend([phase.sin(), phase.cos()]);
}

pub fn scan_features(scan: &[f64], desired_height: f64, out: &mut Vec<f64>) {
    out.extend(scan.iter().map(|h| (h - desired_height).clamp(-1.0, 1.0) * SCAN_SCALE));
}

#[allow(clippy::too_many_arguments)]
pub fn privileged(
    state: &RobotState,
    rand: &DynamicsRandomization,
    base_height: f64,
    push: f64,
    out: &mut Vec<f64>,
) {
    out.extend(state.body_linear_velocity().iter().map(|v| v * LIN_VEL_SCALE));
    out.extend(state.body_angular_velocity().iter().map(|v| v * ANG_VEL_SCALE));
    out.push(rand.ground_friction);
    out.push(rand.link_mass_scale - 1.0);
    out.push(rand.payload_mass / 5.0);
    out.extend(rand.payload_offset.iter().map(|o| o * 10.0));
    out.push(rand.motor_strength_scale - 1.0);
    out.push(rand.kp_scale - 1.0);
    out.push(rand.kd_scale - 1.0);
    for f in &state.foot_contact_forces {
        out.extend(f.iter().map(|v| v * FORCE_SCALE));
    }
    out.extend(state.foot_contacts.iter().map(|&c| c as u8 as f64));
    out.push(state.collision_count as f64);
    out.push(base_height);
    out.push(push);
}

pub fn amp_state(state: &RobotState, out: &mut Vec<f64>) {
    out.extend(&state.joint_positions);
    out.extend(&state.joint_velocities);
    out.extend(state.body_linear_velocity().iter());
    out.extend(state.body_angular_velocity().iter());
}
