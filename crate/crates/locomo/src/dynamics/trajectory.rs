use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::model::RobotModel;
use super::state::RobotState;
use crate::error::{Error, Result};

/// Column names: time, base pose (position, quaternion w x y z), world twists,
/// q, q̇, τ, foot forces, contact flags.
pub fn trajectory_header(model: &RobotModel) -> Vec<String> {
    let mut cols: Vec<String> = ["time", "px", "py", "pz", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let n = model.joint_count();
    for prefix in ["q", "dq", "tau"] {
        cols.extend((0..n).map(|j| format!("{prefix}{j}")));
    }
    for leg in 0..model.leg_count {
        cols.extend(["x", "y", "z"].iter().map(|a| format!("f{leg}{a}")));
    }
    cols.extend((0..model.leg_count).map(|leg| format!("contact{leg}")));
    cols
}

pub fn trajectory_row(state: &RobotState) -> Vec<f64> {
    let q = state.base_orientation.quaternion();
    let mut row = vec![state.time];
    row.extend(state.base_position.iter());
    row.extend([q.w, q.i, q.j, q.k]);
    row.extend(state.base_linear_velocity.iter());
    row.extend(state.base_angular_velocity.iter());
    row.extend(&state.joint_positions);
    row.extend(&state.joint_velocities);
    row.extend(&state.joint_torques);
    for f in &state.foot_contact_forces {
        row.extend(f.iter());
    }
    row.extend(state.foot_contacts.iter().map(|&c| c as u8 as f64));
    row
}

pub fn trajectory_csv(model: &RobotModel, states: &[RobotState]) -> String {
    let mut out = trajectory_header(model).join(",");
    out.push('\n');
    for s in states {
        let row = trajectory_row(s);
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_trajectory_csv(path: &Path, model: &RobotModel, states: &[RobotState]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(trajectory_csv(model, states).as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_rows_align() {
        let m = RobotModel::hexapod();
        let s = RobotState::standing(&m, 0.0, 0.0, 0.0, 0.0);
        let header = trajectory_header(&m);
        assert_eq!(header.len(), 1 + 7 + 6 + 18 * 3 + 18 + 6);
        assert_eq!(trajectory_row(&s).len(), header.len());
        let csv = trajectory_csv(&m, &[s.clone(), s]);
        assert_eq!(csv.lines().count(), 3);
    }
}
