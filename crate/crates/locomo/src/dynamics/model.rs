use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kinematic description of a floating base with identical three-joint legs.
///
/// Legs are ordered left side front to back, then right side front to back.
/// Each leg has an abduction joint about the body x axis, then hip and knee
/// pitch joints about the y axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    pub name: String,
    pub leg_count: usize,
    pub joints_per_leg: usize,
    /// Hip position of each leg in the base frame, m.
    pub hip_offsets: Vec<[f64; 3]>,
    /// `[abduction offset, thigh, shank]`, m.
    pub link_lengths: Vec<f64>,
    pub base_mass: f64,
    /// Row-major 3x3 inertia about the center of mass, kg·m².
    pub base_inertia: [[f64; 3]; 3],
    /// Half extents of the base collision box, m.
    pub base_half_extents: [f64; 3],
    pub nominal_joint_positions: Vec<f64>,
    pub joint_limits: Vec<[f64; 2]>,
    pub torque_limit: f64,
    pub joint_velocity_limit: f64,
    pub foot_force_limit: f64,
    /// Reflected inertia driving each joint's second-order response, kg·m².
    pub joint_inertia: f64,
    /// Base height above ground the regularizer steers toward, m.
    pub desired_base_height: f64,
    /// Lateral distance between left and right footholds, m.
    pub stance_width: f64,
}

impl RobotModel {
    /// Six-legged robot with 18 joints.
    pub fn hexapod() -> Self {
        let xs = [0.18, 0.0, -0.18];
        let mut hips = Vec::new();
        for side in [1.0, -1.0] {
            for x in xs {
                hips.push([x, side * 0.08, 0.0]);
            }
        }
        let nominal: Vec<f64> = (0..6).flat_map(|_| [0.0, 0.7, -1.4]).collect();
        let limits = (0..6)
            .flat_map(|_| [[-0.8, 0.8], [-1.2, 2.2], [-2.6, -0.5]])
            .collect();
        Self {
            name: "hexapod".into(),
            leg_count: 6,
            joints_per_leg: 3,
            hip_offsets: hips,
            link_lengths: vec![0.05, 0.165, 0.165],
            base_mass: 12.0,
            base_inertia: [[0.16, 0.0, 0.0], [0.0, 0.4, 0.0], [0.0, 0.0, 0.5]],
            base_half_extents: [0.24, 0.08, 0.03],
            nominal_joint_positions: nominal,
            joint_limits: limits,
            torque_limit: 33.5,
            joint_velocity_limit: 21.0,
            foot_force_limit: 100.0,
            joint_inertia: 0.05,
            desired_base_height: 0.25,
            stance_width: 0.26,
        }
    }

    /// Four-legged robot with 12 joints, sized like a small commercial quadruped.
    pub fn quadruped() -> Self {
        let hips = vec![
            [0.1881, 0.04675, 0.0],
            [-0.1881, 0.04675, 0.0],
            [0.1881, -0.04675, 0.0],
            [-0.1881, -0.04675, 0.0],
        ];
        let nominal: Vec<f64> = (0..4).flat_map(|_| [0.0, 0.8, -1.5]).collect();
        let limits = (0..4)
            .flat_map(|_| [[-0.8, 0.8], [-1.0, 3.0], [-2.7, -0.9]])
            .collect();
        Self {
            name: "quadruped".into(),
            leg_count: 4,
            joints_per_leg: 3,
            hip_offsets: hips,
            link_lengths: vec![0.028, 0.213, 0.213],
            base_mass: 12.0,
            base_inertia: [[0.1, 0.0, 0.0], [0.0, 0.25, 0.0], [0.0, 0.0, 0.3]],
            base_half_extents: [0.19, 0.05, 0.05],
            nominal_joint_positions: nominal,
            joint_limits: limits,
            torque_limit: 33.5,
            joint_velocity_limit: 21.0,
            foot_force_limit: 200.0,
            joint_inertia: 0.05,
            desired_base_height: 0.3,
            stance_width: 0.15,
        }
    }

    pub fn joint_count(&self) -> usize {
        self.leg_count * self.joints_per_leg
    }

    pub fn action_dim(&self) -> usize {
        self.joint_count()
    }

    /// +1 for left legs, -1 for right legs.
    pub fn side(&self, leg: usize) -> f64 {
        if self.hip_offsets[leg][1] >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn inertia_matrix(&self) -> Matrix3<f64> {
        let i = &self.base_inertia;
        Matrix3::new(
            i[0][0], i[0][1], i[0][2], i[1][0], i[1][1], i[1][2], i[2][0], i[2][1], i[2][2],
        )
    }

    pub fn hip(&self, leg: usize) -> Vector3<f64> {
        Vector3::from(self.hip_offsets[leg])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(format!("robot model '{}': {m}", self.name)));
        if self.joints_per_leg != 3 {
            return bad(format!("joints_per_leg must be 3, got {}", self.joints_per_leg));
        }
        let n = self.joint_count();
        if self.hip_offsets.len() != self.leg_count {
            return bad(format!("{} hip offsets for {} legs", self.hip_offsets.len(), self.leg_count));
        }
        if self.nominal_joint_positions.len() != n || self.joint_limits.len() != n {
            return bad(format!("expected {n} nominal positions and limits"));
        }
        if self.link_lengths.len() != 3 || self.link_lengths[1] <= 0.0 || self.link_lengths[2] <= 0.0 || self.link_lengths[0] < 0.0 {
            return bad("thigh and shank lengths must be positive".into());
        }
        if self.base_mass <= 0.0 || self.joint_inertia <= 0.0 {
            return bad("masses must be positive".into());
        }
        let inertia = self.inertia_matrix();
        if (inertia - inertia.transpose()).abs().max() > 1e-12 || inertia.symmetric_eigenvalues().min() <= 0.0 {
            return bad("inertia must be symmetric positive-definite".into());
        }
        for (j, (lim, q)) in self.joint_limits.iter().zip(&self.nominal_joint_positions).enumerate() {
            if lim[0] >= lim[1] || *q < lim[0] || *q > lim[1] {
                return bad(format!("joint {j}: nominal {q} outside limits {lim:?}"));
            }
        }
        if self.torque_limit <= 0.0 || self.joint_velocity_limit <= 0.0 || self.foot_force_limit <= 0.0 {
            return bad("limits must be positive".into());
        }
        Ok(())
    }

    /// Loads a model from a TOML key/value file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: RobotModel = toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model serializes")
    }

    /// Foot position relative to the hip, in the base frame.
    pub fn leg_fk(&self, leg: usize, q: &[f64]) -> Vector3<f64> {
        let (l0, l1, l2) = (self.link_lengths[0], self.link_lengths[1], self.link_lengths[2]);
        let (abd, hip, knee) = (q[0], q[1], q[2]);
        let x = -l1 * hip.sin() - l2 * (hip + knee).sin();
        let y = self.side(leg) * l0;
        let z = -l1 * hip.cos() - l2 * (hip + knee).cos();
        let (sa, ca) = abd.sin_cos();
        Vector3::new(x, y * ca - z * sa, y * sa + z * ca)
    }

    /// Columns are d(foot)/d(q_abd, q_hip, q_knee), base frame.
    pub fn leg_jacobian(&self, leg: usize, q: &[f64]) -> Matrix3<f64> {
        let (l0, l1, l2) = (self.link_lengths[0], self.link_lengths[1], self.link_lengths[2]);
        let (abd, hip, knee) = (q[0], q[1], q[2]);
        let (s1, c1) = hip.sin_cos();
        let (s12, c12) = (hip + knee).sin_cos();
        let y = self.side(leg) * l0;
        let z = -l1 * c1 - l2 * c12;
        let (sa, ca) = abd.sin_cos();
        let dx_hip = -l1 * c1 - l2 * c12;
        let dz_hip = l1 * s1 + l2 * s12;
        let dx_knee = -l2 * c12;
        let dz_knee = l2 * s12;
        Matrix3::new(
            0.0,
            dx_hip,
            dx_knee,
            -y * sa - z * ca,
            -dz_hip * sa,
            -dz_knee * sa,
            y * ca - z * sa,
            dz_hip * ca,
            dz_knee * ca,
        )
    }

    /// Knee position relative to the hip, in the base frame.
    pub fn knee_fk(&self, leg: usize, q: &[f64]) -> Vector3<f64> {
        let (l0, l1) = (self.link_lengths[0], self.link_lengths[1]);
        let x = -l1 * q[1].sin();
        let y = self.side(leg) * l0;
        let z = -l1 * q[1].cos();
        let (sa, ca) = q[0].sin_cos();
        Vector3::new(x, y * ca - z * sa, y * sa + z * ca)
    }

    /// Height of the base origin above flat ground with joints at nominal.
    pub fn nominal_standing_height(&self) -> f64 {
        let q = &self.nominal_joint_positions[0..3];
        -(self.hip(0).z + self.leg_fk(0, q).z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_models_validate() {
        for m in [RobotModel::hexapod(), RobotModel::quadruped()] {
            m.validate().unwrap();
        }
        assert_eq!(RobotModel::hexapod().action_dim(), 18);
        assert_eq!(RobotModel::quadruped().action_dim(), 12);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let m = RobotModel::hexapod();
        for leg in [0, 4] {
            let q = [0.2, 0.6, -1.3];
            let j = m.leg_jacobian(leg, &q);
            for k in 0..3 {
                let mut up = q;
                let mut dn = q;
                up[k] += 1e-6;
                dn[k] -= 1e-6;
                let fd = (m.leg_fk(leg, &up) - m.leg_fk(leg, &dn)) / 2e-6;
                assert!((fd - j.column(k)).norm() < 1e-8, "leg {leg} joint {k}");
            }
        }
    }

    #[test]
    fn toml_round_trip() {
        let m = RobotModel::quadruped();
        let back: RobotModel = toml::from_str(&m.to_toml()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn bad_inertia_rejected() {
        let mut m = RobotModel::hexapod();
        m.base_inertia[1][1] = -1.0;
        assert!(m.validate().is_err());
        let mut m = RobotModel::hexapod();
        m.link_lengths[1] = 0.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn hexapod_stance_width_matches_nominal_feet() {
        let m = RobotModel::hexapod();
        let q = &m.nominal_joint_positions[0..3];
        let left = m.hip(0) + m.leg_fk(0, q);
        let right = m.hip(3) + m.leg_fk(3, q);
        assert!(((left.y - right.y) - m.stance_width).abs() < 1e-12);
        assert!((m.nominal_standing_height() - 0.2524).abs() < 1e-3);
    }
}
