use nalgebra::{UnitQuaternion, Vector3};

use super::model::RobotModel;
use crate::error::{Error, Result};

/// Full state of the floating base and its legs after a control step.
#[derive(Clone, Debug, PartialEq)]
pub struct RobotState {
    pub base_position: Vector3<f64>,
    pub base_orientation: UnitQuaternion<f64>,
    /// World frame.
    pub base_linear_velocity: Vector3<f64>,
    /// World frame.
    pub base_angular_velocity: Vector3<f64>,
    pub joint_positions: Vec<f64>,
    pub joint_velocities: Vec<f64>,
    pub joint_accelerations: Vec<f64>,
    pub joint_torques: Vec<f64>,
    pub foot_positions: Vec<Vector3<f64>>,
    pub foot_velocities: Vec<Vector3<f64>>,
    pub foot_contact_forces: Vec<Vector3<f64>>,
    /// Terrain normal used for each foot's last contact force.
    pub foot_contact_normals: Vec<Vector3<f64>>,
    pub foot_contacts: Vec<bool>,
    /// Stick point of each foot's tangential spring while in contact.
    pub foot_anchors: Vec<Option<Vector3<f64>>>,
    pub collision_count: usize,
    pub base_collision: bool,
    pub time: f64,
}

impl RobotState {
    /// Robot at rest with joints at `joint_positions`, base placed at `base_position`.
    pub fn at_rest(model: &RobotModel, base_position: Vector3<f64>, yaw: f64, joint_positions: Vec<f64>) -> Self {
        let n = model.joint_count();
        let legs = model.leg_count;
        let mut s = Self {
            base_position,
            base_orientation: UnitQuaternion::from_euler_angles(0.0, 0.0, yaw),
            base_linear_velocity: Vector3::zeros(),
            base_angular_velocity: Vector3::zeros(),
            joint_positions,
            joint_velocities: vec![0.0; n],
            joint_accelerations: vec![0.0; n],
            joint_torques: vec![0.0; n],
            foot_positions: vec![Vector3::zeros(); legs],
            foot_velocities: vec![Vector3::zeros(); legs],
            foot_contact_forces: vec![Vector3::zeros(); legs],
            foot_contact_normals: vec![Vector3::z(); legs],
            foot_contacts: vec![false; legs],
            foot_anchors: vec![None; legs],
            collision_count: 0,
            base_collision: false,
            time: 0.0,
        };
        s.update_feet(model);
        s
    }

    /// Nominal stance with feet resting on ground at height `ground`.
    pub fn standing(model: &RobotModel, x: f64, y: f64, ground: f64, yaw: f64) -> Self {
        let z = ground + model.nominal_standing_height();
        Self::at_rest(model, Vector3::new(x, y, z), yaw, model.nominal_joint_positions.clone())
    }

    pub fn leg_joints(&self, leg: usize) -> &[f64] {
        &self.joint_positions[3 * leg..3 * leg + 3]
    }

    /// Recomputes foot positions and velocities from the base and joint state.
    pub fn update_feet(&mut self, model: &RobotModel) {
        let r = self.base_orientation.to_rotation_matrix();
        for leg in 0..model.leg_count {
            let q = &self.joint_positions[3 * leg..3 * leg + 3];
            let qd = Vector3::new(
                self.joint_velocities[3 * leg],
                self.joint_velocities[3 * leg + 1],
                self.joint_velocities[3 * leg + 2],
            );
            let local = model.hip(leg) + model.leg_fk(leg, q);
            let arm = r * local;
            self.foot_positions[leg] = self.base_position + arm;
            self.foot_velocities[leg] = self.base_linear_velocity
                + self.base_angular_velocity.cross(&arm)
                + r * (model.leg_jacobian(leg, q) * qd);
        }
    }

    pub fn body_linear_velocity(&self) -> Vector3<f64> {
        self.base_orientation.inverse_transform_vector(&self.base_linear_velocity)
    }

    pub fn body_angular_velocity(&self) -> Vector3<f64> {
        self.base_orientation.inverse_transform_vector(&self.base_angular_velocity)
    }

    pub fn projected_gravity(&self) -> Vector3<f64> {
        super::projected_gravity(&self.base_orientation)
    }

    /// (roll, pitch, yaw), XYZ Euler convention.
    pub fn euler(&self) -> (f64, f64, f64) {
        self.base_orientation.euler_angles()
    }

    pub fn yaw(&self) -> f64 {
        let v = self.base_orientation.transform_vector(&Vector3::x());
        v.y.atan2(v.x)
    }

    /// Rejects a state holding NaN or infinity, naming the first bad field.
    pub fn check_finite(&self) -> Result<()> {
        let vecs: [(&str, &Vector3<f64>); 3] = [
            ("base_position", &self.base_position),
            ("base_linear_velocity", &self.base_linear_velocity),
            ("base_angular_velocity", &self.base_angular_velocity),
        ];
        for (name, v) in vecs {
            if !v.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite(name.into()));
            }
        }
        if !self.base_orientation.coords.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("base_orientation".into()));
        }
        let lists: [(&str, &[f64]); 4] = [
            ("joint_positions", &self.joint_positions),
            ("joint_velocities", &self.joint_velocities),
            ("joint_accelerations", &self.joint_accelerations),
            ("joint_torques", &self.joint_torques),
        ];
        for (name, v) in lists {
            if !v.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite(name.into()));
            }
        }
        let feet: [(&str, &[Vector3<f64>]); 3] = [
            ("foot_positions", &self.foot_positions),
            ("foot_velocities", &self.foot_velocities),
            ("foot_contact_forces", &self.foot_contact_forces),
        ];
        for (name, v) in feet {
            if !v.iter().all(|f| f.iter().all(|x| x.is_finite())) {
                return Err(Error::NonFinite(name.into()));
            }
        }
        Ok(())
    }
}
