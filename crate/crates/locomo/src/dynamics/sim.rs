use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::model::RobotModel;
use super::randomization::DynamicsRandomization;
use super::state::RobotState;
use crate::error::{Error, Result};

/// Ground surface queried by the contact model.
pub trait Heightfield {
    /// Height at `(x, y)` and the upward unit surface normal there.
    fn surface(&self, x: f64, y: f64) -> (f64, Vector3<f64>);

    fn height(&self, x: f64, y: f64) -> f64 {
        self.surface(x, y).0
    }
}

/// Infinite horizontal plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlatGround {
    pub height: f64,
}

impl Heightfield for FlatGround {
    fn surface(&self, _x: f64, _y: f64) -> (f64, Vector3<f64>) {
        (self.height, Vector3::z())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub control_dt: f64,
    pub physics_substeps: usize,
    /// Normal spring, N/m.
    pub contact_stiffness: f64,
    /// Normal damper, N·s/m.
    pub contact_damping: f64,
    /// Tangential stick spring, N/m.
    pub friction_stiffness: f64,
    /// Tangential damper, N·s/m.
    pub friction_damping: f64,
    pub gravity: f64,
    pub kp: f64,
    pub kd: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            control_dt: 0.02,
            physics_substeps: 4,
            contact_stiffness: 5000.0,
            contact_damping: 100.0,
            friction_stiffness: 2000.0,
            friction_damping: 20.0,
            gravity: 9.81,
            kp: 80.0,
            kd: 1.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.physics_substeps == 0 {
            return Err(Error::InvalidArgument("physics_substeps must be at least 1".into()));
        }
        let positive = [self.control_dt, self.contact_stiffness];
        let non_negative = [
            self.contact_damping,
            self.friction_stiffness,
            self.friction_damping,
            self.gravity,
            self.kp,
            self.kd,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || non_negative.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument(format!("invalid simulation constants {self:?}")));
        }
        Ok(())
    }
}

/// PD law with zero target velocity, saturated at `torque_limit`.
pub fn pd_torque(q_target: &[f64], q: &[f64], qd: &[f64], kp: f64, kd: f64, torque_limit: f64) -> Vec<f64> {
    q_target
        .iter()
        .zip(q)
        .zip(qd)
        .map(|((t, q), v)| (kp * (t - q) - kd * v).clamp(-torque_limit, torque_limit))
        .collect()
}

/// World gravity direction `(0, 0, -1)` expressed in the body frame.
pub fn projected_gravity(orientation: &UnitQuaternion<f64>) -> Vector3<f64> {
    let q = orientation.quaternion();
    let norm = q.norm();
    let unit = if (norm - 1.0).abs() > 1e-9 {
        log::warn!("projected_gravity: renormalizing quaternion of norm {norm}");
        UnitQuaternion::new_normalize(*q)
    } else {
        *orientation
    };
    unit.inverse_transform_vector(&-Vector3::z())
}

/// Contact force on one foot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FootContact {
    pub force: Vector3<f64>,
    pub normal_force: f64,
    /// Updated stick point, `None` once the foot leaves the ground.
    pub anchor: Option<Vector3<f64>>,
}

/// Penalty contact: spring-damper along `normal`, stick spring plus damper
/// tangentially, capped by the Coulomb cone `mu * f_n`.
pub fn contact_force(
    foot: Vector3<f64>,
    foot_velocity: Vector3<f64>,
    ground_height: f64,
    normal: Vector3<f64>,
    anchor: Option<Vector3<f64>>,
    mu: f64,
    cfg: &SimConfig,
) -> FootContact {
    let depth = (ground_height - foot.z) * normal.z;
    if depth <= 0.0 {
        return FootContact { force: Vector3::zeros(), normal_force: 0.0, anchor: None };
    }
    let anchor = anchor.unwrap_or(foot);
    let vn = foot_velocity.dot(&normal);
    let fn_ = (cfg.contact_stiffness * depth - cfg.contact_damping * vn).max(0.0);
    let slip = foot - anchor;
    let slip_t = slip - normal * slip.dot(&normal);
    let vt = foot_velocity - normal * vn;
    let mut ft = -cfg.friction_stiffness * slip_t - cfg.friction_damping * vt;
    let cap = mu * fn_;
    let mag = ft.norm();
    let mut anchor = anchor;
    if mag > cap {
        let scale = if mag > 0.0 { cap / mag } else { 0.0 };
        ft *= scale;
        anchor = foot - slip_t * scale;
    }
    FootContact { force: normal * fn_ + ft, normal_force: fn_, anchor: Some(anchor) }
}

/// Mass properties of the base after applying payload and mass scaling.
struct MassProperties {
    mass: f64,
    com: Vector3<f64>,
    inertia: Matrix3<f64>,
}

fn point_inertia(m: f64, d: &Vector3<f64>) -> Matrix3<f64> {
    (Matrix3::identity() * d.norm_squared() - d * d.transpose()) * m
}

fn mass_properties(model: &RobotModel, rand: &DynamicsRandomization) -> MassProperties {
    let base = model.base_mass * rand.link_mass_scale;
    let mass = base + rand.payload_mass;
    let offset = Vector3::from(rand.payload_offset);
    let com = offset * (rand.payload_mass / mass);
    let inertia = model.inertia_matrix() * rand.link_mass_scale
        + point_inertia(base, &(-com))
        + point_inertia(rand.payload_mass, &(offset - com));
    MassProperties { mass, com, inertia }
}

/// Net contact force and torque about the center of mass.
fn wrench(s: &RobotState, com_offset: Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let com = s.base_position + s.base_orientation * com_offset;
    let mut force = Vector3::zeros();
    let mut torque = Vector3::zeros();
    for (p, f) in s.foot_positions.iter().zip(&s.foot_contact_forces) {
        force += f;
        torque += (p - com).cross(f);
    }
    (force, torque)
}

#[allow(clippy::too_many_arguments)]
fn kick(
    v_com: &mut Vector3<f64>,
    omega: &mut Vector3<f64>,
    force: &Vector3<f64>,
    torque: &Vector3<f64>,
    gravity: &Vector3<f64>,
    orientation: &UnitQuaternion<f64>,
    props: &MassProperties,
    dt: f64,
) -> Result<()> {
    *v_com += dt * (force / props.mass + gravity);
    let rot = orientation.to_rotation_matrix();
    let inertia_w = rot.matrix() * props.inertia * rot.matrix().transpose();
    let inv = inertia_w.try_inverse().ok_or_else(|| Error::NonFinite("base inertia".into()))?;
    *omega += dt * (inv * (torque - omega.cross(&(inertia_w * *omega))));
    Ok(())
}

/// Joint torques produced by the ground reaction on each foot, `Jᵀ Rᵀ f`.
fn contact_joint_torques(model: &RobotModel, s: &RobotState) -> Vec<f64> {
    let mut tau = vec![0.0; model.joint_count()];
    for leg in 0..model.leg_count {
        let f = s.foot_contact_forces[leg];
        if f == Vector3::zeros() {
            continue;
        }
        let local = s.base_orientation.inverse_transform_vector(&f);
        let t = model.leg_jacobian(leg, s.leg_joints(leg)).transpose() * local;
        tau[3 * leg..3 * leg + 3].copy_from_slice(t.as_slice());
    }
    tau
}

/// Advances one control step: PD-driven joints, penalty contact on every
/// foot, then the floating base under kick-drift-kick leapfrog.
pub fn step<H: Heightfield + ?Sized>(
    model: &RobotModel,
    state: &RobotState,
    action: &[f64],
    terrain: &H,
    rand: &DynamicsRandomization,
    cfg: &SimConfig,
) -> Result<RobotState> {
    let n = model.joint_count();
    if action.len() != n {
        return Err(Error::shape("dynamics::step action", &[n], &[action.len()]));
    }
    let target: Vec<f64> = model.nominal_joint_positions.iter().zip(action).map(|(q, a)| q + a).collect();
    let kp = cfg.kp * rand.kp_scale * rand.motor_strength_scale;
    let kd = cfg.kd * rand.kd_scale * rand.motor_strength_scale;
    let props = mass_properties(model, rand);
    let gravity = Vector3::new(0.0, 0.0, -cfg.gravity);
    let h = cfg.control_dt / cfg.physics_substeps as f64;
    let mut s = state.clone();
    let qd_old = state.joint_velocities.clone();
    let (mut force, mut torque) = wrench(&s, props.com);

    for _ in 0..cfg.physics_substeps {
        s.joint_torques = pd_torque(&target, &s.joint_positions, &s.joint_velocities, kp, kd, model.torque_limit);
        let load = contact_joint_torques(model, &s);
        for j in 0..n {
            s.joint_velocities[j] += h * (s.joint_torques[j] + load[j]) / model.joint_inertia;
            s.joint_positions[j] += h * s.joint_velocities[j];
            let [lo, hi] = model.joint_limits[j];
            if s.joint_positions[j] < lo {
                s.joint_positions[j] = lo;
                s.joint_velocities[j] = s.joint_velocities[j].max(0.0);
            } else if s.joint_positions[j] > hi {
                s.joint_positions[j] = hi;
                s.joint_velocities[j] = s.joint_velocities[j].min(0.0);
            }
        }

        let com_arm = s.base_orientation * props.com;
        let mut com = s.base_position + com_arm;
        let mut v_com = s.base_linear_velocity + s.base_angular_velocity.cross(&com_arm);
        let mut omega = s.base_angular_velocity;
        kick(&mut v_com, &mut omega, &force, &torque, &gravity, &s.base_orientation, &props, 0.5 * h)?;

        com += h * v_com;
        let mut orientation = UnitQuaternion::from_scaled_axis(omega * h) * s.base_orientation;
        orientation.renormalize();
        let arm = orientation * props.com;
        s.base_orientation = orientation;
        s.base_position = com - arm;
        s.base_angular_velocity = omega;
        s.base_linear_velocity = v_com - omega.cross(&arm);
        s.update_feet(model);

        for leg in 0..model.leg_count {
            let p = s.foot_positions[leg];
            let (ground, normal) = terrain.surface(p.x, p.y);
            let c = contact_force(p, s.foot_velocities[leg], ground, normal, s.foot_anchors[leg], rand.ground_friction, cfg);
            s.foot_contact_forces[leg] = c.force;
            s.foot_contact_normals[leg] = normal;
            s.foot_contacts[leg] = c.normal_force > 0.0;
            s.foot_anchors[leg] = c.anchor;
        }
        (force, torque) = wrench(&s, props.com);

        kick(&mut v_com, &mut omega, &force, &torque, &gravity, &s.base_orientation, &props, 0.5 * h)?;
        s.base_angular_velocity = omega;
        s.base_linear_velocity = v_com - omega.cross(&arm);
    }

    s.update_feet(model);
    for j in 0..n {
        s.joint_accelerations[j] = (s.joint_velocities[j] - qd_old[j]) / cfg.control_dt;
    }
    let (base_hit, limb_hits) = count_collisions(model, &s, terrain);
    s.base_collision = base_hit;
    s.collision_count = base_hit as usize + limb_hits;
    s.time += cfg.control_dt;
    s.check_finite()?;
    Ok(s)
}

/// Base-box corners and thigh segments below the terrain surface.
/// Returns whether the base touches and how many thighs do.
pub fn count_collisions<H: Heightfield + ?Sized>(model: &RobotModel, s: &RobotState, terrain: &H) -> (bool, usize) {
    let below = |p: Vector3<f64>| p.z < terrain.height(p.x, p.y);
    let e = model.base_half_extents;
    let mut base = false;
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                let corner = s.base_position + s.base_orientation * Vector3::new(sx * e[0], sy * e[1], sz * e[2]);
                base |= below(corner);
            }
        }
    }
    let mut limbs = 0;
    for leg in 0..model.leg_count {
        let hip = model.hip(leg);
        let knee = hip + model.knee_fk(leg, s.leg_joints(leg));
        let hit = [0.5, 1.0].iter().any(|t| below(s.base_position + s.base_orientation * (hip + (knee - hip) * *t)));
        limbs += hit as usize;
    }
    (base, limbs)
}
