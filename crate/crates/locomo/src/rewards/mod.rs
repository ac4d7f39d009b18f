//! Reward table: task tracking, regularization, gait shaping and the style
//! term, with per-term raw and scaled values.

mod gait;

pub use gait::{contact_schedule, feet_in_yaw_frame, raibert_targets, GaitSchedule, TRANSITION_BAND};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dynamics::{RobotModel, RobotState};
use crate::error::{Error, Result};

/// Control period every scale is multiplied by.
pub const DT: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RewardTerm {
    LinearVelocityTracking,
    AngularVelocityTracking,
    LinearVelocityPenalty,
    AngularVelocityPenalty,
    BodyHeightPenalty,
    JointTorque,
    JointAcceleration,
    ActionRate,
    Collisions,
    JointTorqueLimits,
    JointVelocityLimits,
    ContactForcePenalty,
    SwingPhaseTrackingForce,
    StancePhaseTrackingVelocity,
    RaibertFootswingTracking,
    FootswingHeightTracking,
    DiscriminatorScore,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RewardGroup {
    Task,
    Regularization,
    Gait,
    Style,
}

pub const TERM_COUNT: usize = 17;

impl RewardTerm {
    pub const ALL: [RewardTerm; TERM_COUNT] = [
        RewardTerm::LinearVelocityTracking,
        RewardTerm::AngularVelocityTracking,
        RewardTerm::LinearVelocityPenalty,
        RewardTerm::AngularVelocityPenalty,
        RewardTerm::BodyHeightPenalty,
        RewardTerm::JointTorque,
        RewardTerm::JointAcceleration,
        RewardTerm::ActionRate,
        RewardTerm::Collisions,
        RewardTerm::JointTorqueLimits,
        RewardTerm::JointVelocityLimits,
        RewardTerm::ContactForcePenalty,
        RewardTerm::SwingPhaseTrackingForce,
        RewardTerm::StancePhaseTrackingVelocity,
        RewardTerm::RaibertFootswingTracking,
        RewardTerm::FootswingHeightTracking,
        RewardTerm::DiscriminatorScore,
    ];

    /// Stable column name used in logs.
    pub fn name(self) -> &'static str {
        match self {
            RewardTerm::LinearVelocityTracking => "linear_velocity_tracking",
            RewardTerm::AngularVelocityTracking => "angular_velocity_tracking",
            RewardTerm::LinearVelocityPenalty => "linear_velocity_penalty",
            RewardTerm::AngularVelocityPenalty => "angular_velocity_penalty",
            RewardTerm::BodyHeightPenalty => "body_height_penalty",
            RewardTerm::JointTorque => "joint_torque",
            RewardTerm::JointAcceleration => "joint_acceleration",
            RewardTerm::ActionRate => "action_rate",
            RewardTerm::Collisions => "collisions",
            RewardTerm::JointTorqueLimits => "joint_torque_limits",
            RewardTerm::JointVelocityLimits => "joint_velocity_limits",
            RewardTerm::ContactForcePenalty => "contact_force_penalty",
            RewardTerm::SwingPhaseTrackingForce => "swing_phase_tracking_force",
            RewardTerm::StancePhaseTrackingVelocity => "stance_phase_tracking_velocity",
            RewardTerm::RaibertFootswingTracking => "raibert_footswing_tracking",
            RewardTerm::FootswingHeightTracking => "footswing_height_tracking",
            RewardTerm::DiscriminatorScore => "discriminator_score",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn group(self) -> RewardGroup {
        use RewardTerm::*;
        match self {
            LinearVelocityTracking | AngularVelocityTracking => RewardGroup::Task,
            SwingPhaseTrackingForce | StancePhaseTrackingVelocity | RaibertFootswingTracking | FootswingHeightTracking => RewardGroup::Gait,
            DiscriminatorScore => RewardGroup::Style,
            _ => RewardGroup::Regularization,
        }
    }

    /// Scale column of the reward table, before the `dt` factor.
    pub fn table_scale(self) -> f64 {
        use RewardTerm::*;
        match self {
            LinearVelocityTracking => 1.0,
            AngularVelocityTracking => 0.8,
            LinearVelocityPenalty => 2.0,
            AngularVelocityPenalty => 0.05,
            BodyHeightPenalty => 0.2,
            JointTorque => 1e-5,
            JointAcceleration => 2.5e-7,
            ActionRate => 0.01,
            Collisions => 0.1,
            JointTorqueLimits => 0.01,
            JointVelocityLimits => 0.1,
            ContactForcePenalty => 0.02,
            SwingPhaseTrackingForce => 4.0,
            StancePhaseTrackingVelocity => 4.0,
            RaibertFootswingTracking => 10.0,
            FootswingHeightTracking => 2.0,
            DiscriminatorScore => 1.0,
        }
    }
}

/// Which reward groups a run optimizes: the three ablation arms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RewardSet {
    /// Task and regularization only.
    #[serde(rename = "BR")]
    Basic,
    /// Adds the gait terms.
    #[serde(rename = "BR+GR")]
    BasicGait,
    /// Adds the discriminator style term.
    #[serde(rename = "BR+ER")]
    BasicExperience,
}

impl RewardSet {
    pub fn label(self) -> &'static str {
        match self {
            RewardSet::Basic => "BR",
            RewardSet::BasicGait => "BR+GR",
            RewardSet::BasicExperience => "BR+ER",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "BR" => Ok(RewardSet::Basic),
            "BR+GR" => Ok(RewardSet::BasicGait),
            "BR+ER" => Ok(RewardSet::BasicExperience),
            _ => Err(Error::Config(format!("unknown reward mode '{s}' (expected BR, BR+GR or BR+ER)"))),
        }
    }

    pub fn uses_gait(self) -> bool {
        self == RewardSet::BasicGait
    }

    pub fn uses_style(self) -> bool {
        self == RewardSet::BasicExperience
    }

    pub fn includes(self, term: RewardTerm) -> bool {
        match term.group() {
            RewardGroup::Task | RewardGroup::Regularization => true,
            RewardGroup::Gait => self.uses_gait(),
            RewardGroup::Style => self.uses_style(),
        }
    }
}

/// Training stage a reward is assembled for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    I,
    II,
}

impl Stage {
    pub fn reward_set(self) -> RewardSet {
        match self {
            Stage::I => RewardSet::BasicGait,
            Stage::II => RewardSet::BasicExperience,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    /// Per-term scale, multiplied by `dt` when applied. Keys are term names.
    pub scales: BTreeMap<String, f64>,
    pub dt: f64,
    pub tracking_sigma: f64,
    /// Swing-force bandwidth, N².
    pub sigma_cf: f64,
    /// Stance foot-velocity bandwidth, (m/s)².
    pub sigma_cv: f64,
    pub desired_base_height: f64,
    pub footswing_apex: f64,
    pub stance_width: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self::paper(&RobotModel::hexapod())
    }
}

impl RewardConfig {
    pub fn paper(model: &RobotModel) -> Self {
        Self {
            scales: RewardTerm::ALL.iter().map(|t| (t.name().to_string(), t.table_scale())).collect(),
            dt: DT,
            tracking_sigma: 0.15,
            sigma_cf: 100.0,
            sigma_cv: 0.25,
            desired_base_height: model.desired_base_height,
            footswing_apex: 0.09,
            stance_width: model.stance_width,
        }
    }

    pub fn scale(&self, term: RewardTerm) -> f64 {
        self.scales.get(term.name()).copied().unwrap_or_else(|| term.table_scale())
    }

    pub fn set_scale(&mut self, term: RewardTerm, value: f64) {
        self.scales.insert(term.name().to_string(), value);
    }

    /// True when every scale and `dt` equal the table.
    pub fn matches_table(&self) -> bool {
        self.dt == DT && RewardTerm::ALL.iter().all(|t| self.scale(*t) == t.table_scale())
    }

    pub fn validate(&self) -> Result<()> {
        for key in self.scales.keys() {
            if RewardTerm::parse(key).is_none() {
                return Err(Error::Config(format!("unknown reward term '{key}'")));
            }
        }
        if self.scales.values().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config("reward scales must be finite and non-negative".into()));
        }
        let positive = [self.dt, self.tracking_sigma, self.sigma_cf, self.sigma_cv];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("reward dt and bandwidths must be positive".into()));
        }
        Ok(())
    }
}

/// Everything one step's reward depends on.
#[derive(Clone, Copy, Debug)]
pub struct RewardInputs<'a> {
    pub model: &'a RobotModel,
    pub state: &'a RobotState,
    /// `(v_x, v_y, ω_z)` in the yaw-aligned base frame.
    pub command: [f64; 3],
    pub action: &'a [f64],
    pub prev_action: &'a [f64],
    /// Base height above the terrain directly below it.
    pub base_height: f64,
    /// Each foot's height above the terrain directly below it.
    pub foot_heights: &'a [f64],
    /// Gait clock.
    pub time: f64,
}

/// Velocity tracking terms `(linear, angular)`, each in (0, 1].
pub fn task_rewards(state: &RobotState, command: [f64; 3], sigma: f64) -> (f64, f64) {
    let v = state.body_linear_velocity();
    let w = state.body_angular_velocity();
    let lin = (command[0] - v.x).powi(2) + (command[1] - v.y).powi(2);
    let ang = (command[2] - w.z).powi(2);
    ((-lin / sigma).exp(), (-ang / sigma).exp())
}

fn hinge_norm(values: impl Iterator<Item = f64>, limit: f64) -> f64 {
    values.map(|v| (v.abs() - limit).max(0.0).powi(2)).sum::<f64>().sqrt()
}

/// Raw stability, smoothness and safety terms, in table order; all ≤ 0.
pub fn regularization_rewards(inputs: &RewardInputs, config: &RewardConfig) -> [(RewardTerm, f64); 10] {
    let s = inputs.state;
    let m = inputs.model;
    let v = s.body_linear_velocity();
    let w = s.body_angular_velocity();
    let sq = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let action_rate: f64 = inputs.action.iter().zip(inputs.prev_action).map(|(a, b)| (b - a).powi(2)).sum();
    [
        (RewardTerm::LinearVelocityPenalty, -(v.z * v.z)),
        (RewardTerm::AngularVelocityPenalty, -(w.x * w.x + w.y * w.y).sqrt()),
        (RewardTerm::BodyHeightPenalty, -(inputs.base_height - config.desired_base_height).abs()),
        (RewardTerm::JointTorque, -sq(&s.joint_torques)),
        (RewardTerm::JointAcceleration, -sq(&s.joint_accelerations)),
        (RewardTerm::ActionRate, -action_rate),
        (RewardTerm::Collisions, -(s.collision_count as f64)),
        (RewardTerm::JointTorqueLimits, -hinge_norm(s.joint_torques.iter().copied(), m.torque_limit)),
        (RewardTerm::JointVelocityLimits, -hinge_norm(s.joint_velocities.iter().copied(), m.joint_velocity_limit)),
        (RewardTerm::ContactForcePenalty, -hinge_norm(s.foot_contact_forces.iter().map(|f| f.norm()), m.foot_force_limit)),
    ]
}

/// Raw swing-force, stance-velocity, Raibert and footswing-height terms.
pub fn gait_rewards(inputs: &RewardInputs, schedule: &GaitSchedule, config: &RewardConfig) -> [(RewardTerm, f64); 4] {
    let s = inputs.state;
    let t = inputs.time;
    let mut swing = 0.0;
    let mut stance = 0.0;
    let mut height = 0.0;
    for foot in 0..inputs.model.leg_count {
        let c = contact_schedule(schedule, foot, t);
        let f2 = s.foot_contact_forces[foot].norm_squared();
        let v = s.foot_velocities[foot];
        swing += (1.0 - c) * (-f2 / config.sigma_cf).exp();
        stance += c * (-(v.x * v.x + v.y * v.y) / config.sigma_cv).exp();
        height += (inputs.foot_heights[foot] - config.footswing_apex).powi(2) * (1.0 - c);
    }
    let targets = raibert_targets(inputs.model, schedule, inputs.command, config.stance_width, t);
    let raibert: f64 = feet_in_yaw_frame(s).iter().zip(&targets).map(|(p, d)| (p - d).norm_squared()).sum();
    [
        (RewardTerm::SwingPhaseTrackingForce, swing),
        (RewardTerm::StancePhaseTrackingVelocity, stance),
        (RewardTerm::RaibertFootswingTracking, -raibert),
        (RewardTerm::FootswingHeightTracking, -height),
    ]
}

/// Raw and scaled value of every reward term for one control step.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardBreakdown {
    pub set: RewardSet,
    pub raw: [f64; TERM_COUNT],
    pub scaled: [f64; TERM_COUNT],
    pub task: f64,
    pub regularization: f64,
    pub gait: f64,
    pub style: f64,
    pub total: f64,
}

impl RewardBreakdown {
    /// All terms zero.
    pub fn empty(set: RewardSet) -> Self {
        Self { set, raw: [0.0; TERM_COUNT], scaled: [0.0; TERM_COUNT], task: 0.0, regularization: 0.0, gait: 0.0, style: 0.0, total: 0.0 }
    }

    pub fn raw(&self, term: RewardTerm) -> f64 {
        self.raw[term.index()]
    }

    pub fn scaled(&self, term: RewardTerm) -> f64 {
        self.scaled[term.index()]
    }

    /// `(name, raw, scaled)` for every term the set includes.
    pub fn named(&self) -> Vec<(&'static str, f64, f64)> {
        RewardTerm::ALL
            .iter()
            .filter(|t| self.set.includes(**t))
            .map(|t| (t.name(), self.raw[t.index()], self.scaled[t.index()]))
            .collect()
    }
}

/// Assembles the step reward for `set`. `style` is the style reward `r^e`
/// and must be present exactly when the set includes it.
pub fn total_reward(
    set: RewardSet,
    inputs: &RewardInputs,
    schedule: &GaitSchedule,
    config: &RewardConfig,
    style: Option<f64>,
) -> Result<RewardBreakdown> {
    match (set.uses_style(), style) {
        (false, Some(_)) => return Err(Error::InvalidArgument(format!("style reward supplied to {} reward", set.label()))),
        (true, None) => return Err(Error::InvalidArgument("style reward missing for BR+ER reward".into())),
        _ => {}
    }
    let mut raw = [0.0; TERM_COUNT];
    let (lin, ang) = task_rewards(inputs.state, inputs.command, config.tracking_sigma);
    raw[RewardTerm::LinearVelocityTracking.index()] = lin;
    raw[RewardTerm::AngularVelocityTracking.index()] = ang;
    for (term, v) in regularization_rewards(inputs, config) {
        raw[term.index()] = v;
    }
    if set.uses_gait() {
        for (term, v) in gait_rewards(inputs, schedule, config) {
            raw[term.index()] = v;
        }
    }
    if let Some(r) = style {
        raw[RewardTerm::DiscriminatorScore.index()] = r;
    }
    let mut scaled = [0.0; TERM_COUNT];
    let mut sums = [0.0; 4];
    for term in RewardTerm::ALL {
        if !set.includes(term) {
            continue;
        }
        let v = raw[term.index()] * config.scale(term) * config.dt;
        scaled[term.index()] = v;
        sums[term.group() as usize] += v;
    }
    let total = sums.iter().sum();
    Ok(RewardBreakdown {
        set,
        raw,
        scaled,
        task: sums[RewardGroup::Task as usize],
        regularization: sums[RewardGroup::Regularization as usize],
        gait: sums[RewardGroup::Gait as usize],
        style: sums[RewardGroup::Style as usize],
        total,
    })
}
