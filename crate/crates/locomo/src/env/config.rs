use serde::{Deserialize, Serialize};

use crate::dynamics::{RandomizationRanges, RobotModel, SimConfig};
use crate::error::{Error, Result};
use crate::rewards::{GaitSchedule, RewardConfig, RewardSet};
use crate::terrain::{TerrainType, MAX_LEVEL};

/// Which observation vector the policy receives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObsMode {
    /// Proprioception, body angular velocity and the gait clock `(sin, cos)`.
    Gait,
    /// Proprioception, height scan and privileged state.
    Privileged,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TerrainMode {
    Flat,
    /// Per-env type and level driven by the curriculum.
    Curriculum { seed: u64, initial_level: u8 },
    /// One type and level for every env, curriculum disabled.
    Fixed { seed: u64, terrain_type: TerrainType, level: u8 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandRanges {
    pub lin_vel_x: [f64; 2],
    pub lin_vel_y: [f64; 2],
    pub ang_vel_z: [f64; 2],
    /// Proportional gain of the heading controller used in constant-yaw mode.
    pub heading_gain: f64,
}

impl Default for CommandRanges {
    fn default() -> Self {
        Self { lin_vel_x: [-1.0, 1.0], lin_vel_y: [-0.5, 0.5], ang_vel_z: [-1.0, 1.0], heading_gain: 0.5 }
    }
}

/// Random velocity kicks applied to the base.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushConfig {
    /// Steps between pushes; 0 disables pushing.
    pub interval_steps: usize,
    /// Largest horizontal velocity change per axis, m/s.
    pub max_velocity: f64,
}

impl PushConfig {
    pub fn disabled() -> Self {
        Self { interval_steps: 0, max_velocity: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub num_envs: usize,
    pub seed: u64,
    pub model: RobotModel,
    pub sim: SimConfig,
    pub rewards: RewardConfig,
    pub reward_set: RewardSet,
    pub gait: GaitSchedule,
    pub observation: ObsMode,
    pub terrain: TerrainMode,
    /// `None` keeps every episode at nominal dynamics.
    pub randomization: Option<RandomizationRanges>,
    pub commands: CommandRanges,
    pub push: PushConfig,
    /// Radians of joint offset per unit of clipped action.
    pub action_scale: f64,
    pub max_episode_steps: usize,
    /// Roll or pitch beyond this ends the episode, rad.
    pub max_attitude: f64,
}

impl EnvConfig {
    /// Flat ground, gait rewards, clock observation, nominal dynamics.
    pub fn stage1(model: RobotModel, num_envs: usize, seed: u64) -> Self {
        Self {
            num_envs,
            seed,
            rewards: RewardConfig::paper(&model),
            gait: GaitSchedule::for_model(&model),
            model,
            sim: SimConfig::default(),
            reward_set: RewardSet::BasicGait,
            observation: ObsMode::Gait,
            terrain: TerrainMode::Flat,
            randomization: None,
            commands: CommandRanges::default(),
            push: PushConfig::disabled(),
            action_scale: 0.5,
            max_episode_steps: 1000,
            max_attitude: 1.0,
        }
    }

    /// Curriculum terrain, privileged observations, randomized dynamics.
    pub fn stage2(model: RobotModel, num_envs: usize, seed: u64, reward_set: RewardSet) -> Self {
        Self {
            reward_set,
            observation: ObsMode::Privileged,
            terrain: TerrainMode::Curriculum { seed, initial_level: 0 },
            randomization: Some(RandomizationRanges::training()),
            push: PushConfig { interval_steps: 400, max_velocity: 0.3 },
            ..Self::stage1(model, num_envs, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_envs == 0 {
            return Err(Error::Config("num_envs must be positive".into()));
        }
        if self.max_episode_steps == 0 {
            return Err(Error::Config("max_episode_steps must be positive".into()));
        }
        if !(self.action_scale > 0.0) || !(self.max_attitude > 0.0) {
            return Err(Error::Config("action_scale and max_attitude must be positive".into()));
        }
        self.model.validate()?;
        self.sim.validate()?;
        self.rewards.validate()?;
        self.gait.validate(self.model.leg_count)?;
        if let Some(r) = &self.randomization {
            r.validate()?;
        }
        match self.terrain {
            TerrainMode::Curriculum { initial_level: l, .. } | TerrainMode::Fixed { level: l, .. } if l > MAX_LEVEL => {
                return Err(Error::Config(format!("terrain level {l} outside 0..={MAX_LEVEL}")));
            }
            _ => {}
        }
        for r in [self.commands.lin_vel_x, self.commands.lin_vel_y, self.commands.ang_vel_z] {
            if !(r[0] <= r[1]) {
                return Err(Error::Config(format!("command range {r:?} is inverted")));
            }
        }
        Ok(())
    }
}
