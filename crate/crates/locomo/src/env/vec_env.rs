use std::f64::consts::PI;
use std::sync::Arc;

use log::warn;
use nalgebra::Vector3;
use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{EnvConfig, ObsMode, TerrainMode};
use super::obs;
use crate::dynamics::{self, DynamicsRandomization, FlatGround, Heightfield, RobotState};
use crate::error::{Error, Result};
use crate::ppo::env::{EpisodeSummary, StepOutput, StyleScorer, VectorEnv};
use crate::rewards::{contact_schedule, total_reward, RewardBreakdown, RewardInputs, RewardTerm};
use crate::terrain::{curriculum_update, height_scan, CurriculumState, TerrainMap, TerrainSet, TerrainType, YawMode};

/// Per-step fraction of feet whose contact must match the schedule for the
/// step to count as on-gait.
pub const GAIT_AGREEMENT: f64 = 0.8;
/// Spawn offset from the map center, m.
const SPAWN_JITTER: f64 = 0.3;
/// Lowest foot clearance at spawn, m.
const SPAWN_CLEARANCE: f64 = 0.01;

#[derive(Clone, Debug)]
pub enum Ground {
    Flat(FlatGround),
    Map(Arc<TerrainMap>),
}

impl Heightfield for Ground {
    fn surface(&self, x: f64, y: f64) -> (f64, Vector3<f64>) {
        match self {
            Ground::Flat(g) => g.surface(x, y),
            Ground::Map(m) => m.surface(x, y),
        }
    }

    fn height(&self, x: f64, y: f64) -> f64 {
        match self {
            Ground::Flat(g) => g.height,
            Ground::Map(m) => m.height_at(x, y).0,
        }
    }
}

impl Ground {
    fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Ground::Flat(_) => true,
            Ground::Map(m) => m.height_at(x, y).1,
        }
    }

    fn center(&self) -> [f64; 2] {
        match self {
            Ground::Flat(_) => [0.0, 0.0],
            Ground::Map(m) => m.center(),
        }
    }
}

#[derive(Clone, Debug)]
struct Slot {
    rng: ChaCha8Rng,
    state: RobotState,
    rand: DynamicsRandomization,
    ground: Ground,
    curriculum: Option<CurriculumState>,
    command: [f64; 3],
    heading: f64,
    prev_action: Vec<f64>,
    steps: usize,
    episode_return: f64,
    tracking_sum: f64,
    on_gait_steps: usize,
    last_push: f64,
}

/// Batch of legged-robot environments on flat ground or curriculum terrain.
pub struct LocomotionEnv {
    cfg: EnvConfig,
    terrains: Option<TerrainSet>,
    slots: Vec<Slot>,
    command_override: Vec<Option<[f64; 3]>>,
}

fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

fn clip_action(a: f64) -> f64 {
    if a.is_nan() {
        0.0
    } else {
        a.clamp(-1.0, 1.0)
    }
}

impl LocomotionEnv {
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        let terrains = match cfg.terrain {
            TerrainMode::Flat => None,
            TerrainMode::Curriculum { seed, .. } | TerrainMode::Fixed { seed, .. } => Some(TerrainSet::new(seed)),
        };
        let n = cfg.model.joint_count();
        let mut env = Self { terrains, slots: Vec::with_capacity(cfg.num_envs), command_override: vec![None; cfg.num_envs], cfg };
        for i in 0..env.cfg.num_envs {
            let mut rng = ChaCha8Rng::seed_from_u64(env.cfg.seed);
            rng.set_stream(i as u64);
            let curriculum = match env.cfg.terrain {
                TerrainMode::Curriculum { initial_level, .. } => {
                    Some(CurriculumState::new(TerrainType::ALL[i % TerrainType::ALL.len()], initial_level))
                }
                _ => None,
            };
            let placeholder = RobotState::standing(&env.cfg.model, 0.0, 0.0, 0.0, 0.0);
            env.slots.push(Slot {
                rng,
                state: placeholder,
                rand: DynamicsRandomization::default(),
                ground: Ground::Flat(FlatGround { height: 0.0 }),
                curriculum,
                command: [0.0; 3],
                heading: 0.0,
                prev_action: vec![0.0; n],
                steps: 0,
                episode_return: 0.0,
                tracking_sum: 0.0,
                on_gait_steps: 0,
                last_push: 0.0,
            });
            env.reset_env(i)?;
        }
        Ok(env)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn state(&self, env: usize) -> &RobotState {
        &self.slots[env].state
    }

    pub fn command(&self, env: usize) -> [f64; 3] {
        self.slots[env].command
    }

    pub fn randomization(&self, env: usize) -> &DynamicsRandomization {
        &self.slots[env].rand
    }

    pub fn ground(&self, env: usize) -> &Ground {
        &self.slots[env].ground
    }

    pub fn curriculum(&self) -> Vec<CurriculumState> {
        self.slots.iter().filter_map(|s| s.curriculum).collect()
    }

    pub fn mean_terrain_level(&self) -> f64 {
        let c = self.curriculum();
        if c.is_empty() {
            return 0.0;
        }
        c.iter().map(|s| s.level as f64).sum::<f64>() / c.len() as f64
    }

    /// Pins the command of one env; `None` returns it to per-episode sampling.
    pub fn set_command(&mut self, env: usize, command: Option<[f64; 3]>) {
        self.command_override[env] = command;
        if let Some(c) = command {
            self.slots[env].command = c;
        }
    }

    pub fn reset_all(&mut self) -> Result<()> {
        for i in 0..self.slots.len() {
            self.reset_env(i)?;
        }
        Ok(())
    }

    fn reset_env(&mut self, i: usize) -> Result<()> {
        let cfg = &self.cfg;
        let slot = &mut self.slots[i];
        let ground = match (&cfg.terrain, &self.terrains) {
            (TerrainMode::Flat, _) | (_, None) => Ground::Flat(FlatGround { height: 0.0 }),
            (TerrainMode::Fixed { terrain_type, level, .. }, Some(set)) => Ground::Map(set.get(*terrain_type, *level)?),
            (TerrainMode::Curriculum { .. }, Some(set)) => {
                let c = slot.curriculum.expect("curriculum slot");
                Ground::Map(set.get(c.terrain_type, c.level)?)
            }
        };
        slot.rand = match &cfg.randomization {
            Some(r) => r.sample(&mut slot.rng),
            None => DynamicsRandomization::default(),
        };
        let [cx, cy] = ground.center();
        let x = cx + slot.rng.random_range(-SPAWN_JITTER..=SPAWN_JITTER);
        let y = cy + slot.rng.random_range(-SPAWN_JITTER..=SPAWN_JITTER);
        let yaw = slot.rng.random_range(-PI..PI);
        let joints: Vec<f64> = cfg
            .model
            .nominal_joint_positions
            .iter()
            .zip(&cfg.model.joint_limits)
            .map(|(q, [lo, hi])| (q * slot.rand.joint_position_scale).clamp(*lo, *hi))
            .collect();
        let mut state = RobotState::at_rest(&cfg.model, Vector3::new(x, y, 0.0), yaw, joints);
        let lowest = state.foot_positions.iter().map(|p| p.z - ground.height(p.x, p.y)).fold(f64::INFINITY, f64::min);
        let dz = SPAWN_CLEARANCE - lowest;
        state.base_position.z += dz;
        state.update_feet(&cfg.model);
        slot.state = state;
        slot.ground = ground;

        let r = &cfg.commands;
        let mut sample = |[lo, hi]: [f64; 2]| if lo == hi { lo } else { slot.rng.random_range(lo..=hi) };
        let vx = sample(r.lin_vel_x);
        let vy = sample(r.lin_vel_y);
        let wz = sample(r.ang_vel_z);
        slot.heading = yaw + slot.rng.random_range(-PI..PI);
        slot.command = [vx, vy, wz];
        if let Some(c) = self.command_override[i] {
            slot.command = c;
        }
        slot.prev_action.fill(0.0);
        slot.steps = 0;
        slot.episode_return = 0.0;
        slot.tracking_sum = 0.0;
        slot.on_gait_steps = 0;
        slot.last_push = 0.0;
        Ok(())
    }

    fn heading_hold(&self, i: usize) -> bool {
        self.command_override[i].is_none()
            && self.slots[i].curriculum.is_some_and(|c| c.commanded_yaw_mode == YawMode::Constant)
    }

    fn observe_row(&self, i: usize, out: &mut Vec<f64>) {
        let s = &self.slots[i];
        let m = &self.cfg.model;
        obs::proprioception(m, &s.state, s.command, &s.prev_action, out);
        match self.cfg.observation {
            ObsMode::Gait => {
                obs::body_rates(&s.state, out);
                obs::gait_clock(s.state.time, self.cfg.gait.period, out);
            }
            ObsMode::Privileged => {
                let yaw = s.state.yaw();
                obs::scan_features(&height_scan(&s.ground, &s.state.base_position, yaw), self.cfg.rewards.desired_base_height, out);
                let p = s.state.base_position;
                obs::privileged(&s.state, &s.rand, p.z - s.ground.height(p.x, p.y), s.last_push, out);
            }
        }
    }

    /// Proprioception `o^p` only, one row per env.
    pub fn observe_proprio(&self) -> Array2<f64> {
        let dim = obs::proprio_dim(&self.cfg.model);
        let mut data = Vec::with_capacity(dim * self.slots.len());
        for s in &self.slots {
            obs::proprioception(&self.cfg.model, &s.state, s.command, &s.prev_action, &mut data);
        }
        Array2::from_shape_vec((self.slots.len(), dim), data).expect("proprio width")
    }

    /// Motion states `s^AMP`, one row per env.
    pub fn amp_states(&self) -> Array2<f64> {
        let dim = obs::amp_dim(&self.cfg.model);
        let mut data = Vec::with_capacity(dim * self.slots.len());
        for s in &self.slots {
            obs::amp_state(&s.state, &mut data);
        }
        Array2::from_shape_vec((self.slots.len(), dim), data).expect("amp width")
    }

    /// Fraction of feet whose contact flag agrees with the commanded schedule.
    pub fn gait_agreement(&self, env: usize) -> f64 {
        let s = &self.slots[env];
        let legs = self.cfg.model.leg_count;
        let hits = (0..legs)
            .filter(|&f| (contact_schedule(&self.cfg.gait, f, s.state.time) > 0.5) == s.state.foot_contacts[f])
            .count();
        hits as f64 / legs as f64
    }

    fn update_heading_command(&mut self, i: usize) {
        if !self.heading_hold(i) {
            return;
        }
        let r = self.cfg.commands;
        let s = &mut self.slots[i];
        let err = wrap_angle(s.heading - s.state.yaw());
        s.command[2] = (r.heading_gain * err).clamp(r.ang_vel_z[0], r.ang_vel_z[1]);
    }

    fn apply_push(&mut self, i: usize) {
        let p = self.cfg.push;
        let s = &mut self.slots[i];
        if p.interval_steps == 0 || s.steps == 0 || s.steps % p.interval_steps != 0 {
            return;
        }
        let dvx = s.rng.random_range(-p.max_velocity..=p.max_velocity);
        let dvy = s.rng.random_range(-p.max_velocity..=p.max_velocity);
        s.state.base_linear_velocity.x += dvx;
        s.state.base_linear_velocity.y += dvy;
        s.last_push = dvx.hypot(dvy);
    }

    fn finish_episode(&mut self, i: usize, terminated: bool) -> Result<EpisodeSummary> {
        let max_steps = self.cfg.max_episode_steps;
        let s = &mut self.slots[i];
        let length = s.steps.max(1);
        let summary = EpisodeSummary {
            env: i,
            length: s.steps,
            episode_return: s.episode_return,
            tracking_fraction: s.tracking_sum / length as f64,
            gait_adherence: s.on_gait_steps as f64 / length as f64,
            terminated,
            terrain: s.curriculum.map(|c| (c.terrain_type, c.level)),
        };
        if let Some(c) = s.curriculum {
            let horizon = if terminated { max_steps } else { length };
            let fraction = s.tracking_sum / horizon as f64;
            s.curriculum = Some(curriculum_update(c, fraction, &mut s.rng));
        }
        self.reset_env(i)?;
        Ok(summary)
    }
}

impl VectorEnv for LocomotionEnv {
    fn num_envs(&self) -> usize {
        self.slots.len()
    }

    fn obs_dim(&self) -> usize {
        let m = &self.cfg.model;
        match self.cfg.observation {
            ObsMode::Gait => obs::proprio_dim(m) + obs::GAIT_EXTRA_DIM,
            ObsMode::Privileged => obs::proprio_dim(m) + obs::scan_dim() + obs::privileged_dim(m),
        }
    }

    fn action_dim(&self) -> usize {
        self.cfg.model.action_dim()
    }

    fn observe(&self) -> Array2<f64> {
        let dim = self.obs_dim();
        let mut data = Vec::with_capacity(dim * self.slots.len());
        for i in 0..self.slots.len() {
            self.observe_row(i, &mut data);
        }
        Array2::from_shape_vec((self.slots.len(), dim), data).expect("observation width")
    }

    fn step(&mut self, actions: ArrayView2<f64>, scorer: &mut dyn StyleScorer) -> Result<StepOutput> {
        let n = self.slots.len();
        let a_dim = self.action_dim();
        if actions.dim() != (n, a_dim) {
            return Err(Error::shape("env step actions", &[n, a_dim], &[actions.nrows(), actions.ncols()]));
        }
        let amp_dim = obs::amp_dim(&self.cfg.model);
        let style_on = self.cfg.reward_set.uses_style();
        let mut amp = Array2::zeros((n, 2 * amp_dim));
        let mut clipped: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut failed = vec![false; n];
        let mut buf = Vec::with_capacity(amp_dim);

        for i in 0..n {
            self.update_heading_command(i);
            self.apply_push(i);
            let action: Vec<f64> = actions.row(i).iter().map(|&a| clip_action(a)).collect();
            let targets: Vec<f64> = action.iter().map(|a| a * self.cfg.action_scale).collect();
            let s = &self.slots[i];
            buf.clear();
            obs::amp_state(&s.state, &mut buf);
            amp.row_mut(i).slice_mut(ndarray::s![..amp_dim]).assign(&ndarray::ArrayView1::from(&buf[..]));
            match dynamics::step(&self.cfg.model, &s.state, &targets, &s.ground, &s.rand, &self.cfg.sim) {
                Ok(next) => self.slots[i].state = next,
                Err(Error::NonFinite(what)) => {
                    warn!("env {i}: non-finite simulation state ({what}); resetting");
                    failed[i] = true;
                }
                Err(e) => return Err(e),
            }
            buf.clear();
            obs::amp_state(&self.slots[i].state, &mut buf);
            amp.row_mut(i).slice_mut(ndarray::s![amp_dim..]).assign(&ndarray::ArrayView1::from(&buf[..]));
            clipped.push(action);
        }

        let style = if style_on {
            let scores = scorer.score(amp.view())?;
            if scores.len() != n {
                return Err(Error::shape("style scores", &[n], &[scores.len()]));
            }
            Some(scores)
        } else {
            None
        };

        let mut out = StepOutput {
            rewards: vec![0.0; n],
            dones: vec![false; n],
            breakdowns: Vec::with_capacity(n),
            amp_transitions: None,
            finished: Vec::new(),
            non_finite_resets: 0,
        };
        let legs = self.cfg.model.leg_count;
        for i in 0..n {
            if failed[i] {
                out.non_finite_resets += 1;
                out.dones[i] = true;
                out.breakdowns.push(RewardBreakdown::empty(self.cfg.reward_set));
                self.slots[i].steps += 1;
                let summary = self.finish_episode(i, true)?;
                out.finished.push(summary);
                continue;
            }
            let s = &self.slots[i];
            let p = s.state.base_position;
            let foot_heights: Vec<f64> = s.state.foot_positions.iter().map(|f| f.z - s.ground.height(f.x, f.y)).collect();
            let inputs = RewardInputs {
                model: &self.cfg.model,
                state: &s.state,
                command: s.command,
                action: &clipped[i],
                prev_action: &s.prev_action,
                base_height: p.z - s.ground.height(p.x, p.y),
                foot_heights: &foot_heights,
                time: s.state.time,
            };
            let br = total_reward(self.cfg.reward_set, &inputs, &self.cfg.gait, &self.cfg.rewards, style.as_ref().map(|v| v[i]))?;
            let agree = (0..legs)
                .filter(|&f| (contact_schedule(&self.cfg.gait, f, s.state.time) > 0.5) == s.state.foot_contacts[f])
                .count() as f64
                / legs as f64;
            let (roll, pitch, _) = s.state.euler();
            let terminated = s.state.base_collision || roll.abs() > self.cfg.max_attitude || pitch.abs() > self.cfg.max_attitude;
            let left_map = !s.ground.contains(p.x, p.y);

            let slot = &mut self.slots[i];
            slot.steps += 1;
            slot.episode_return += br.total;
            slot.tracking_sum += br.raw(RewardTerm::LinearVelocityTracking);
            slot.on_gait_steps += (agree > GAIT_AGREEMENT) as usize;
            slot.prev_action.copy_from_slice(&clipped[i]);
            out.rewards[i] = br.total;
            out.breakdowns.push(br);
            let timeout = slot.steps >= self.cfg.max_episode_steps || left_map;
            if terminated || timeout {
                out.dones[i] = true;
                let summary = self.finish_episode(i, terminated)?;
                out.finished.push(summary);
            }
        }
        out.amp_transitions = Some(amp);
        Ok(out)
    }
}
