use std::sync::{Arc, OnceLock};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::generate::{generate, TerrainType, LEVELS, MAX_LEVEL};
use super::map::TerrainMap;
use crate::error::Result;

pub const PROMOTE_ABOVE: f64 = 0.8;
pub const DEMOTE_BELOW: f64 = 0.4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YawMode {
    /// Yaw rate sampled with the rest of the command.
    Random,
    /// Heading held constant; yaw rate comes from a heading controller.
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurriculumState {
    pub terrain_type: TerrainType,
    pub level: u8,
    pub episodes_at_level: u32,
    pub graduated: bool,
    pub commanded_yaw_mode: YawMode,
}

impl CurriculumState {
    pub fn new(terrain_type: TerrainType, level: u8) -> Self {
        Self {
            terrain_type,
            level: level.min(MAX_LEVEL),
            episodes_at_level: 0,
            graduated: false,
            commanded_yaw_mode: YawMode::Random,
        }
    }
}

/// Promotes above 0.8, demotes below 0.4 of the attainable tracking reward.
/// Promotion past the top level cycles back to a random level with a
/// constant-heading command.
pub fn curriculum_update<R: Rng + ?Sized>(state: CurriculumState, mean_tracking_reward_fraction: f64, rng: &mut R) -> CurriculumState {
    let fraction = if mean_tracking_reward_fraction.is_nan() { 0.0 } else { mean_tracking_reward_fraction.clamp(0.0, 1.0) };
    let mut next = state;
    if fraction > PROMOTE_ABOVE {
        if state.level >= MAX_LEVEL {
            next.graduated = true;
            next.level = rng.random_range(0..LEVELS);
            next.commanded_yaw_mode = YawMode::Constant;
        } else {
            next.level = state.level + 1;
        }
    } else if fraction < DEMOTE_BELOW {
        next.level = state.level.saturating_sub(1);
    }
    next.episodes_at_level = if next.level == state.level && fraction <= PROMOTE_ABOVE { state.episodes_at_level + 1 } else { 0 };
    next
}

/// Count of environments at each level 0..=9.
pub fn level_histogram(states: &[CurriculumState]) -> [usize; LEVELS as usize] {
    let mut h = [0; LEVELS as usize];
    for s in states {
        h[s.level as usize] += 1;
    }
    h
}

/// Every (type, level) map, generated on first use and shared read-only.
#[derive(Debug)]
pub struct TerrainSet {
    seed: u64,
    maps: Vec<OnceLock<Arc<TerrainMap>>>,
}

impl TerrainSet {
    pub fn new(seed: u64) -> Self {
        Self { seed, maps: (0..TerrainType::ALL.len() * LEVELS as usize).map(|_| OnceLock::new()).collect() }
    }

    pub fn get(&self, terrain_type: TerrainType, level: u8) -> Result<Arc<TerrainMap>> {
        let idx = terrain_type.index() * LEVELS as usize + level.min(MAX_LEVEL) as usize;
        if let Some(m) = self.maps[idx].get() {
            return Ok(m.clone());
        }
        let map = Arc::new(generate(terrain_type, level, self.seed)?);
        Ok(self.maps[idx].get_or_init(|| map).clone())
    }
}
