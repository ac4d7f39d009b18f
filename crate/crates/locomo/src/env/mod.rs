//! Vectorized locomotion environments: observation assembly, command
//! sampling, pushes, termination and the terrain curriculum.

pub mod config;
pub mod obs;
pub mod vec_env;

pub use config::{CommandRanges, EnvConfig, ObsMode, PushConfig, TerrainMode};
pub use vec_env::{Ground, LocomotionEnv, GAIT_AGREEMENT};
