//! Proximal policy optimization with generalized advantage estimation over
//! vectorized environments.

pub mod env;
pub mod gae;
pub mod point_mass;
pub mod policy;
pub mod rollout;
pub mod update;

pub use env::{EpisodeSummary, NoStyle, StepOutput, StyleScorer, VectorEnv};
pub use gae::{compute_gae, normalize_advantages};
pub use point_mass::PointMassEnv;
pub use policy::{gaussian_entropy, gaussian_log_prob, ActorCritic, ActorNet, INIT_LOG_STD};
pub use rollout::{collect_rollout, Rollout, RolloutBuffer};
pub use update::{ppo_iteration, ppo_loss_and_grad, ppo_update, LossStats, Minibatch, PpoConfig, UpdateStats};
