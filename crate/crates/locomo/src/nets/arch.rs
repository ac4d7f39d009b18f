//! Network layouts for both training stages and the student.

use serde::{Deserialize, Serialize};

use super::{Activation, LstmSpec, MlpSpec};

/// Proprioceptive observation width `o_t^p` for the hexapod.
pub const PROPRIO_DIM: usize = 60;
/// Height-scan width `i_t^e`.
pub const SCAN_DIM: usize = 187;
/// Privileged state width `s_t^p`.
pub const PRIVILEGED_DIM: usize = 42;
pub const TERRAIN_LATENT_DIM: usize = 16;
pub const PRIVILEGED_LATENT_DIM: usize = 8;
/// Teacher latent `[l^e; l^p]` reconstructed by the student.
pub const TEACHER_LATENT_DIM: usize = TERRAIN_LATENT_DIM + PRIVILEGED_LATENT_DIM;

/// Hidden-layer widths of every network in the pipeline.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkTable {
    pub stage1_actor: Vec<usize>,
    pub stage1_critic: Vec<usize>,
    pub stage2_low_level: Vec<usize>,
    pub stage2_critic: Vec<usize>,
    pub memory: Vec<usize>,
    pub privileged_encoder: Vec<usize>,
    pub terrain_encoder: Vec<usize>,
    pub memory_head: Vec<usize>,
    pub discriminator: Vec<usize>,
}

impl Default for NetworkTable {
    fn default() -> Self {
        Self::paper()
    }
}

impl NetworkTable {
    pub fn paper() -> Self {
        Self {
            stage1_actor: vec![128, 128, 64],
            stage1_critic: vec![128, 256, 128],
            stage2_low_level: vec![256, 128, 64],
            stage2_critic: vec![512, 256, 128],
            memory: vec![256, 256, 256],
            privileged_encoder: vec![64, 32],
            terrain_encoder: vec![256, 128],
            memory_head: vec![256, 128],
            discriminator: vec![1024, 512],
        }
    }

    pub fn stage1_actor(&self, input: usize, actions: usize) -> MlpSpec {
        MlpSpec::new(input, &self.stage1_actor, actions, Activation::Identity)
    }

    pub fn stage1_critic(&self, input: usize) -> MlpSpec {
        MlpSpec::new(input, &self.stage1_critic, 1, Activation::Identity)
    }

    /// Input is `[l^e; l^p; o^p]`.
    pub fn stage2_low_level(&self, proprio: usize, actions: usize) -> MlpSpec {
        MlpSpec::new(TEACHER_LATENT_DIM + proprio, &self.stage2_low_level, actions, Activation::Tanh)
    }

    pub fn stage2_critic(&self, input: usize) -> MlpSpec {
        MlpSpec::new(input, &self.stage2_critic, 1, Activation::Identity)
    }

    pub fn privileged_encoder(&self, privileged: usize) -> MlpSpec {
        MlpSpec::new(privileged, &self.privileged_encoder, PRIVILEGED_LATENT_DIM, Activation::Identity)
    }

    pub fn terrain_encoder(&self) -> MlpSpec {
        MlpSpec::new(SCAN_DIM, &self.terrain_encoder, TERRAIN_LATENT_DIM, Activation::Identity)
    }

    pub fn memory(&self, proprio: usize) -> LstmSpec {
        LstmSpec::new(proprio, &self.memory)
    }

    pub fn memory_head(&self) -> MlpSpec {
        let m = *self.memory.last().expect("memory has layers");
        MlpSpec::new(m, &self.memory_head, TEACHER_LATENT_DIM, Activation::Identity)
    }

    /// Input is a concatenated transition `(s_t, s_{t+1})`.
    pub fn discriminator(&self, amp_state: usize) -> MlpSpec {
        MlpSpec::new(2 * amp_state, &self.discriminator, 1, Activation::Identity)
    }
}
