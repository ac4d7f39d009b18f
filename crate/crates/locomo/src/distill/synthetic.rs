//! A small system whose teacher latent is an exact linear function of the
//! last three observations, so a recurrent student can recover it from
//! proprioception alone.

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{DistillEnv, TeacherActor};
use crate::error::{Error, Result};
use crate::nets::{Activation, Mlp, MlpSpec, Scalar};
use crate::nets::arch::{PRIVILEGED_LATENT_DIM, TERRAIN_LATENT_DIM};

const DECAY: f64 = 0.6;
const ACTION_GAIN: f64 = 0.3;
const NOISE: f64 = 0.5;
const HISTORY: usize = 3;

/// `o_{t+1} = 0.6 o_t + 0.3 a_t + 0.5 ε_t`, reset every `episode_len` steps.
pub struct SyntheticSystem {
    dim: usize,
    episode_len: usize,
    rng: ChaCha8Rng,
    /// `history[i][k]` is `o_{t-k}` of env `i`.
    history: Vec<[Vec<f64>; HISTORY]>,
    steps: Vec<usize>,
}

impl SyntheticSystem {
    pub fn new(num_envs: usize, dim: usize, episode_len: usize, seed: u64) -> Self {
        let mut sys = Self {
            dim,
            episode_len,
            rng: ChaCha8Rng::seed_from_u64(seed),
            history: vec![std::array::from_fn(|_| vec![0.0; dim]); num_envs],
            steps: vec![0; num_envs],
        };
        for i in 0..num_envs {
            // stagger episodes so resets are spread over time
            sys.steps[i] = i * episode_len / num_envs.max(1);
            sys.reset(i);
        }
        sys
    }

    fn reset(&mut self, i: usize) {
        let o: Vec<f64> = (0..self.dim).map(|_| NOISE * self.rng.sample::<f64, _>(StandardNormal)).collect();
        self.history[i] = [o, vec![0.0; self.dim], vec![0.0; self.dim]];
    }

    fn stacked(&self) -> Array2<f64> {
        let w = HISTORY * self.dim;
        Array2::from_shape_fn((self.history.len(), w), |(i, j)| self.history[i][j / self.dim][j % self.dim])
    }

    /// A teacher for this system: linear encoders over the three-step history
    /// and a tanh low-level net.
    pub fn teacher<T: Scalar, R: Rng + ?Sized>(&self, low_hidden: &[usize], rng: &mut R) -> Result<TeacherActor<T>> {
        let h = HISTORY * self.dim;
        let terrain = Mlp::new(MlpSpec::new(h, &[], TERRAIN_LATENT_DIM, Activation::Identity), 0.5, rng)?;
        let privileged = Mlp::new(MlpSpec::new(h, &[], PRIVILEGED_LATENT_DIM, Activation::Identity), 0.5, rng)?;
        let low = Mlp::new(MlpSpec::new(TERRAIN_LATENT_DIM + PRIVILEGED_LATENT_DIM + self.dim, low_hidden, self.dim, Activation::Tanh), 1.0, rng)?;
        TeacherActor::from_parts(terrain, privileged, low, self.dim)
    }
}

impl DistillEnv for SyntheticSystem {
    fn num_envs(&self) -> usize {
        self.history.len()
    }

    fn proprio(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.history.len(), self.dim), |(i, j)| self.history[i][0][j])
    }

    fn teacher_obs(&self) -> Array2<f64> {
        let h = self.stacked();
        concatenate(Axis(1), &[self.proprio().view(), h.view(), h.view()]).expect("row counts")
    }

    fn step_actions(&mut self, actions: ArrayView2<f64>) -> Result<Vec<bool>> {
        let n = self.history.len();
        if actions.dim() != (n, self.dim) {
            return Err(Error::shape("synthetic actions", &[n, self.dim], actions.shape()));
        }
        let mut dones = vec![false; n];
        for (i, done) in dones.iter_mut().enumerate() {
            let next: Vec<f64> = (0..self.dim)
                .map(|j| {
                    let a = actions[[i, j]];
                    let a = if a.is_finite() { a.clamp(-1.0, 1.0) } else { 0.0 };
                    DECAY * self.history[i][0][j] + ACTION_GAIN * a + NOISE * self.rng.sample::<f64, _>(StandardNormal)
                })
                .collect();
            self.history[i].rotate_right(1);
            self.history[i][0] = next;
            self.steps[i] += 1;
            if self.steps[i] % self.episode_len == 0 {
                *done = true;
                self.reset(i);
            }
        }
        Ok(dones)
    }
}
