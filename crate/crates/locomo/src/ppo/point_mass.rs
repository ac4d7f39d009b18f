//! Planar point mass that must reach and hold a commanded velocity. Small
//! enough to exercise PPO end to end in seconds.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::env::{EpisodeSummary, StepOutput, StyleScorer, VectorEnv};
use crate::error::{Error, Result};

const DT: f64 = 0.1;
const ACCEL: f64 = 2.0;
const SIGMA: f64 = 0.25;

pub struct PointMassEnv {
    episode_len: usize,
    rng: ChaCha8Rng,
    vel: Vec<[f64; 2]>,
    cmd: Vec<[f64; 2]>,
    steps: Vec<usize>,
    returns: Vec<f64>,
    tracking: Vec<f64>,
}

impl PointMassEnv {
    pub fn new(num_envs: usize, episode_len: usize, seed: u64) -> Self {
        let mut env = Self {
            episode_len,
            rng: ChaCha8Rng::seed_from_u64(seed),
            vel: vec![[0.0; 2]; num_envs],
            cmd: vec![[0.0; 2]; num_envs],
            steps: vec![0; num_envs],
            returns: vec![0.0; num_envs],
            tracking: vec![0.0; num_envs],
        };
        for i in 0..num_envs {
            env.reset(i);
        }
        env
    }

    fn reset(&mut self, i: usize) {
        self.vel[i] = [self.rng.random_range(-0.5..0.5), self.rng.random_range(-0.5..0.5)];
        self.cmd[i] = [self.rng.random_range(-1.0..1.0), self.rng.random_range(-1.0..1.0)];
        self.steps[i] = 0;
        self.returns[i] = 0.0;
        self.tracking[i] = 0.0;
    }
}

impl VectorEnv for PointMassEnv {
    fn num_envs(&self) -> usize {
        self.vel.len()
    }

    fn obs_dim(&self) -> usize {
        4
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn observe(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.vel.len(), 4), |(i, j)| if j < 2 { self.vel[i][j] } else { self.cmd[i][j - 2] })
    }

    fn step(&mut self, actions: ArrayView2<f64>, _scorer: &mut dyn StyleScorer) -> Result<StepOutput> {
        let n = self.num_envs();
        if actions.dim() != (n, 2) {
            return Err(Error::shape("point mass actions", &[n, 2], &[actions.nrows(), actions.ncols()]));
        }
        let mut out = StepOutput { rewards: vec![0.0; n], dones: vec![false; n], ..StepOutput::default() };
        for i in 0..n {
            let mut err = 0.0;
            for k in 0..2 {
                let a = actions[[i, k]];
                let a = if a.is_nan() { 0.0 } else { a.clamp(-1.0, 1.0) };
                self.vel[i][k] += DT * ACCEL * a;
                err += (self.vel[i][k] - self.cmd[i][k]).powi(2);
            }
            let r = (-err / SIGMA).exp();
            out.rewards[i] = r;
            self.returns[i] += r;
            self.tracking[i] += r;
            self.steps[i] += 1;
            if self.steps[i] >= self.episode_len {
                out.dones[i] = true;
                out.finished.push(EpisodeSummary {
                    env: i,
                    length: self.steps[i],
                    episode_return: self.returns[i],
                    tracking_fraction: self.tracking[i] / self.steps[i] as f64,
                    gait_adherence: 0.0,
                    terminated: false,
                    terrain: None,
                });
                self.reset(i);
            }
        }
        Ok(out)
    }
}
