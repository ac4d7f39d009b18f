use ndarray::{s, Array2};
use rand::Rng;

use super::env::{EpisodeSummary, StyleScorer, VectorEnv};
use super::policy::{ActorCritic, ActorNet};
use crate::error::{Error, Result};
use crate::nets::Scalar;
use crate::rewards::RewardBreakdown;

/// One iteration of experience, stored time-major: row `t * num_envs + e`.
#[derive(Clone, Debug, PartialEq)]
pub struct RolloutBuffer {
    pub steps: usize,
    pub num_envs: usize,
    pub observations: Array2<f64>,
    pub actions: Array2<f64>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    /// Concatenated `(s_t, s_{t+1})` motion states when the env provides them.
    pub amp_transitions: Option<Array2<f64>>,
    pub breakdowns: Vec<RewardBreakdown>,
    /// Value of the observation following the last step, per env.
    pub bootstrap_values: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new(steps: usize, num_envs: usize, obs_dim: usize, action_dim: usize) -> Self {
        let n = steps * num_envs;
        Self {
            steps,
            num_envs,
            observations: Array2::zeros((n, obs_dim)),
            actions: Array2::zeros((n, action_dim)),
            log_probs: vec![0.0; n],
            values: vec![0.0; n],
            rewards: vec![0.0; n],
            dones: vec![false; n],
            amp_transitions: None,
            breakdowns: Vec::new(),
            bootstrap_values: vec![0.0; num_envs],
        }
    }

    pub fn len(&self) -> usize {
        self.steps * self.num_envs
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&mut self) {
        self.observations.fill(0.0);
        self.actions.fill(0.0);
        for v in [&mut self.log_probs, &mut self.values, &mut self.rewards] {
            v.fill(0.0);
        }
        self.dones.fill(false);
        self.amp_transitions = None;
        self.breakdowns.clear();
        self.bootstrap_values.fill(0.0);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let lens = [self.observations.nrows(), self.actions.nrows(), self.log_probs.len(), self.values.len(), self.rewards.len(), self.dones.len()];
        if lens.iter().any(|&l| l != n) || self.bootstrap_values.len() != self.num_envs {
            return Err(Error::shape("rollout buffer", &[n], &lens));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    pub buffer: RolloutBuffer,
    pub episodes: Vec<EpisodeSummary>,
    pub non_finite_resets: usize,
}

/// Steps `env` for `steps` control steps under `policy` and records everything
/// PPO and the discriminator need.
pub fn collect_rollout<T, A, E, R>(
    policy: &ActorCritic<T, A>,
    env: &mut E,
    steps: usize,
    scorer: &mut dyn StyleScorer,
    deterministic: bool,
    rng: &mut R,
) -> Result<Rollout>
where
    T: Scalar,
    A: ActorNet<T>,
    E: VectorEnv + ?Sized,
    R: Rng + ?Sized,
{
    let n = env.num_envs();
    if policy.action_dim() != env.action_dim() || policy.actor.input_dim() != env.obs_dim() {
        return Err(Error::shape("policy vs env", &[env.obs_dim(), env.action_dim()], &[policy.actor.input_dim(), policy.action_dim()]));
    }
    let mut buf = RolloutBuffer::new(steps, n, env.obs_dim(), env.action_dim());
    let mut episodes = Vec::new();
    let mut resets = 0;
    let mut obs = env.observe();
    for t in 0..steps {
        let rows = s![t * n..(t + 1) * n, ..];
        let (actions, lp) = policy.act(obs.view(), deterministic, rng)?;
        let values = policy.value(obs.view())?;
        let out = env.step(actions.view(), scorer)?;
        buf.observations.slice_mut(rows).assign(&obs);
        buf.actions.slice_mut(rows).assign(&actions);
        buf.log_probs[t * n..(t + 1) * n].copy_from_slice(&lp);
        buf.values[t * n..(t + 1) * n].copy_from_slice(&values);
        buf.rewards[t * n..(t + 1) * n].copy_from_slice(&out.rewards);
        buf.dones[t * n..(t + 1) * n].copy_from_slice(&out.dones);
        if let Some(amp) = out.amp_transitions {
            let store = buf.amp_transitions.get_or_insert_with(|| Array2::zeros((steps * n, amp.ncols())));
            store.slice_mut(rows).assign(&amp);
        }
        buf.breakdowns.extend(out.breakdowns);
        episodes.extend(out.finished);
        resets += out.non_finite_resets;
        obs = env.observe();
    }
    buf.bootstrap_values = policy.value(obs.view())?;
    Ok(Rollout { buffer: buf, episodes, non_finite_resets: resets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppo::env::NoStyle;
    use crate::ppo::point_mass::PointMassEnv;
    use crate::nets::{Activation, Mlp, MlpSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn policy(seed: u64) -> ActorCritic<f64, Mlp<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Mlp::new(MlpSpec::new(4, &[16], 2, Activation::Identity), 0.01, &mut rng).unwrap();
        let c = Mlp::new(MlpSpec::new(4, &[16], 1, Activation::Identity), 1.0, &mut rng).unwrap();
        ActorCritic::new(a, c).unwrap()
    }

    #[test]
    fn deterministic_collection_repeats() {
        let p = policy(0);
        let run = || {
            let mut env = PointMassEnv::new(4, 100, 3);
            collect_rollout(&p, &mut env, 10, &mut NoStyle, true, &mut ChaCha8Rng::seed_from_u64(5)).unwrap().buffer
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn no_dones_within_episode_length() {
        let p = policy(1);
        let mut env = PointMassEnv::new(3, 100, 3);
        let Rollout { buffer: buf, episodes: eps, .. } = collect_rollout(&p, &mut env, 20, &mut NoStyle, false, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        buf.validate().unwrap();
        assert!(buf.dones.iter().all(|d| !d));
        assert!(eps.is_empty());
        let Rollout { buffer: buf, episodes: eps, .. } = collect_rollout(&p, &mut env, 80, &mut NoStyle, false, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(buf.dones.iter().filter(|d| **d).count(), 3);
        assert!(eps.iter().all(|e| e.length == 100));
    }

    #[test]
    fn clear_keeps_shape() {
        let mut b = RolloutBuffer::new(3, 2, 4, 1);
        b.rewards[0] = 1.0;
        b.clear();
        b.validate().unwrap();
        assert_eq!(b.rewards, vec![0.0; 6]);
    }
}
