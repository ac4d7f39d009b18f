use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::env::{StyleScorer, VectorEnv};
use super::gae::{compute_gae, normalize_advantages};
use super::policy::{gaussian_entropy, gaussian_log_prob, ActorCritic, ActorNet};
use super::rollout::{collect_rollout, Rollout, RolloutBuffer};
use crate::error::{Error, Result};
use crate::nets::{cast, clip_global_norm, Adam, ParamSet, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub steps_per_iteration: usize,
    pub num_envs: usize,
    pub clip_ratio: f64,
    pub epochs: usize,
    pub minibatches: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub learning_rate: f64,
    pub max_grad_norm: f64,
    /// Target KL for the adaptive learning rate; `None` keeps it fixed.
    pub desired_kl: Option<f64>,
    pub max_episode_steps: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            steps_per_iteration: 48,
            num_envs: 256,
            clip_ratio: 0.2,
            epochs: 5,
            minibatches: 4,
            gamma: 0.99,
            lambda: 0.95,
            entropy_coef: 0.01,
            value_coef: 0.5,
            learning_rate: 1e-3,
            max_grad_norm: 1.0,
            desired_kl: Some(0.01),
            max_episode_steps: 1000,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("gamma {} and lambda {} must lie in [0, 1]", self.gamma, self.lambda)));
        }
        if self.steps_per_iteration == 0 || self.num_envs == 0 || self.epochs == 0 || self.minibatches == 0 {
            return Err(Error::Config("steps, envs, epochs and minibatches must be positive".into()));
        }
        if self.minibatches > self.steps_per_iteration * self.num_envs {
            return Err(Error::Config("more minibatches than samples".into()));
        }
        if !(self.clip_ratio > 0.0) || !(self.learning_rate > 0.0) || !(self.max_grad_norm > 0.0) {
            return Err(Error::Config("clip ratio, learning rate and gradient norm cap must be positive".into()));
        }
        if self.entropy_coef < 0.0 || self.value_coef < 0.0 {
            return Err(Error::Config("loss coefficients must be non-negative".into()));
        }
        Ok(())
    }
}

/// Samples gathered for one gradient step.
#[derive(Clone, Debug)]
pub struct Minibatch {
    pub observations: Array2<f64>,
    pub actions: Array2<f64>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Minibatch {
    pub fn gather(buffer: &RolloutBuffer, advantages: &[f64], returns: &[f64], idx: &[usize]) -> Self {
        Self {
            observations: buffer.observations.select(Axis(0), idx),
            actions: buffer.actions.select(Axis(0), idx),
            old_log_probs: idx.iter().map(|&i| buffer.log_probs[i]).collect(),
            advantages: idx.iter().map(|&i| advantages[i]).collect(),
            returns: idx.iter().map(|&i| returns[i]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.old_log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossStats {
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub total: f64,
}

/// Clipped-surrogate, value and entropy loss on one minibatch and its gradient
/// with respect to every policy parameter.
pub fn ppo_loss_and_grad<T: Scalar, A: ActorNet<T>>(
    policy: &ActorCritic<T, A>,
    mb: &Minibatch,
    cfg: &PpoConfig,
) -> Result<(LossStats, ActorCritic<T, A>)> {
    let b = mb.len();
    if b == 0 {
        return Err(Error::InvalidArgument("empty minibatch".into()));
    }
    let x = cast::<T>(&mb.observations);
    let (mean_t, actor_cache) = policy.actor.forward(x.view())?;
    let (value_t, critic_cache) = policy.critic.forward(x.view())?;
    let mean = mean_t.mapv(|v| v.to_f64_lossy());
    let log_std = policy.log_std_f64();
    let log_probs = gaussian_log_prob(mean.view(), &log_std, mb.actions.view());
    let bf = b as f64;
    let eps = cfg.clip_ratio;

    let mut stats = LossStats::default();
    let mut d_mean = Array2::<f64>::zeros(mean.raw_dim());
    let mut d_log_std = vec![-cfg.entropy_coef; log_std.len()];
    let mut d_value = Array2::<T>::zeros((b, 1));
    for i in 0..b {
        let log_ratio = log_probs[i] - mb.old_log_probs[i];
        let ratio = log_ratio.exp();
        let adv = mb.advantages[i];
        let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
        stats.surrogate -= (ratio * adv).min(clipped * adv) / bf;
        stats.approx_kl += ((ratio - 1.0) - log_ratio) / bf;
        let outside = (adv > 0.0 && ratio > 1.0 + eps) || (adv < 0.0 && ratio < 1.0 - eps);
        stats.clip_fraction += (ratio - 1.0).abs().gt(&eps) as u8 as f64 / bf;
        if !outside {
            let d_logp = -adv * ratio / bf;
            for j in 0..log_std.len() {
                let sigma = log_std[j].exp();
                let z = (mb.actions[[i, j]] - mean[[i, j]]) / sigma;
                d_mean[[i, j]] += d_logp * z / sigma;
                d_log_std[j] += d_logp * (z * z - 1.0);
            }
        }
        let v = value_t[[i, 0]].to_f64_lossy();
        let err = v - mb.returns[i];
        stats.value_loss += err * err / bf;
        d_value[[i, 0]] = T::of(cfg.value_coef * 2.0 * err / bf);
    }
    stats.entropy = gaussian_entropy(&log_std);
    stats.total = stats.surrogate + cfg.value_coef * stats.value_loss - cfg.entropy_coef * stats.entropy;

    let mut grads = policy.zeros_like();
    policy.actor.backward_into(&actor_cache, cast::<T>(&d_mean).view(), &mut grads.actor)?;
    policy.critic.backward_into(&critic_cache, d_value.view(), &mut grads.critic)?;
    for (g, d) in grads.log_std.iter_mut().zip(&d_log_std) {
        *g = T::of(*d);
    }
    Ok((stats, grads))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub loss: LossStats,
    pub minibatches: usize,
    /// Minibatches dropped because the loss or gradient was not finite.
    pub skipped: usize,
    pub learning_rate: f64,
    pub grad_norm: f64,
}

/// Several epochs of minibatch Adam steps on the clipped PPO objective.
/// `advantages` should already be normalized.
#[allow(clippy::too_many_arguments)]
pub fn ppo_update<T: Scalar, A: ActorNet<T>, R: Rng + ?Sized>(
    policy: &mut ActorCritic<T, A>,
    adam: &mut Adam<T>,
    buffer: &RolloutBuffer,
    advantages: &[f64],
    returns: &[f64],
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats> {
    buffer.validate()?;
    let n = buffer.len();
    if advantages.len() != n || returns.len() != n {
        return Err(Error::shape("ppo advantages/returns", &[n, n], &[advantages.len(), returns.len()]));
    }
    let mut out = UpdateStats::default();
    let mut acc = LossStats::default();
    let mut order: Vec<usize> = (0..n).collect();
    let chunk = n.div_ceil(cfg.minibatches);
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for idx in order.chunks(chunk) {
            let mb = Minibatch::gather(buffer, advantages, returns, idx);
            let (stats, mut grads) = ppo_loss_and_grad(policy, &mb, cfg)?;
            if !stats.total.is_finite() || !grads.all_finite() {
                out.skipped += 1;
                continue;
            }
            out.grad_norm += clip_global_norm(&mut grads, T::of(cfg.max_grad_norm)).to_f64_lossy();
            if !adam.step(policy, &grads)? {
                out.skipped += 1;
                continue;
            }
            out.minibatches += 1;
            acc.surrogate += stats.surrogate;
            acc.value_loss += stats.value_loss;
            acc.entropy += stats.entropy;
            acc.approx_kl += stats.approx_kl;
            acc.clip_fraction += stats.clip_fraction;
            acc.total += stats.total;
            if let Some(target) = cfg.desired_kl {
                let lr = adam.lr.to_f64_lossy();
                let next = if stats.approx_kl > 2.0 * target {
                    (lr / 1.5).max(1e-5)
                } else if stats.approx_kl < 0.5 * target && stats.approx_kl > 0.0 {
                    (lr * 1.5).min(1e-2)
                } else {
                    lr
                };
                adam.lr = T::of(next);
            }
        }
    }
    if out.minibatches > 0 {
        let k = out.minibatches as f64;
        out.loss = LossStats {
            surrogate: acc.surrogate / k,
            value_loss: acc.value_loss / k,
            entropy: acc.entropy / k,
            approx_kl: acc.approx_kl / k,
            clip_fraction: acc.clip_fraction / k,
            total: acc.total / k,
        };
        out.grad_norm /= k;
    }
    out.learning_rate = adam.lr.to_f64_lossy();
    Ok(out)
}

/// Collection, advantage estimation and update for one PPO iteration.
pub fn ppo_iteration<T, A, E, R>(
    policy: &mut ActorCritic<T, A>,
    adam: &mut Adam<T>,
    env: &mut E,
    scorer: &mut dyn StyleScorer,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<(Rollout, UpdateStats)>
where
    T: Scalar,
    A: ActorNet<T>,
    E: VectorEnv + ?Sized,
    R: Rng + ?Sized,
{
    let rollout = collect_rollout(policy, env, cfg.steps_per_iteration, scorer, false, rng)?;
    let b = &rollout.buffer;
    let (mut adv, returns) = compute_gae(&b.rewards, &b.values, &b.dones, &b.bootstrap_values, b.num_envs, cfg.gamma, cfg.lambda)?;
    normalize_advantages(&mut adv);
    let stats = ppo_update(policy, adam, b, &adv, &returns, cfg, rng)?;
    Ok((rollout, stats))
}
