use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::nets::{cast, Checkpoint, Mlp, MlpCache, ParamSet, Scalar};

/// Initial value of the state-independent log standard deviation.
pub const INIT_LOG_STD: f64 = -0.5;

/// A differentiable network mapping observations to action means.
pub trait ActorNet<T: Scalar>: ParamSet<T> + Clone {
    type Cache;

    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn forward(&self, x: ArrayView2<T>) -> Result<(Array2<T>, Self::Cache)>;
    fn predict(&self, x: ArrayView2<T>) -> Result<Array2<T>> {
        Ok(self.forward(x)?.0)
    }
    /// Accumulates parameter gradients for `d_out = ∂L/∂output`.
    fn backward_into(&self, cache: &Self::Cache, d_out: ArrayView2<T>, grads: &mut Self) -> Result<()>;
    fn describe(&self) -> String;
}

impl<T: Scalar> ActorNet<T> for Mlp<T> {
    type Cache = MlpCache<T>;

    fn input_dim(&self) -> usize {
        self.spec().input_dim
    }

    fn output_dim(&self) -> usize {
        self.spec().output_dim
    }

    fn forward(&self, x: ArrayView2<T>) -> Result<(Array2<T>, MlpCache<T>)> {
        Mlp::forward(self, x)
    }

    fn predict(&self, x: ArrayView2<T>) -> Result<Array2<T>> {
        Mlp::predict(self, x)
    }

    fn backward_into(&self, cache: &MlpCache<T>, d_out: ArrayView2<T>, grads: &mut Self) -> Result<()> {
        Mlp::backward_into(self, cache, d_out, grads).map(|_| ())
    }

    fn describe(&self) -> String {
        self.spec().describe()
    }
}

/// Diagonal Gaussian policy with a learned global log-std, plus a value network.
#[derive(Clone, Debug)]
pub struct ActorCritic<T, A> {
    pub actor: A,
    pub critic: Mlp<T>,
    pub log_std: Array1<T>,
}

/// Log-density of `a` under `N(mean, diag(exp(log_std))²)`, one value per row.
pub fn gaussian_log_prob(mean: ArrayView2<f64>, log_std: &[f64], actions: ArrayView2<f64>) -> Vec<f64> {
    let norm: f64 = log_std.iter().sum::<f64>() + 0.5 * log_std.len() as f64 * (2.0 * PI).ln();
    mean.rows()
        .into_iter()
        .zip(actions.rows())
        .map(|(m, a)| {
            let q: f64 = m.iter().zip(a.iter()).zip(log_std).map(|((m, a), s)| ((a - m) / s.exp()).powi(2)).sum();
            -0.5 * q - norm
        })
        .collect()
}

pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|s| s + 0.5 * (2.0 * PI * std::f64::consts::E).ln()).sum()
}

impl<T: Scalar, A: ActorNet<T>> ActorCritic<T, A> {
    pub fn new(actor: A, critic: Mlp<T>) -> Result<Self> {
        if critic.spec().output_dim != 1 {
            return Err(Error::InvalidArgument("critic must have one output".into()));
        }
        let n = actor.output_dim();
        Ok(Self { actor, critic, log_std: Array1::from_elem(n, T::of(INIT_LOG_STD)) })
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn log_std_f64(&self) -> Vec<f64> {
        self.log_std.iter().map(|v| v.to_f64_lossy()).collect()
    }

    pub fn mean(&self, obs: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.actor.predict(cast::<T>(&obs.to_owned()).view())?.mapv(|v| v.to_f64_lossy()))
    }

    pub fn value(&self, obs: ArrayView2<f64>) -> Result<Vec<f64>> {
        Ok(self.critic.predict(cast::<T>(&obs.to_owned()).view())?.iter().map(|v| v.to_f64_lossy()).collect())
    }

    /// Samples actions; `deterministic` returns the mean. Returns the actions
    /// and their log-probabilities under the current policy.
    pub fn act<R: Rng + ?Sized>(&self, obs: ArrayView2<f64>, deterministic: bool, rng: &mut R) -> Result<(Array2<f64>, Vec<f64>)> {
        let mean = self.mean(obs)?;
        let log_std = self.log_std_f64();
        let mut actions = mean.clone();
        if !deterministic {
            for mut row in actions.rows_mut() {
                for (a, s) in row.iter_mut().zip(&log_std) {
                    let z: f64 = rng.sample(StandardNormal);
                    *a += s.exp() * z;
                }
            }
        }
        let lp = gaussian_log_prob(mean.view(), &log_std, actions.view());
        Ok((actions, lp))
    }
}

impl<T: Scalar, A: ActorNet<T>> ParamSet<T> for ActorCritic<T, A> {
    fn tensors(&self) -> Vec<&[T]> {
        let mut v = self.actor.tensors();
        v.extend(self.critic.tensors());
        v.push(self.log_std.as_slice().expect("contiguous"));
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut v = self.actor.tensors_mut();
        v.extend(self.critic.tensors_mut());
        v.push(self.log_std.as_slice_mut().expect("contiguous"));
        v
    }

    fn zeros_like(&self) -> Self {
        Self { actor: self.actor.zeros_like(), critic: self.critic.zeros_like(), log_std: Array1::zeros(self.log_std.len()) }
    }
}

impl<T: Scalar, A: ActorNet<T>> Checkpoint<T> for ActorCritic<T, A> {
    fn describe(&self) -> String {
        format!("actor-critic[actor {}; critic {}; log_std {}]", self.actor.describe(), self.critic.spec().describe(), self.log_std.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::{Activation, MlpSpec};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn standard_normal_log_density() {
        let lp = gaussian_log_prob(array![[0.0]].view(), &[0.0], array![[1.0]].view());
        assert!((lp[0] - (-0.5 - 0.5 * (2.0 * PI).ln())).abs() < 1e-15);
        let e = gaussian_entropy(&[0.0, 0.0]);
        assert!((e - (2.0 * PI * std::f64::consts::E).ln()).abs() < 1e-15);
    }

    #[test]
    fn deterministic_actions_are_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let actor = Mlp::<f64>::new(MlpSpec::new(3, &[8], 2, Activation::Identity), 1.0, &mut rng).unwrap();
        let critic = Mlp::<f64>::new(MlpSpec::new(3, &[8], 1, Activation::Identity), 1.0, &mut rng).unwrap();
        let ac = ActorCritic::new(actor, critic).unwrap();
        let obs = array![[0.1, 0.2, 0.3], [1.0, -1.0, 0.0]];
        let (a, _) = ac.act(obs.view(), true, &mut rng).unwrap();
        assert_eq!(a, ac.mean(obs.view()).unwrap());
        let (b, lp) = ac.act(obs.view(), false, &mut rng).unwrap();
        assert_ne!(a, b);
        assert_eq!(lp.len(), 2);
        assert_eq!(ac.param_count(), ac.actor.param_count() + ac.critic.param_count() + 2);
    }
}
