use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nets::{cast, Adam, Checkpoint, Mlp, MlpSpec, ParamSet, Scalar};
use crate::ppo::StyleScorer;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscriminatorConfig {
    /// `α^gp`.
    pub gp_coef: f64,
    pub batch_size: usize,
    pub updates_per_iteration: usize,
    /// Scores are clamped to `±score_clamp` before the style reward.
    pub score_clamp: f64,
    pub learning_rate: f64,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        Self { gp_coef: 10.0, batch_size: 256, updates_per_iteration: 2, score_clamp: 5.0, learning_rate: 1e-4 }
    }
}

impl DiscriminatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gp_coef >= 0.0) {
            return Err(Error::Config(format!("gp_coef must be non-negative, got {}", self.gp_coef)));
        }
        if self.batch_size == 0 || !(self.score_clamp > 0.0) || !(self.learning_rate > 0.0) {
            return Err(Error::Config("discriminator batch, clamp and learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// `max[0, 1 − 0.25 (d − 1)²]`.
pub fn style_reward(score: f64) -> f64 {
    (1.0 - 0.25 * (score - 1.0).powi(2)).max(0.0)
}

/// Least-squares term `E_real[(D − 1)²] + E_fake[(D + 1)²]`.
pub fn lsgan_loss(real_scores: &[f64], fake_scores: &[f64]) -> f64 {
    let mean = |v: &[f64], target: f64| v.iter().map(|d| (d - target).powi(2)).sum::<f64>() / v.len() as f64;
    mean(real_scores, 1.0) + mean(fake_scores, -1.0)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscLoss {
    pub lsgan: f64,
    /// `(α^gp / 2) E_real ‖∇ₓ D‖²`.
    pub penalty: f64,
    pub total: f64,
    pub mean_real: f64,
    pub mean_fake: f64,
}

/// Loss on already-normalized transitions and its parameter gradient.
pub fn disc_loss<T: Scalar>(net: &Mlp<T>, real: ArrayView2<f64>, fake: ArrayView2<f64>, gp_coef: f64) -> Result<(DiscLoss, Mlp<T>)> {
    if real.nrows() == 0 || fake.nrows() == 0 {
        return Err(Error::InvalidArgument("discriminator batches must be non-empty".into()));
    }
    let (nr, nf) = (real.nrows() as f64, fake.nrows() as f64);
    let xr = cast::<T>(&real.to_owned());
    let xf = cast::<T>(&fake.to_owned());
    let (dr, cr) = net.forward(xr.view())?;
    let (df, cf) = net.forward(xf.view())?;
    let dr: Vec<f64> = dr.iter().map(|v| v.to_f64_lossy()).collect();
    let df: Vec<f64> = df.iter().map(|v| v.to_f64_lossy()).collect();

    let mut grads = net.zeros_like();
    let gr = Array2::from_shape_fn((dr.len(), 1), |(i, _)| T::of(2.0 * (dr[i] - 1.0) / nr));
    let gf = Array2::from_shape_fn((df.len(), 1), |(i, _)| T::of(2.0 * (df[i] + 1.0) / nf));
    net.backward_into(&cr, gr.view(), &mut grads)?;
    net.backward_into(&cf, gf.view(), &mut grads)?;

    let mut penalty = 0.0;
    if gp_coef > 0.0 {
        let (value, pg) = net.input_gradient_penalty(xr.view())?;
        penalty = 0.5 * gp_coef * value.to_f64_lossy();
        grads.add_scaled(&pg, T::of(0.5 * gp_coef));
    }
    let lsgan = lsgan_loss(&dr, &df);
    let stats = DiscLoss {
        lsgan,
        penalty,
        total: lsgan + penalty,
        mean_real: dr.iter().sum::<f64>() / nr,
        mean_fake: df.iter().sum::<f64>() / nf,
    };
    Ok((stats, grads))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscStats {
    pub loss: DiscLoss,
    pub updates: usize,
    /// Real samples were drawn with replacement because the dataset is smaller than a batch.
    pub real_with_replacement: bool,
}

/// Transition discriminator `D_φ` with fixed input normalization.
#[derive(Clone, Debug)]
pub struct Discriminator<T: Scalar> {
    pub net: Mlp<T>,
    mean: Vec<f64>,
    std: Vec<f64>,
    pub config: DiscriminatorConfig,
    adam: Adam<T>,
}

impl<T: Scalar> Discriminator<T> {
    pub fn new<R: Rng + ?Sized>(spec: MlpSpec, mean: Vec<f64>, std: Vec<f64>, config: DiscriminatorConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        if mean.len() != spec.input_dim || std.len() != spec.input_dim {
            return Err(Error::shape("discriminator normalization", &[spec.input_dim, spec.input_dim], &[mean.len(), std.len()]));
        }
        if std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidArgument("normalization std must be positive".into()));
        }
        let net = Mlp::new(spec, 1.0, rng)?;
        let adam = Adam::new(&net, config.learning_rate);
        Ok(Self { net, mean, std, config, adam })
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn normalize(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for mut row in out.axis_iter_mut(Axis(0)) {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        out
    }

    /// Raw scores `D(x)` of unnormalized transitions.
    pub fn scores(&self, transitions: ArrayView2<f64>) -> Result<Vec<f64>> {
        if transitions.ncols() != self.input_dim() {
            return Err(Error::shape("discriminator input", &[self.input_dim()], &[transitions.ncols()]));
        }
        let x = cast::<T>(&self.normalize(transitions));
        Ok(self.net.predict(x.view())?.iter().map(|v| v.to_f64_lossy()).collect())
    }

    /// Adam steps on the loss, real rows from `real`, fake rows from `fake`, both unnormalized.
    pub fn train_step<R: Rng + ?Sized>(&mut self, real: ArrayView2<f64>, fake: ArrayView2<f64>, rng: &mut R) -> Result<DiscStats> {
        if real.nrows() == 0 || fake.nrows() == 0 {
            return Err(Error::InvalidArgument("discriminator training needs real and fake transitions".into()));
        }
        let b = self.config.batch_size;
        let mut out = DiscStats { real_with_replacement: real.nrows() < b, ..DiscStats::default() };
        let mut acc = DiscLoss::default();
        for _ in 0..self.config.updates_per_iteration {
            let ri = batch_indices(real.nrows(), b, rng);
            let fi = batch_indices(fake.nrows(), b, rng);
            let xr = self.normalize(real.select(Axis(0), &ri).view());
            let xf = self.normalize(fake.select(Axis(0), &fi).view());
            let (loss, grads) = disc_loss(&self.net, xr.view(), xf.view(), self.config.gp_coef)?;
            if !loss.total.is_finite() || !self.adam.step(&mut self.net, &grads)? {
                continue;
            }
            out.updates += 1;
            acc.lsgan += loss.lsgan;
            acc.penalty += loss.penalty;
            acc.total += loss.total;
            acc.mean_real += loss.mean_real;
            acc.mean_fake += loss.mean_fake;
        }
        if out.updates > 0 {
            let k = out.updates as f64;
            out.loss = DiscLoss {
                lsgan: acc.lsgan / k,
                penalty: acc.penalty / k,
                total: acc.total / k,
                mean_real: acc.mean_real / k,
                mean_fake: acc.mean_fake / k,
            };
        }
        Ok(out)
    }
}

fn batch_indices<R: Rng + ?Sized>(available: usize, batch: usize, rng: &mut R) -> Vec<usize> {
    if available >= batch {
        sample_indices(rng, available, batch).into_vec()
    } else {
        (0..batch).map(|_| rng.random_range(0..available)).collect()
    }
}

impl<T: Scalar> StyleScorer for Discriminator<T> {
    fn score(&mut self, transitions: ArrayView2<f64>) -> Result<Vec<f64>> {
        let c = self.config.score_clamp;
        Ok(self.scores(transitions)?.into_iter().map(|d| style_reward(d.clamp(-c, c))).collect())
    }
}

impl<T: Scalar> ParamSet<T> for Discriminator<T> {
    fn tensors(&self) -> Vec<&[T]> {
        self.net.tensors()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        self.net.tensors_mut()
    }

    fn zeros_like(&self) -> Self {
        Self { net: self.net.zeros_like(), ..self.clone() }
    }
}

impl<T: Scalar> Checkpoint<T> for Discriminator<T> {
    fn describe(&self) -> String {
        format!("discriminator {}", Checkpoint::describe(&self.net))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::gradcheck::check_parameters;
    use crate::nets::Activation;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn randn(rows: usize, cols: usize, shift: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| shift + rand::Rng::sample::<f64, _>(rng, StandardNormal))
    }

    #[test]
    fn reward_landmarks() {
        assert_eq!(style_reward(1.0), 1.0);
        assert_eq!(style_reward(-1.0), 0.0);
        assert_eq!(style_reward(0.0), 0.75);
        assert_eq!(style_reward(3.0), 0.0);
    }

    #[test]
    fn lsgan_landmarks() {
        assert_eq!(lsgan_loss(&[1.0, 1.0], &[-1.0]), 0.0);
        assert_eq!(lsgan_loss(&[0.0; 4], &[0.0; 3]), 2.0);
    }

    #[test]
    fn linear_penalty_is_half_coef_weight_norm() {
        let mut net = Mlp::<f64>::zeros(MlpSpec::new(4, &[], 1, Activation::Identity)).unwrap();
        let w = [0.3, -1.2, 0.7, 2.0];
        for (i, v) in w.iter().enumerate() {
            net.layers_mut()[0].weight[[0, i]] = *v;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (l, _) = disc_loss(&net, randn(7, 4, 0.0, &mut rng).view(), randn(5, 4, 0.0, &mut rng).view(), 10.0).unwrap();
        let norm2: f64 = w.iter().map(|v| v * v).sum();
        assert!((l.penalty - 5.0 * norm2).abs() < 1e-10);
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::<f64>::new(MlpSpec::new(6, &[10, 8], 1, Activation::Identity), 1.0, &mut rng).unwrap();
        let real = randn(5, 6, 0.5, &mut rng);
        let fake = randn(4, 6, -0.5, &mut rng);
        let (_, grads) = disc_loss(&net, real.view(), fake.view(), 10.0).unwrap();
        let loss = |n: &Mlp<f64>| disc_loss(n, real.view(), fake.view(), 10.0).unwrap().0.total;
        let rep = check_parameters(&net, &grads, loss, 1e-5, 40, &mut rng);
        assert!(rep.max_rel_error < 1e-4, "{rep:?}");
    }

    #[test]
    fn empty_batch_rejected() {
        let net = Mlp::<f64>::zeros(MlpSpec::new(2, &[], 1, Activation::Identity)).unwrap();
        assert!(disc_loss(&net, Array2::zeros((0, 2)).view(), Array2::zeros((3, 2)).view(), 1.0).is_err());
    }

    fn small(seed: u64, gp: f64) -> (Discriminator<f64>, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = DiscriminatorConfig { gp_coef: gp, batch_size: 64, learning_rate: 1e-3, ..Default::default() };
        let d = Discriminator::new(MlpSpec::new(8, &[32, 32], 1, Activation::Identity), vec![0.0; 8], vec![1.0; 8], cfg, &mut rng).unwrap();
        (d, rng)
    }

    #[test]
    fn separates_shifted_gaussians() {
        let (mut d, mut rng) = small(1, 10.0);
        let real = randn(512, 8, 2.0, &mut rng);
        let fake = randn(512, 8, -2.0, &mut rng);
        for _ in 0..150 {
            d.train_step(real.view(), fake.view(), &mut rng).unwrap();
        }
        let r = d.scores(real.view()).unwrap();
        let f = d.scores(fake.view()).unwrap();
        assert!(r.iter().sum::<f64>() / 512.0 > 0.8);
        assert!(f.iter().sum::<f64>() / 512.0 < -0.8);
    }

    #[test]
    fn identical_distributions_score_near_zero() {
        let (mut d, mut rng) = small(2, 10.0);
        let data = randn(2048, 8, 0.0, &mut rng);
        let (a, b) = data.view().split_at(Axis(0), 1024);
        for _ in 0..200 {
            d.train_step(a, b, &mut rng).unwrap();
        }
        let s = d.scores(data.view()).unwrap();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert!(mean.abs() < 0.15, "{mean}");
        let r = d.score(data.view()).unwrap();
        let style = r.iter().sum::<f64>() / r.len() as f64;
        assert!((style - 0.75).abs() < 0.1, "{style}");
    }

    #[test]
    fn penalty_shrinks_real_input_gradients() {
        let grad_norm = |gp: f64| {
            let (mut d, mut rng) = small(4, gp);
            let real = randn(512, 8, 1.0, &mut rng);
            let fake = randn(512, 8, -1.0, &mut rng);
            for _ in 0..150 {
                d.train_step(real.view(), fake.view(), &mut rng).unwrap();
            }
            d.net.input_gradient_penalty(real.view()).unwrap().0
        };
        let (free, penalized) = (grad_norm(0.0), grad_norm(10.0));
        assert!(penalized < free, "{penalized} vs {free}");
    }

    #[test]
    fn scorer_clamps_and_normalizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut d = Discriminator::<f64>::new(MlpSpec::new(2, &[], 1, Activation::Identity), vec![1.0, 0.0], vec![2.0, 1.0], DiscriminatorConfig::default(), &mut rng).unwrap();
        d.net.layers_mut()[0].weight.assign(&ndarray::array![[1.0, 0.0]]);
        d.net.layers_mut()[0].bias.fill(0.0);
        let x = ndarray::array![[3.0, 9.0], [101.0, 0.0]];
        assert_eq!(d.scores(x.view()).unwrap(), vec![1.0, 50.0]);
        assert_eq!(d.score(x.view()).unwrap(), vec![1.0, style_reward(5.0)]);
    }

    #[test]
    fn small_dataset_sampled_with_replacement() {
        let (mut d, mut rng) = small(6, 0.0);
        let s = d.train_step(randn(10, 8, 0.0, &mut rng).view(), randn(100, 8, 0.0, &mut rng).view(), &mut rng).unwrap();
        assert!(s.real_with_replacement);
        assert_eq!(s.updates, 2);
    }

    proptest! {
        #[test]
        fn reward_is_bounded(d in -100.0f64..100.0) {
            let r = style_reward(d);
            prop_assert!((0.0..=1.0).contains(&r));
            prop_assert_eq!(r == 0.0, (d - 1.0).abs() >= 2.0);
        }

        #[test]
        fn lsgan_non_negative(r in prop::collection::vec(-5.0f64..5.0, 1..20), f in prop::collection::vec(-5.0f64..5.0, 1..20)) {
            prop_assert!(lsgan_loss(&r, &f) >= 0.0);
        }
    }
}
