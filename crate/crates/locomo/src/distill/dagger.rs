use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{StudentPolicy, TeacherActor};
use crate::env::{LocomotionEnv, ObsMode};
use crate::error::{Error, Result};
use crate::nets::{cast, clip_global_norm, Adam, LstmState, ParamSet, Scalar};
use crate::ppo::{NoStyle, VectorEnv};

/// Environments a student can be rolled out in while the teacher labels
/// every visited state.
pub trait DistillEnv {
    fn num_envs(&self) -> usize;
    /// `o^p`, one row per env.
    fn proprio(&self) -> Array2<f64>;
    /// Full teacher input `[o^p | i^e | s^p]`.
    fn teacher_obs(&self) -> Array2<f64>;
    /// Applies actions and returns per-env done flags.
    fn step_actions(&mut self, actions: ArrayView2<f64>) -> Result<Vec<bool>>;
}

impl DistillEnv for LocomotionEnv {
    fn num_envs(&self) -> usize {
        VectorEnv::num_envs(self)
    }

    fn proprio(&self) -> Array2<f64> {
        self.observe_proprio()
    }

    fn teacher_obs(&self) -> Array2<f64> {
        debug_assert_eq!(self.config().observation, ObsMode::Privileged);
        self.observe()
    }

    fn step_actions(&mut self, actions: ArrayView2<f64>) -> Result<Vec<bool>> {
        Ok(self.step(actions, &mut NoStyle)?.dones)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillConfig {
    /// Truncated-BPTT window, control steps.
    pub window: usize,
    /// Weight of the latent reconstruction loss.
    pub beta: f64,
    pub learning_rate: f64,
    pub max_grad_norm: f64,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self { window: 50, beta: 1.0, learning_rate: 1e-3, max_grad_norm: 1.0 }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || !(self.beta >= 0.0) || !(self.learning_rate > 0.0) || !(self.max_grad_norm > 0.0) {
            return Err(Error::Config(format!("invalid distillation config {self:?}")));
        }
        Ok(())
    }
}

/// One window of student-visited states with teacher labels.
#[derive(Clone, Debug)]
pub struct DistillBatch<T> {
    /// `proprio[t]` is `(envs x o^p)`.
    pub proprio: Vec<Array2<f64>>,
    pub teacher_actions: Vec<Array2<f64>>,
    pub teacher_latents: Vec<Array2<f64>>,
    /// Rows whose memory is zeroed before step `t`.
    pub resets: Vec<Vec<bool>>,
    /// False where the teacher label was unusable.
    pub valid: Vec<Vec<bool>>,
    pub initial_state: LstmState<T>,
    pub dropped: usize,
}

impl<T> DistillBatch<T> {
    pub fn len(&self) -> usize {
        self.proprio.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proprio.is_empty()
    }
}

/// Rolls out the student and carries its memory across windows.
pub struct DaggerCollector<T> {
    state: LstmState<T>,
    pending_reset: Vec<bool>,
}

impl<T: Scalar> DaggerCollector<T> {
    pub fn new(student: &StudentPolicy<T>, num_envs: usize) -> Self {
        Self { state: student.initial_state(num_envs), pending_reset: vec![false; num_envs] }
    }

    pub fn state(&self) -> &LstmState<T> {
        &self.state
    }

    /// Steps `env` with student actions for `steps` steps, labelling each visited state with the teacher.
    pub fn collect<E: DistillEnv + ?Sized>(&mut self, student: &StudentPolicy<T>, teacher: &TeacherActor<T>, env: &mut E, steps: usize) -> Result<DistillBatch<T>> {
        let n = env.num_envs();
        if self.state.batch() != n {
            return Err(Error::shape("dagger memory", &[n], &[self.state.batch()]));
        }
        let mut batch = DistillBatch {
            proprio: Vec::with_capacity(steps),
            teacher_actions: Vec::with_capacity(steps),
            teacher_latents: Vec::with_capacity(steps),
            resets: Vec::with_capacity(steps),
            valid: Vec::with_capacity(steps),
            initial_state: self.state.clone(),
            dropped: 0,
        };
        for _ in 0..steps {
            let proprio = env.proprio();
            let (actions, latents) = teacher.label(env.teacher_obs().view())?;
            let valid: Vec<bool> = (0..n)
                .map(|i| actions.row(i).iter().chain(latents.row(i).iter()).all(|v| v.is_finite()))
                .collect();
            let dropped = valid.iter().filter(|v| !**v).count();
            if dropped > 0 {
                log::warn!("teacher labels non-finite for {dropped} env(s); rows dropped");
                batch.dropped += dropped;
            }
            self.state.reset_rows(&self.pending_reset);
            let (student_actions, _, next) = student.step(proprio.view(), &self.state)?;
            self.state = next;
            let dones = env.step_actions(student_actions.view())?;
            batch.resets.push(std::mem::replace(&mut self.pending_reset, dones));
            batch.proprio.push(proprio);
            batch.teacher_actions.push(actions);
            batch.teacher_latents.push(latents);
            batch.valid.push(valid);
        }
        Ok(batch)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DistillLoss {
    /// Action MSE.
    pub imitation: f64,
    /// Latent MSE.
    pub reconstruction: f64,
    pub total: f64,
}

/// Imitation plus `beta` times reconstruction over a window, and the gradient
/// by backpropagation through time.
pub fn distill_loss_and_grad<T: Scalar>(student: &StudentPolicy<T>, batch: &DistillBatch<T>, beta: f64) -> Result<(DistillLoss, StudentPolicy<T>)> {
    let steps = batch.len();
    if steps == 0 {
        return Err(Error::InvalidArgument("empty distillation batch".into()));
    }
    let n = batch.proprio[0].nrows();
    let na = student.action_dim();
    let nl = student.latent_dim();
    let xs: Vec<Array2<T>> = batch.proprio.iter().map(cast::<T>).collect();
    let (ms, _, mem_cache) = student.memory.forward_sequence(&xs, &batch.initial_state, &batch.resets)?;
    let m_views: Vec<_> = ms.iter().map(|m| m.view()).collect();
    let x_views: Vec<_> = xs.iter().map(|x| x.view()).collect();
    let m_all = concatenate(Axis(0), &m_views).expect("memory rows");
    let x_all = concatenate(Axis(0), &x_views).expect("proprio rows");
    let (latent, head_cache) = student.head.forward(m_all.view())?;
    let z = concatenate(Axis(1), &[latent.view(), x_all.view()]).expect("row counts");
    let (action, low_cache) = student.low.forward(z.view())?;

    let weights: Vec<f64> = batch.valid.iter().flatten().map(|&v| v as u8 as f64).collect();
    let count: f64 = weights.iter().sum();
    if count == 0.0 {
        return Err(Error::InvalidArgument("distillation batch has no valid labels".into()));
    }
    let mut loss = DistillLoss::default();
    let mut d_action = Array2::<T>::zeros((steps * n, na));
    let mut d_latent = Array2::<T>::zeros((steps * n, nl));
    for t in 0..steps {
        for i in 0..n {
            let r = t * n + i;
            let w = weights[r];
            if w == 0.0 {
                continue;
            }
            for j in 0..na {
                let e = action[[r, j]].to_f64_lossy() - batch.teacher_actions[t][[i, j]];
                loss.imitation += e * e / (count * na as f64);
                d_action[[r, j]] = T::of(2.0 * e / (count * na as f64));
            }
            for j in 0..nl {
                let e = latent[[r, j]].to_f64_lossy() - batch.teacher_latents[t][[i, j]];
                loss.reconstruction += e * e / (count * nl as f64);
                d_latent[[r, j]] = T::of(beta * 2.0 * e / (count * nl as f64));
            }
        }
    }
    loss.total = loss.imitation + beta * loss.reconstruction;

    let mut grads = student.zeros_like();
    let dz = student.low.backward_into(&low_cache, d_action.view(), &mut grads.low)?;
    d_latent += &dz.slice(s![.., ..nl]);
    let dm = student.head.backward_into(&head_cache, d_latent.view(), &mut grads.head)?;
    let d_outputs: Vec<Array2<T>> = (0..steps).map(|t| dm.slice(s![t * n..(t + 1) * n, ..]).to_owned()).collect();
    student.memory.backward_sequence(&mem_cache, &d_outputs, &mut grads.memory)?;
    Ok((loss, grads))
}

/// One Adam step on a window. Returns `None` when the loss or gradient is not finite.
pub fn distill_update<T: Scalar>(student: &mut StudentPolicy<T>, adam: &mut Adam<T>, batch: &DistillBatch<T>, cfg: &DistillConfig) -> Result<Option<DistillLoss>> {
    let (loss, mut grads) = distill_loss_and_grad(student, batch, cfg.beta)?;
    if !loss.total.is_finite() || !grads.all_finite() {
        return Ok(None);
    }
    clip_global_norm(&mut grads, T::of(cfg.max_grad_norm));
    Ok(adam.step(student, &grads)?.then_some(loss))
}
