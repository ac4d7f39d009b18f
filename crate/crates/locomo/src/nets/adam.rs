use super::{ParamSet, Scalar};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    step: u64,
    skipped: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new<P: ParamSet<T>>(params: &P, lr: f64) -> Self {
        let shapes = params.shapes();
        Self {
            lr: T::of(lr),
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            eps: T::of(1e-8),
            step: 0,
            skipped: 0,
            m: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            v: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Updates rejected because the gradient contained NaN or infinity.
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    /// Applies one bias-corrected update. Returns `Ok(false)` and leaves the
    /// parameters untouched if any gradient entry is non-finite.
    pub fn step<P: ParamSet<T>>(&mut self, params: &mut P, grads: &P) -> Result<bool> {
        if params.shapes() != self.m.iter().map(Vec::len).collect::<Vec<_>>() || grads.shapes() != params.shapes() {
            return Err(Error::shape("adam moments", &params.shapes(), &grads.shapes()));
        }
        if !grads.all_finite() {
            self.skipped += 1;
            return Ok(false);
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = T::one() - self.beta1.powi(t);
        let bc2 = T::one() - self.beta2.powi(t);
        let (b1, b2) = (self.beta1, self.beta2);
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = b1 * m[i] + (T::one() - b1) * gi;
                v[i] = b2 * v[i] + (T::one() - b2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(true)
    }
}
