use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rand::Rng;

use super::TeacherActor;
use crate::error::{Error, Result};
use crate::nets::{cast, Checkpoint, Lstm, LstmState, Mlp, NetworkTable, ParamSet, Scalar};

/// Proprioception-only policy: LSTM memory, latent head `g_m` and the
/// teacher's low-level net.
#[derive(Clone, Debug, PartialEq)]
pub struct StudentPolicy<T> {
    pub memory: Lstm<T>,
    pub head: Mlp<T>,
    pub low: Mlp<T>,
}

impl<T: Scalar> StudentPolicy<T> {
    pub fn from_parts(memory: Lstm<T>, head: Mlp<T>, low: Mlp<T>) -> Result<Self> {
        let proprio = memory.spec().input_dim;
        if head.spec().input_dim != memory.spec().output_dim() {
            return Err(Error::shape("student head input", &[memory.spec().output_dim()], &[head.spec().input_dim]));
        }
        if low.spec().input_dim != head.spec().output_dim + proprio {
            return Err(Error::shape("student low-level input", &[head.spec().output_dim + proprio], &[low.spec().input_dim]));
        }
        Ok(Self { memory, head, low })
    }

    pub fn proprio_dim(&self) -> usize {
        self.memory.spec().input_dim
    }

    pub fn latent_dim(&self) -> usize {
        self.head.spec().output_dim
    }

    pub fn action_dim(&self) -> usize {
        self.low.spec().output_dim
    }

    pub fn initial_state(&self, batch: usize) -> LstmState<T> {
        LstmState::zeros(self.memory.spec(), batch)
    }

    /// One control step: actions, latents and the next memory state.
    pub fn step(&self, proprio: ArrayView2<f64>, state: &LstmState<T>) -> Result<(Array2<f64>, Array2<f64>, LstmState<T>)> {
        let x = cast::<T>(&proprio.to_owned());
        let (m, next) = self.memory.step(x.view(), state)?;
        let latent = self.head.predict(m.view())?;
        let z = concatenate(Axis(1), &[latent.view(), x.view()]).expect("row counts match");
        let a = self.low.predict(z.view())?;
        Ok((a.mapv(|v| v.to_f64_lossy()), latent.mapv(|v| v.to_f64_lossy()), next))
    }
}

/// Copies the teacher's low-level weights and draws fresh memory and head weights.
pub fn init_student_from_teacher<T: Scalar, R: Rng + ?Sized>(teacher: &TeacherActor<T>, table: &NetworkTable, rng: &mut R) -> Result<StudentPolicy<T>> {
    let proprio = teacher.proprio_dim();
    let memory = Lstm::new(table.memory(proprio), rng)?;
    let head = Mlp::new(table.memory_head(), 1.0, rng)?;
    if head.spec().output_dim != teacher.latent_dim() {
        return Err(Error::shape("student latent", &[teacher.latent_dim()], &[head.spec().output_dim]));
    }
    StudentPolicy::from_parts(memory, head, teacher.low.clone())
}

impl<T: Scalar> ParamSet<T> for StudentPolicy<T> {
    fn tensors(&self) -> Vec<&[T]> {
        let mut v = self.memory.tensors();
        v.extend(self.head.tensors());
        v.extend(self.low.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut v = self.memory.tensors_mut();
        v.extend(self.head.tensors_mut());
        v.extend(self.low.tensors_mut());
        v
    }

    fn zeros_like(&self) -> Self {
        Self { memory: self.memory.zeros_like(), head: self.head.zeros_like(), low: self.low.zeros_like() }
    }
}

impl<T: Scalar> Checkpoint<T> for StudentPolicy<T> {
    fn describe(&self) -> String {
        format!("student[{} | {} | {}]", self.memory.spec().describe(), self.head.spec().describe(), self.low.spec().describe())
    }
}
