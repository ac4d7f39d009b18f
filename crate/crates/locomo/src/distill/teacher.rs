use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::nets::{cast, Checkpoint, Mlp, MlpCache, NetworkTable, ParamSet, Scalar};
use crate::ppo::ActorNet;

/// Stage-II actor: terrain encoder `g_e`, privileged encoder `g_p` and a
/// low-level net over `[l^e; l^p; o^p]`.
///
/// Input rows are laid out `[o^p | i^e | s^p]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TeacherActor<T> {
    pub terrain: Mlp<T>,
    pub privileged: Mlp<T>,
    pub low: Mlp<T>,
    proprio_dim: usize,
}

pub struct TeacherCache<T> {
    terrain: MlpCache<T>,
    privileged: MlpCache<T>,
    low: MlpCache<T>,
}

impl<T: Scalar> TeacherActor<T> {
    pub fn from_parts(terrain: Mlp<T>, privileged: Mlp<T>, low: Mlp<T>, proprio_dim: usize) -> Result<Self> {
        let latent = terrain.spec().output_dim + privileged.spec().output_dim;
        if low.spec().input_dim != latent + proprio_dim {
            return Err(Error::shape("teacher low-level input", &[latent + proprio_dim], &[low.spec().input_dim]));
        }
        Ok(Self { terrain, privileged, low, proprio_dim })
    }

    /// Networks sized by `table` for the given observation blocks.
    pub fn new<R: Rng + ?Sized>(table: &NetworkTable, proprio: usize, privileged: usize, actions: usize, rng: &mut R) -> Result<Self> {
        let terrain = Mlp::new(table.terrain_encoder(), 1.0, rng)?;
        let priv_net = Mlp::new(table.privileged_encoder(privileged), 1.0, rng)?;
        let low = Mlp::new(table.stage2_low_level(proprio, actions), 0.01, rng)?;
        Self::from_parts(terrain, priv_net, low, proprio)
    }

    pub fn proprio_dim(&self) -> usize {
        self.proprio_dim
    }

    pub fn scan_dim(&self) -> usize {
        self.terrain.spec().input_dim
    }

    pub fn privileged_dim(&self) -> usize {
        self.privileged.spec().input_dim
    }

    pub fn latent_dim(&self) -> usize {
        self.terrain.spec().output_dim + self.privileged.spec().output_dim
    }

    fn split<'a>(&self, x: &'a ArrayView2<T>) -> (ArrayView2<'a, T>, ArrayView2<'a, T>, ArrayView2<'a, T>) {
        let p = self.proprio_dim;
        let e = p + self.scan_dim();
        (x.slice(s![.., ..p]), x.slice(s![.., p..e]), x.slice(s![.., e..]))
    }

    fn check(&self, x: &ArrayView2<T>) -> Result<()> {
        let want = self.proprio_dim + self.scan_dim() + self.privileged_dim();
        if x.ncols() != want {
            return Err(Error::shape("teacher input", &[x.nrows(), want], x.shape()));
        }
        Ok(())
    }

    /// `[l^e; l^p]` for each row.
    pub fn latents(&self, x: ArrayView2<T>) -> Result<Array2<T>> {
        self.check(&x)?;
        let (_, scan, privileged) = self.split(&x);
        let le = self.terrain.predict(scan)?;
        let lp = self.privileged.predict(privileged)?;
        Ok(concatenate(Axis(1), &[le.view(), lp.view()]).expect("row counts match"))
    }

    /// Deterministic actions and latents for `f64` observation rows: the DAgger labels.
    pub fn label(&self, obs: ArrayView2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        let x = cast::<T>(&obs.to_owned());
        let latent = self.latents(x.view())?;
        let z = concatenate(Axis(1), &[latent.view(), x.slice(s![.., ..self.proprio_dim])]).expect("row counts match");
        let a = self.low.predict(z.view())?;
        Ok((a.mapv(|v| v.to_f64_lossy()), latent.mapv(|v| v.to_f64_lossy())))
    }
}

impl<T: Scalar> ActorNet<T> for TeacherActor<T> {
    type Cache = TeacherCache<T>;

    fn input_dim(&self) -> usize {
        self.proprio_dim + self.scan_dim() + self.privileged_dim()
    }

    fn output_dim(&self) -> usize {
        self.low.spec().output_dim
    }

    fn forward(&self, x: ArrayView2<T>) -> Result<(Array2<T>, TeacherCache<T>)> {
        self.check(&x)?;
        let (proprio, scan, privileged) = self.split(&x);
        let (le, terrain) = self.terrain.forward(scan)?;
        let (lp, priv_cache) = self.privileged.forward(privileged)?;
        let z = concatenate(Axis(1), &[le.view(), lp.view(), proprio]).expect("row counts match");
        let (a, low) = self.low.forward(z.view())?;
        Ok((a, TeacherCache { terrain, privileged: priv_cache, low }))
    }

    fn backward_into(&self, cache: &TeacherCache<T>, d_out: ArrayView2<T>, grads: &mut Self) -> Result<()> {
        let dz = self.low.backward_into(&cache.low, d_out, &mut grads.low)?;
        let ne = self.terrain.spec().output_dim;
        let np = self.privileged.spec().output_dim;
        self.terrain.backward_into(&cache.terrain, dz.slice(s![.., ..ne]), &mut grads.terrain)?;
        self.privileged.backward_into(&cache.privileged, dz.slice(s![.., ne..ne + np]), &mut grads.privileged)?;
        Ok(())
    }

    fn describe(&self) -> String {
        format!("teacher[{} | {} | {}]", self.terrain.spec().describe(), self.privileged.spec().describe(), self.low.spec().describe())
    }
}

impl<T: Scalar> ParamSet<T> for TeacherActor<T> {
    fn tensors(&self) -> Vec<&[T]> {
        let mut v = self.terrain.tensors();
        v.extend(self.privileged.tensors());
        v.extend(self.low.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut v = self.terrain.tensors_mut();
        v.extend(self.privileged.tensors_mut());
        v.extend(self.low.tensors_mut());
        v
    }

    fn zeros_like(&self) -> Self {
        Self { terrain: self.terrain.zeros_like(), privileged: self.privileged.zeros_like(), low: self.low.zeros_like(), proprio_dim: self.proprio_dim }
    }
}

impl<T: Scalar> Checkpoint<T> for TeacherActor<T> {
    fn describe(&self) -> String {
        ActorNet::describe(self)
    }
}
