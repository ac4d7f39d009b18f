use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Checkpoint, ParamSet, Scalar};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
    Elu,
}

pub fn elu<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        x.exp() - T::one()
    }
}

pub fn elu_grad<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else {
        x.exp()
    }
}

fn elu_second<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        T::zero()
    } else {
        x.exp()
    }
}

impl Activation {
    fn apply<T: Scalar>(self, z: &Array2<T>) -> Array2<T> {
        match self {
            Activation::Identity => z.clone(),
            Activation::Tanh => z.mapv(|v| v.tanh()),
            Activation::Elu => z.mapv(elu),
        }
    }

    /// Multiplies `grad` in place by the activation slope, given pre-activation `z`
    /// and post-activation `a`.
    fn backprop<T: Scalar>(self, grad: &mut Array2<T>, z: &Array2<T>, a: &Array2<T>) {
        match self {
            Activation::Identity => {}
            Activation::Tanh => Zip::from(grad).and(a).for_each(|g, &y| *g *= T::one() - y * y),
            Activation::Elu => Zip::from(grad).and(z).for_each(|g, &x| *g *= elu_grad(x)),
        }
    }
}

/// Layer widths of a multilayer perceptron. Hidden layers always use ELU.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    pub output_activation: Activation,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden: &[usize], output_dim: usize, output_activation: Activation) -> Self {
        Self {
            input_dim,
            hidden: hidden.to_vec(),
            output_dim,
            output_activation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.iter().any(|&w| w == 0) {
            return Err(Error::InvalidArgument(format!("layer widths must be positive: {self:?}")));
        }
        Ok(())
    }

    /// (fan_in, fan_out) per layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut widths = vec![self.input_dim];
        widths.extend(&self.hidden);
        widths.push(self.output_dim);
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn describe(&self) -> String {
        format!(
            "mlp({}->{:?}->{},{:?})",
            self.input_dim, self.hidden, self.output_dim, self.output_activation
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    /// `out x in`
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> Dense<T> {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Array2::zeros((fan_out, fan_in)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn affine(&self, x: &ArrayView2<T>) -> Array2<T> {
        let mut z = x.dot(&self.weight.t());
        z += &self.bias;
        z
    }
}

/// Random `rows x cols` matrix with orthonormal rows (or columns, whichever is
/// shorter) scaled by `gain`.
pub fn orthogonal<T: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Array2<T> {
    let (long, short) = if rows >= cols { (rows, cols) } else { (cols, rows) };
    // Gram-Schmidt on `short` vectors of length `long`.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(short);
    while basis.len() < short {
        let mut v: Vec<f64> = (0..long).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for b in &basis {
                let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    Array2::from_shape_fn((rows, cols), |(i, j)| {
        let v = if rows >= cols { basis[j][i] } else { basis[i][j] };
        T::of(gain * v)
    })
}

/// Activations recorded by [`Mlp::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct MlpCache<T> {
    inputs: Vec<Array2<T>>,
    pre: Vec<Array2<T>>,
    output: Array2<T>,
}

impl<T> MlpCache<T> {
    pub fn output(&self) -> &Array2<T> {
        &self.output
    }

    pub fn batch(&self) -> usize {
        self.output.nrows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp<T> {
    spec: MlpSpec,
    layers: Vec<Dense<T>>,
}

impl<T: Scalar> Mlp<T> {
    /// Orthogonal init with gain √2 on hidden layers and `output_gain` on the
    /// final layer; zero biases.
    pub fn new<R: Rng + ?Sized>(spec: MlpSpec, output_gain: f64, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let dims = spec.layer_dims();
        let last = dims.len() - 1;
        let layers = dims
            .iter()
            .enumerate()
            .map(|(i, &(fan_in, fan_out))| {
                let gain = if i == last { output_gain } else { 2f64.sqrt() };
                Dense {
                    weight: orthogonal(fan_out, fan_in, gain, rng),
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(Self { spec, layers })
    }

    pub fn zeros(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let layers = spec.layer_dims().iter().map(|&(i, o)| Dense::zeros(i, o)).collect();
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.layers
    }

    fn check_input(&self, x: &ArrayView2<T>) -> Result<()> {
        if x.ncols() != self.spec.input_dim {
            return Err(Error::shape("mlp input", &[x.nrows(), self.spec.input_dim], x.shape()));
        }
        Ok(())
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.spec.output_activation
        } else {
            Activation::Elu
        }
    }

    pub fn forward(&self, x: ArrayView2<T>) -> Result<(Array2<T>, MlpCache<T>)> {
        self.check_input(&x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(&a.view());
            let next = self.activation(i).apply(&z);
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        let cache = MlpCache {
            inputs,
            pre,
            output: a.clone(),
        };
        Ok((a, cache))
    }

    /// Forward pass without keeping intermediate activations.
    pub fn predict(&self, x: ArrayView2<T>) -> Result<Array2<T>> {
        self.check_input(&x)?;
        let mut a = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(&a.view());
            a = self.activation(i).apply(&z);
        }
        Ok(a)
    }

    /// Reverse-mode pass. Accumulates parameter gradients into `grads` and
    /// returns the gradient with respect to the input.
    pub fn backward_into(&self, cache: &MlpCache<T>, d_out: ArrayView2<T>, grads: &mut Mlp<T>) -> Result<Array2<T>> {
        if cache.pre.len() != self.layers.len() || cache.output.shape() != d_out.shape() {
            return Err(Error::shape("mlp backward (stale cache?)", cache.output.shape(), d_out.shape()));
        }
        if grads.spec != self.spec {
            return Err(Error::InvalidArgument("gradient buffer spec differs from network".into()));
        }
        let last = self.layers.len() - 1;
        let mut dz = d_out.to_owned();
        self.activation(last).backprop(&mut dz, &cache.pre[last], &cache.output);
        for i in (0..self.layers.len()).rev() {
            let g = &mut grads.layers[i];
            g.weight += &dz.t().dot(&cache.inputs[i]);
            g.bias += &dz.sum_axis(Axis(0));
            let da = dz.dot(&self.layers[i].weight);
            if i == 0 {
                return Ok(da);
            }
            dz = da;
            // inputs[i] is the activation of layer i-1
            self.activation(i - 1).backprop(&mut dz, &cache.pre[i - 1], &cache.inputs[i]);
        }
        unreachable!("network has at least one layer")
    }

    pub fn backward(&self, cache: &MlpCache<T>, d_out: ArrayView2<T>) -> Result<(Mlp<T>, Array2<T>)> {
        let mut grads = self.zeros_like();
        let dx = self.backward_into(cache, d_out, &mut grads)?;
        Ok((grads, dx))
    }

    /// Gradient of the scalar output with respect to the input, one row per sample.
    pub fn input_gradient(&self, x: ArrayView2<T>) -> Result<Array2<T>> {
        let (y, cache) = self.forward(x)?;
        let ones = Array2::from_elem(y.raw_dim(), T::one());
        let mut scratch = self.zeros_like();
        self.backward_into(&cache, ones.view(), &mut scratch)
    }

    /// Mean over the batch of `‖∇ₓ f(x)‖²` for a scalar network with linear output,
    /// together with its gradient with respect to every parameter.
    pub fn input_gradient_penalty(&self, x: ArrayView2<T>) -> Result<(T, Mlp<T>)> {
        if self.spec.output_dim != 1 || self.spec.output_activation != Activation::Identity {
            return Err(Error::InvalidArgument(
                "gradient penalty requires a scalar network with identity output".into(),
            ));
        }
        let (_, cache) = self.forward(x)?;
        let n = self.layers.len();
        let batch = x.nrows();

        // delta[k]: derivative of the output w.r.t. pre-activation of layer k.
        // u[k]: derivative of the output w.r.t. the input of layer k.
        let mut delta: Vec<Array2<T>> = vec![Array2::zeros((0, 0)); n];
        let mut u: Vec<Array2<T>> = vec![Array2::zeros((0, 0)); n];
        delta[n - 1] = Array2::from_elem((batch, 1), T::one());
        for k in (0..n).rev() {
            u[k] = delta[k].dot(&self.layers[k].weight);
            if k > 0 {
                let mut d = u[k].clone();
                Zip::from(&mut d).and(&cache.pre[k - 1]).for_each(|v, &z| *v *= elu_grad(z));
                delta[k - 1] = d;
            }
        }
        let g = &u[0];
        let value = g.iter().map(|&v| v * v).sum::<T>() / T::of(batch as f64);

        let mut grads = self.zeros_like();
        // Reverse through the input-gradient computation.
        let mut ubar = g.mapv(|v| v * T::of(2.0 / batch as f64));
        let mut injected: Vec<Array2<T>> = Vec::with_capacity(n.saturating_sub(1));
        for k in 0..n {
            grads.layers[k].weight += &delta[k].t().dot(&ubar);
            if k + 1 < n {
                let dbar = ubar.dot(&self.layers[k].weight.t());
                let mut next = dbar.clone();
                Zip::from(&mut next).and(&cache.pre[k]).for_each(|v, &z| *v *= elu_grad(z));
                let mut inj = dbar;
                Zip::from(&mut inj)
                    .and(&u[k + 1])
                    .and(&cache.pre[k])
                    .for_each(|v, &uu, &z| *v *= uu * elu_second(z));
                injected.push(inj);
                ubar = next;
            }
        }
        // Reverse through the forward pass; the output pre-activation receives no adjoint.
        if n >= 2 {
            let mut abar: Array2<T> = Array2::zeros(cache.pre[n - 2].raw_dim());
            for k in (0..n - 1).rev() {
                let mut zbar = abar;
                Zip::from(&mut zbar).and(&cache.pre[k]).for_each(|v, &z| *v *= elu_grad(z));
                zbar += &injected[k];
                grads.layers[k].weight += &zbar.t().dot(&cache.inputs[k]);
                grads.layers[k].bias += &zbar.sum_axis(Axis(0));
                abar = zbar.dot(&self.layers[k].weight);
            }
        }
        Ok((value, grads))
    }
}

impl<T: Scalar> ParamSet<T> for Mlp<T> {
    fn tensors(&self) -> Vec<&[T]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &self.layers {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &mut self.layers {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    fn zeros_like(&self) -> Self {
        Mlp::zeros(self.spec.clone()).expect("spec already validated")
    }
}

impl<T: Scalar> Checkpoint<T> for Mlp<T> {
    fn describe(&self) -> String {
        self.spec.describe()
    }
}
