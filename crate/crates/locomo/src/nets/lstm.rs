use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::orthogonal;
use super::{Checkpoint, ParamSet, Scalar};
use crate::error::{Error, Result};

/// Stacked LSTM; `hidden` lists the width of each layer from bottom to top.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LstmSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
}

impl LstmSpec {
    pub fn new(input_dim: usize, hidden: &[usize]) -> Self {
        Self {
            input_dim,
            hidden: hidden.to_vec(),
        }
    }

    pub fn output_dim(&self) -> usize {
        *self.hidden.last().expect("at least one layer")
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden.is_empty() || self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::InvalidArgument(format!("bad lstm spec {self:?}")));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        format!("lstm({}->{:?})", self.input_dim, self.hidden)
    }
}

/// Gate rows are stacked as `[input, forget, cell, output]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmLayer<T> {
    pub w_ih: Array2<T>,
    pub w_hh: Array2<T>,
    pub bias: Array1<T>,
}

/// Recurrent state: one `(batch x width)` matrix per layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmState<T> {
    pub h: Vec<Array2<T>>,
    pub c: Vec<Array2<T>>,
}

impl<T: Scalar> LstmState<T> {
    pub fn zeros(spec: &LstmSpec, batch: usize) -> Self {
        Self {
            h: spec.hidden.iter().map(|&w| Array2::zeros((batch, w))).collect(),
            c: spec.hidden.iter().map(|&w| Array2::zeros((batch, w))).collect(),
        }
    }

    /// Zeroes the state of the given batch rows.
    pub fn reset_rows(&mut self, rows: &[bool]) {
        for m in self.h.iter_mut().chain(self.c.iter_mut()) {
            for (r, &reset) in rows.iter().enumerate() {
                if reset {
                    m.row_mut(r).fill(T::zero());
                }
            }
        }
    }

    pub fn batch(&self) -> usize {
        self.h[0].nrows()
    }
}

struct StepCache<T> {
    x: Array2<T>,
    h_prev: Array2<T>,
    c_prev: Array2<T>,
    i: Array2<T>,
    f: Array2<T>,
    g: Array2<T>,
    o: Array2<T>,
    tanh_c: Array2<T>,
}

/// Per-step, per-layer activations of a sequence forward pass.
pub struct LstmSeqCache<T> {
    steps: Vec<Vec<StepCache<T>>>,
    resets: Vec<Vec<bool>>,
}

impl<T> LstmSeqCache<T> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lstm<T> {
    spec: LstmSpec,
    layers: Vec<LstmLayer<T>>,
}

impl<T: Scalar> Lstm<T> {
    pub fn new<R: Rng + ?Sized>(spec: LstmSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let mut fan_in = spec.input_dim;
        let mut layers = Vec::new();
        for &h in &spec.hidden {
            let mut w_hh = Array2::zeros((4 * h, h));
            for gate in 0..4 {
                w_hh.slice_mut(s![gate * h..(gate + 1) * h, ..])
                    .assign(&orthogonal::<T, _>(h, h, 1.0, rng));
            }
            let mut bias = Array1::zeros(4 * h);
            bias.slice_mut(s![h..2 * h]).fill(T::one());
            layers.push(LstmLayer {
                w_ih: orthogonal(4 * h, fan_in, 1.0, rng),
                w_hh,
                bias,
            });
            fan_in = h;
        }
        Ok(Self { spec, layers })
    }

    pub fn zeros(spec: LstmSpec) -> Result<Self> {
        spec.validate()?;
        let mut fan_in = spec.input_dim;
        let mut layers = Vec::new();
        for &h in &spec.hidden {
            layers.push(LstmLayer {
                w_ih: Array2::zeros((4 * h, fan_in)),
                w_hh: Array2::zeros((4 * h, h)),
                bias: Array1::zeros(4 * h),
            });
            fan_in = h;
        }
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &LstmSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[LstmLayer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LstmLayer<T>] {
        &mut self.layers
    }

    fn check(&self, x: &ArrayView2<T>, state: &LstmState<T>) -> Result<()> {
        if x.ncols() != self.spec.input_dim {
            return Err(Error::shape("lstm input", &[x.nrows(), self.spec.input_dim], x.shape()));
        }
        if state.h.len() != self.layers.len() || state.c.len() != self.layers.len() {
            return Err(Error::shape("lstm state layers", &[self.layers.len()], &[state.h.len()]));
        }
        for (l, &w) in self.spec.hidden.iter().enumerate() {
            let want = [x.nrows(), w];
            if state.h[l].shape() != want || state.c[l].shape() != want {
                return Err(Error::shape("lstm state", &want, state.h[l].shape()));
            }
        }
        Ok(())
    }

    fn layer_step(&self, l: usize, x: &Array2<T>, h: &Array2<T>, c: &Array2<T>) -> (StepCache<T>, Array2<T>) {
        let layer = &self.layers[l];
        let w = self.spec.hidden[l];
        let mut gates = x.dot(&layer.w_ih.t());
        gates += &h.dot(&layer.w_hh.t());
        gates += &layer.bias;
        let i = gates.slice(s![.., 0..w]).mapv(sigmoid);
        let f = gates.slice(s![.., w..2 * w]).mapv(sigmoid);
        let g = gates.slice(s![.., 2 * w..3 * w]).mapv(|v| v.tanh());
        let o = gates.slice(s![.., 3 * w..4 * w]).mapv(sigmoid);
        let mut c_new = &f * c;
        c_new += &(&i * &g);
        let tanh_c = c_new.mapv(|v| v.tanh());
        let cache = StepCache {
            x: x.clone(),
            h_prev: h.clone(),
            c_prev: c.clone(),
            i,
            f,
            g,
            o,
            tanh_c,
        };
        (cache, c_new)
    }

    fn advance(&self, x: ArrayView2<T>, state: &LstmState<T>) -> (Vec<StepCache<T>>, LstmState<T>) {
        let mut input = x.to_owned();
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut next = LstmState { h: Vec::new(), c: Vec::new() };
        for l in 0..self.layers.len() {
            let (sc, c_new) = self.layer_step(l, &input, &state.h[l], &state.c[l]);
            let h_new = &sc.o * &sc.tanh_c;
            input = h_new.clone();
            next.h.push(h_new);
            next.c.push(c_new);
            caches.push(sc);
        }
        (caches, next)
    }

    /// One time step: returns the top-layer output `m_t` and the new state.
    pub fn step(&self, x: ArrayView2<T>, state: &LstmState<T>) -> Result<(Array2<T>, LstmState<T>)> {
        self.check(&x, state)?;
        let (_, next) = self.advance(x, state);
        Ok((next.h.last().expect("layer").clone(), next))
    }

    /// Unrolls over `xs`. `resets[t]` marks batch rows whose state is zeroed
    /// before step `t` (episode boundaries).
    pub fn forward_sequence(
        &self,
        xs: &[Array2<T>],
        initial: &LstmState<T>,
        resets: &[Vec<bool>],
    ) -> Result<(Vec<Array2<T>>, LstmState<T>, LstmSeqCache<T>)> {
        if resets.len() != xs.len() {
            return Err(Error::shape("lstm resets", &[xs.len()], &[resets.len()]));
        }
        let mut state = initial.clone();
        let mut outputs = Vec::with_capacity(xs.len());
        let mut steps = Vec::with_capacity(xs.len());
        for (x, reset) in xs.iter().zip(resets) {
            self.check(&x.view(), &state)?;
            if reset.len() != x.nrows() {
                return Err(Error::shape("lstm reset mask", &[x.nrows()], &[reset.len()]));
            }
            state.reset_rows(reset);
            let (caches, next) = self.advance(x.view(), &state);
            outputs.push(next.h.last().expect("layer").clone());
            steps.push(caches);
            state = next;
        }
        let cache = LstmSeqCache {
            steps,
            resets: resets.to_vec(),
        };
        Ok((outputs, state, cache))
    }

    /// Backpropagation through time. `d_outputs[t]` is the loss gradient with
    /// respect to the output at step `t`. Gradients do not flow into the
    /// initial state or across resets.
    pub fn backward_sequence(
        &self,
        cache: &LstmSeqCache<T>,
        d_outputs: &[Array2<T>],
        grads: &mut Lstm<T>,
    ) -> Result<Vec<Array2<T>>> {
        if d_outputs.len() != cache.steps.len() {
            return Err(Error::shape("lstm output grads", &[cache.steps.len()], &[d_outputs.len()]));
        }
        let n = self.layers.len();
        let top = n - 1;
        let mut dh_next: Vec<Option<Array2<T>>> = vec![None; n];
        let mut dc_next: Vec<Option<Array2<T>>> = vec![None; n];
        let mut d_inputs = vec![Array2::zeros((0, 0)); cache.steps.len()];
        for t in (0..cache.steps.len()).rev() {
            let step = &cache.steps[t];
            if d_outputs[t].shape() != step[top].o.shape() {
                return Err(Error::shape("lstm output grad", step[top].o.shape(), d_outputs[t].shape()));
            }
            let mut from_above = d_outputs[t].clone();
            for l in (0..n).rev() {
                let sc = &step[l];
                let w = self.spec.hidden[l];
                let mut dh = from_above;
                if let Some(d) = &dh_next[l] {
                    dh += d;
                }
                let d_o = &dh * &sc.tanh_c;
                let mut dc = &dh * &sc.o;
                Zip::from(&mut dc).and(&sc.tanh_c).for_each(|v, &tc| *v *= T::one() - tc * tc);
                if let Some(d) = &dc_next[l] {
                    dc += d;
                }
                let batch = dc.nrows();
                let mut dgates = Array2::zeros((batch, 4 * w));
                Zip::from(dgates.slice_mut(s![.., 0..w]))
                    .and(&dc)
                    .and(&sc.g)
                    .and(&sc.i)
                    .for_each(|d, &dcv, &g, &i| *d = dcv * g * i * (T::one() - i));
                Zip::from(dgates.slice_mut(s![.., w..2 * w]))
                    .and(&dc)
                    .and(&sc.c_prev)
                    .and(&sc.f)
                    .for_each(|d, &dcv, &cp, &f| *d = dcv * cp * f * (T::one() - f));
                Zip::from(dgates.slice_mut(s![.., 2 * w..3 * w]))
                    .and(&dc)
                    .and(&sc.i)
                    .and(&sc.g)
                    .for_each(|d, &dcv, &i, &g| *d = dcv * i * (T::one() - g * g));
                Zip::from(dgates.slice_mut(s![.., 3 * w..4 * w]))
                    .and(&d_o)
                    .and(&sc.o)
                    .for_each(|d, &dov, &o| *d = dov * o * (T::one() - o));

                let layer = &self.layers[l];
                let g = &mut grads.layers[l];
                g.w_ih += &dgates.t().dot(&sc.x);
                g.w_hh += &dgates.t().dot(&sc.h_prev);
                g.bias += &dgates.sum_axis(Axis(0));

                let mut dh_prev = dgates.dot(&layer.w_hh);
                let mut dc_prev = dc * &sc.f;
                for (r, &reset) in cache.resets[t].iter().enumerate() {
                    if reset {
                        dh_prev.row_mut(r).fill(T::zero());
                        dc_prev.row_mut(r).fill(T::zero());
                    }
                }
                dh_next[l] = Some(dh_prev);
                dc_next[l] = Some(dc_prev);
                from_above = dgates.dot(&layer.w_ih);
            }
            d_inputs[t] = from_above;
        }
        Ok(d_inputs)
    }
}

impl<T: Scalar> ParamSet<T> for Lstm<T> {
    fn tensors(&self) -> Vec<&[T]> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(l.w_ih.as_slice().expect("standard layout"));
            out.push(l.w_hh.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(l.w_ih.as_slice_mut().expect("standard layout"));
            out.push(l.w_hh.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    fn zeros_like(&self) -> Self {
        Lstm::zeros(self.spec.clone()).expect("validated spec")
    }
}

impl<T: Scalar> Checkpoint<T> for Lstm<T> {
    fn describe(&self) -> String {
        self.spec.describe()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_keep_zero_state() {
        let spec = LstmSpec::new(3, &[4, 4]);
        let net = Lstm::<f64>::zeros(spec.clone()).unwrap();
        let x = Array2::from_elem((2, 3), 0.7);
        let (m, st) = net.step(x.view(), &LstmState::zeros(&spec, 2)).unwrap();
        // i = f = o = 0.5, g = tanh(0) = 0, so c = 0 and h = 0
        assert!(m.iter().all(|&v| v == 0.0));
        assert!(st.c.iter().all(|c| c.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn threading_state_matches_unrolled() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let spec = LstmSpec::new(3, &[5, 6]);
        let net = Lstm::<f64>::new(spec.clone(), &mut rng).unwrap();
        let x0 = Array2::from_shape_fn((2, 3), |(i, j)| (i + j) as f64 * 0.2);
        let x1 = Array2::from_shape_fn((2, 3), |(i, j)| (i as f64 - j as f64) * 0.3);
        let s0 = LstmState::zeros(&spec, 2);
        let (_, s1) = net.step(x0.view(), &s0).unwrap();
        let (m2, s2) = net.step(x1.view(), &s1).unwrap();
        let (outs, s_seq, _) = net
            .forward_sequence(&[x0, x1], &s0, &[vec![false; 2], vec![false; 2]])
            .unwrap();
        assert_eq!(outs[1], m2);
        assert_eq!(s_seq, s2);
    }

    #[test]
    fn reset_rows_restart_from_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let spec = LstmSpec::new(2, &[3]);
        let net = Lstm::<f64>::new(spec.clone(), &mut rng).unwrap();
        let x = Array2::from_elem((2, 2), 0.5);
        let s0 = LstmState::zeros(&spec, 2);
        let (outs, _, _) = net
            .forward_sequence(&[x.clone(), x.clone()], &s0, &[vec![false, false], vec![true, false]])
            .unwrap();
        // row 0 was reset before step 1, so it equals a first step
        assert_eq!(outs[1].row(0), outs[0].row(0));
        assert_ne!(outs[1].row(1), outs[0].row(1));
    }

    #[test]
    fn mismatched_state_rejected() {
        let spec = LstmSpec::new(2, &[3]);
        let net = Lstm::<f64>::zeros(spec.clone()).unwrap();
        let st = LstmState::zeros(&LstmSpec::new(2, &[4]), 1);
        assert!(net.step(Array2::zeros((1, 2)).view(), &st).is_err());
    }
}
