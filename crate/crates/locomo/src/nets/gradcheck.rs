//! Central finite-difference verification of analytic gradients (64-bit).

use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;

use super::ParamSet;

/// Gradients smaller than this are compared on an absolute scale.
pub const RELATIVE_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

#[derive(Clone, Debug, Default)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    /// (tensor, index, analytic, numeric) of the worst entry.
    pub worst: Option<(usize, usize, f64, f64)>,
}

impl GradCheckReport {
    fn record(&mut self, tensor: usize, index: usize, analytic: f64, numeric: f64) {
        let e = relative_error(analytic, numeric);
        self.checked += 1;
        if e > self.max_rel_error || self.worst.is_none() {
            self.max_rel_error = self.max_rel_error.max(e);
            self.worst = Some((tensor, index, analytic, numeric));
        }
    }

    pub fn merge(&mut self, other: GradCheckReport) {
        self.checked += other.checked;
        if other.max_rel_error >= self.max_rel_error {
            self.max_rel_error = other.max_rel_error;
            self.worst = other.worst.or(self.worst);
        }
    }
}

/// Compares `analytic` against central differences of `loss` for up to
/// `per_tensor` randomly chosen entries of every parameter tensor.
pub fn check_parameters<P, F, R>(params: &P, analytic: &P, loss: F, h: f64, per_tensor: usize, rng: &mut R) -> GradCheckReport
where
    P: ParamSet<f64> + Clone,
    F: Fn(&P) -> f64,
    R: Rng + ?Sized,
{
    let mut report = GradCheckReport::default();
    let mut probe = params.clone();
    let lens = params.shapes();
    let grads = analytic.tensors();
    for (ti, &len) in lens.iter().enumerate() {
        if len == 0 {
            continue;
        }
        let picks = sample(rng, len, per_tensor.min(len));
        for idx in picks.iter() {
            let original = params.tensors()[ti][idx];
            probe.tensors_mut()[ti][idx] = original + h;
            let up = loss(&probe);
            probe.tensors_mut()[ti][idx] = original - h;
            let down = loss(&probe);
            probe.tensors_mut()[ti][idx] = original;
            report.record(ti, idx, grads[ti][idx], (up - down) / (2.0 * h));
        }
    }
    report
}

/// Same check for the gradient with respect to an input matrix.
pub fn check_input<F, R>(x: &Array2<f64>, analytic: &Array2<f64>, loss: F, h: f64, samples: usize, rng: &mut R) -> GradCheckReport
where
    F: Fn(&Array2<f64>) -> f64,
    R: Rng + ?Sized,
{
    let mut report = GradCheckReport::default();
    let mut probe = x.clone();
    let n = x.len();
    let cols = x.ncols();
    for flat in sample(rng, n, samples.min(n)).iter() {
        let (r, c) = (flat / cols, flat % cols);
        let original = x[[r, c]];
        probe[[r, c]] = original + h;
        let up = loss(&probe);
        probe[[r, c]] = original - h;
        let down = loss(&probe);
        probe[[r, c]] = original;
        report.record(usize::MAX, flat, analytic[[r, c]], (up - down) / (2.0 * h));
    }
    report
}
