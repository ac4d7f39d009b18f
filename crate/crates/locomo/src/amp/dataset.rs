use std::fmt::Write as _;
use std::path::Path;

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"LOCOEXP\0";
pub const FORMAT_VERSION: u32 = 1;
/// Floor applied to per-dimension standard deviations.
pub const STD_FLOOR: f32 = 1e-2;
const HEADER_LEN: usize = 8 + 4 + 4 + 8 + 8;

/// Recorded motion states at a fixed rate plus per-dimension statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperienceDataset {
    states: Array2<f32>,
    rate: f64,
    mean: Array1<f32>,
    std: Array1<f32>,
}

impl ExperienceDataset {
    /// Stores `states` (one per row) and computes normalization statistics.
    pub fn new(states: Array2<f32>, rate: f64) -> Result<Self> {
        if states.nrows() < 2 {
            return Err(Error::InvalidArgument(format!("experience dataset needs at least 2 states, got {}", states.nrows())));
        }
        if states.ncols() == 0 || !(rate > 0.0) {
            return Err(Error::InvalidArgument("experience dataset needs a positive width and rate".into()));
        }
        if states.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("experience states".into()));
        }
        let n = states.nrows() as f64;
        let mut mean = Array1::zeros(states.ncols());
        let mut std = Array1::zeros(states.ncols());
        for (j, col) in states.axis_iter(Axis(1)).enumerate() {
            let m = col.iter().map(|&v| v as f64).sum::<f64>() / n;
            let var = col.iter().map(|&v| (v as f64 - m).powi(2)).sum::<f64>() / n;
            mean[j] = m as f32;
            std[j] = (var.sqrt() as f32).max(STD_FLOOR);
        }
        Ok(Self { states, rate, mean, std })
    }

    pub fn from_f64(states: ArrayView2<f64>, rate: f64) -> Result<Self> {
        Self::new(states.mapv(|v| v as f32), rate)
    }

    pub fn states(&self) -> &Array2<f32> {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.states.nrows() == 0
    }

    pub fn width(&self) -> usize {
        self.states.ncols()
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.rate
    }

    pub fn mean(&self) -> &Array1<f32> {
        &self.mean
    }

    pub fn std(&self) -> &Array1<f32> {
        &self.std
    }

    pub fn transition_count(&self) -> usize {
        self.len() - 1
    }

    /// Consecutive pairs `(s_t, s_{t+1})`, one concatenated row each.
    pub fn transitions(&self) -> Array2<f64> {
        let s = self.states.mapv(|v| v as f64);
        let n = s.nrows();
        concatenate(Axis(1), &[s.slice(s![..n - 1, ..]), s.slice(s![1.., ..])]).expect("matching widths")
    }

    /// Mean and std of a concatenated transition, for normalizing discriminator input.
    pub fn transition_stats(&self) -> (Vec<f64>, Vec<f64>) {
        let m: Vec<f64> = self.mean.iter().map(|&v| v as f64).collect();
        let s: Vec<f64> = self.std.iter().map(|&v| v as f64).collect();
        (m.iter().chain(&m).copied().collect(), s.iter().chain(&s).copied().collect())
    }

    pub fn normalize(&self, states: ArrayView2<f32>) -> Array2<f32> {
        (&states - &self.mean) / &self.std
    }

    pub fn denormalize(&self, states: ArrayView2<f32>) -> Array2<f32> {
        &states * &self.std + &self.mean
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * (self.states.len() + 2 * self.width()));
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.width() as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.rate.to_le_bytes());
        for v in self.states.iter().chain(self.mean.iter()).chain(self.std.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], source: &Path) -> Result<Self> {
        let bad = |reason: String| Error::format(source, reason);
        if bytes.len() < HEADER_LEN {
            return Err(bad(format!("truncated header: {} bytes", bytes.len())));
        }
        if bytes[..8] != MAGIC {
            return Err(bad("not an experience dataset (bad magic)".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let version = u32_at(8);
        if version != FORMAT_VERSION {
            return Err(bad(format!("unsupported version {version}, expected {FORMAT_VERSION}")));
        }
        let width = u32_at(12) as usize;
        let count = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes")) as usize;
        let rate = f64::from_le_bytes(bytes[24..32].try_into().expect("8 bytes"));
        if width == 0 || count < 2 || !(rate > 0.0) {
            return Err(bad(format!("invalid header: width {width}, count {count}, rate {rate}")));
        }
        let floats = count
            .checked_mul(width)
            .and_then(|b| b.checked_add(2 * width))
            .ok_or_else(|| bad("header sizes overflow".into()))?;
        let expected = HEADER_LEN + 4 * floats;
        if bytes.len() != expected {
            return Err(bad(format!("body is {} bytes, header implies {}", bytes.len() - HEADER_LEN, expected - HEADER_LEN)));
        }
        let values: Vec<f32> = bytes[HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let body = count * width;
        let states = Array2::from_shape_vec((count, width), values[..body].to_vec()).expect("sized body");
        let mean = Array1::from(values[body..body + width].to_vec());
        let std = Array1::from(values[body + width..].to_vec());
        if std.iter().any(|&s| !(s > 0.0)) {
            return Err(bad("non-positive std in footer".into()));
        }
        Ok(Self { states, rate, mean, std })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }

    /// Header, duration and per-dimension statistics as plain text.
    pub fn summary(&self, labels: Option<&[String]>) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "format version {FORMAT_VERSION}");
        let _ = writeln!(s, "states {} x {} at {} Hz ({:.2} s, {} transitions)", self.len(), self.width(), self.rate, self.duration(), self.transition_count());
        let _ = writeln!(s, "{:>4} {:<24} {:>10} {:>10} {:>10} {:>10}", "dim", "name", "mean", "std", "min", "max");
        for (j, col) in self.states.axis_iter(Axis(1)).enumerate() {
            let lo = col.iter().copied().fold(f32::INFINITY, f32::min);
            let hi = col.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            let name = labels.and_then(|l| l.get(j)).map(String::as_str).unwrap_or("");
            let _ = writeln!(s, "{j:>4} {name:<24} {:>10.4} {:>10.4} {lo:>10.4} {hi:>10.4}", self.mean[j], self.std[j]);
        }
        s
    }
}

/// Names of the hexapod/quadruped motion-state dimensions.
pub fn amp_labels(joints: usize) -> Vec<String> {
    let mut out: Vec<String> = (0..joints).map(|j| format!("q{j}")).collect();
    out.extend((0..joints).map(|j| format!("dq{j}")));
    out.extend(["vx", "vy", "vz", "wx", "wy", "wz"].iter().map(|s| s.to_string()));
    out
}
