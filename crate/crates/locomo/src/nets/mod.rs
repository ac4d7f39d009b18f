//! Small dense-network core: MLPs, a stacked LSTM, Adam, checkpoints and
//! finite-difference gradient verification.
//!
//! Tensors are `ndarray` matrices with one sample per row.

pub mod adam;
pub mod arch;
pub mod checkpoint;
pub mod gradcheck;
pub mod lstm;
pub mod mlp;
mod params;
mod scalar;

pub use adam::Adam;
pub use arch::NetworkTable;
pub use checkpoint::{load_checkpoint_into, save_checkpoint, Checkpoint};
pub use lstm::{Lstm, LstmSeqCache, LstmSpec, LstmState};
pub use mlp::{Activation, Mlp, MlpCache, MlpSpec};
pub use params::{clip_global_norm, ParamSet};
pub use scalar::Scalar;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Rejects tensors holding NaN or infinity.
pub fn ensure_finite<T: Scalar>(what: &str, x: &Array2<T>) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// Converts an `f64` matrix to the network element type.
pub fn cast<T: Scalar>(x: &Array2<f64>) -> Array2<T> {
    x.mapv(T::of)
}
