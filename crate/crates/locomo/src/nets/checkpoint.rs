//! Versioned binary checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "LOCOCKPT"
//! version    u32      1
//! desc_len   u32
//! desc       desc_len bytes of UTF-8 (model description)
//! n_tensors  u32
//! lengths    n_tensors x u64
//! data       f32 little-endian, tensors in declaration order
//! ```

use std::fs;
use std::path::Path;

use super::{ParamSet, Scalar};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"LOCOCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Something that can be written as a checkpoint: parameters plus a
/// description string that must match on load.
pub trait Checkpoint<T: Scalar>: ParamSet<T> {
    fn describe(&self) -> String;
}

pub fn encode_checkpoint<T: Scalar, P: Checkpoint<T>>(model: &P) -> Vec<u8> {
    let desc = model.describe();
    let tensors = model.tensors();
    let mut out = Vec::with_capacity(32 + desc.len() + 4 * model.param_count());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(desc.len() as u32).to_le_bytes());
    out.extend_from_slice(desc.as_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in &tensors {
        out.extend_from_slice(&(t.len() as u64).to_le_bytes());
    }
    for t in &tensors {
        for v in t.iter() {
            out.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let s = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
}

/// Loads `bytes` into `model`, checking magic, version, description and every
/// tensor length. `source` only labels error messages.
pub fn decode_checkpoint_into<T: Scalar, P: Checkpoint<T>>(bytes: &[u8], model: &mut P, source: &Path) -> Result<()> {
    let bad = |reason: &str| Error::format(source, reason.to_string());
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8) != Some(&CHECKPOINT_MAGIC[..]) {
        return Err(bad("bad magic"));
    }
    let version = r.u32().ok_or_else(|| bad("truncated header"))?;
    if version != CHECKPOINT_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let desc_len = r.u32().ok_or_else(|| bad("truncated header"))? as usize;
    let desc = r.take(desc_len).ok_or_else(|| bad("truncated description"))?;
    let desc = std::str::from_utf8(desc).map_err(|_| bad("description is not utf-8"))?;
    let expected = model.describe();
    if desc != expected {
        return Err(bad(&format!("model mismatch: file has '{desc}', expected '{expected}'")));
    }
    let n = r.u32().ok_or_else(|| bad("truncated header"))? as usize;
    let shapes = model.shapes();
    if n != shapes.len() {
        return Err(bad(&format!("tensor count {n}, expected {}", shapes.len())));
    }
    for (i, &want) in shapes.iter().enumerate() {
        let got = r.u64().ok_or_else(|| bad("truncated header"))? as usize;
        if got != want {
            return Err(bad(&format!("tensor {i} has {got} values, expected {want}")));
        }
    }
    for t in model.tensors_mut() {
        for v in t.iter_mut() {
            let b = r.take(4).ok_or_else(|| bad("truncated parameter data"))?;
            *v = T::of(f32::from_le_bytes(b.try_into().unwrap()) as f64);
        }
    }
    if r.pos != bytes.len() {
        return Err(bad("trailing bytes after parameters"));
    }
    Ok(())
}

pub fn save_checkpoint<T: Scalar, P: Checkpoint<T>>(model: &P, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, encode_checkpoint(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint_into<T: Scalar, P: Checkpoint<T>>(model: &mut P, path: &Path) -> Result<()> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint_into(&bytes, model, path)
}
