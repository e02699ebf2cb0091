//! Binary checkpoints.
//!
//! Layout: magic `SASV`, `u32` LE format version, `u64` LE header length,
//! a UTF-8 header, then every tensor as little-endian `f32` in header
//! order. The header's first line is `normalize=<bool>`; each following
//! line is `name rows cols`, in the fixed parameter order.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::TrainError;
use crate::autograd::Tensor;
use crate::io::atomic_write;
use crate::model::{ModelParams, ParamId};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SASV";
pub const CHECKPOINT_VERSION: u32 = 1;

fn header(params: &ModelParams) -> String {
    let mut h = format!("normalize={}\n", params.normalize);
    for &id in &ParamId::ALL {
        let (r, c) = params.get(id).dims2();
        let _ = writeln!(h, "{} {r} {c}", id.name());
    }
    h
}

pub fn write_checkpoint(params: &ModelParams, w: &mut dyn Write) -> std::io::Result<()> {
    let h = header(params);
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(h.len() as u64).to_le_bytes())?;
    w.write_all(h.as_bytes())?;
    for t in params.tensors() {
        for &v in t.data() {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

/// Writes through a temporary file, so an interrupted save never leaves a
/// partial checkpoint at `path`.
pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<(), TrainError> {
    atomic_write(path, |w| write_checkpoint(params, w))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams, TrainError> {
    read_checkpoint(&std::fs::read(path)?)
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<ModelParams, TrainError> {
    let err = |m: String| TrainError::Checkpoint(m);
    if bytes.len() < 16 {
        return Err(err(format!(
            "file too short for a header ({} bytes)",
            bytes.len()
        )));
    }
    if &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(err("bad magic, not a SASV checkpoint".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(err(format!("unsupported format version {version}")));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let body = &bytes[16..];
    if hlen > body.len() as u64 {
        return Err(err(format!(
            "header declares {hlen} bytes but only {} remain",
            body.len()
        )));
    }
    let hlen = hlen as usize;
    let text = std::str::from_utf8(&body[..hlen]).map_err(|_| err("header is not UTF-8".into()))?;
    let mut lines = text.lines();
    let normalize = match lines.next() {
        Some("normalize=true") => true,
        Some("normalize=false") => false,
        other => return Err(err(format!("bad normalize line {other:?}"))),
    };
    let mut shapes = Vec::new();
    for &id in &ParamId::ALL {
        let line = lines
            .next()
            .ok_or_else(|| err(format!("header lacks tensor {}", id.name())))?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 || f[0] != id.name() {
            return Err(err(format!(
                "expected tensor {} in header, found {line:?}",
                id.name()
            )));
        }
        let dim = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| err(format!("bad dimension {s:?} for {}", id.name())))
        };
        shapes.push((id, dim(f[1])?, dim(f[2])?));
    }
    if let Some(extra) = lines.next() {
        return Err(err(format!("unexpected header line {extra:?}")));
    }

    let mut payload = &body[hlen..];
    let mut tensors = Vec::with_capacity(shapes.len());
    for (id, r, c) in shapes {
        let need = r
            .checked_mul(c)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| err(format!("tensor {} is too large", id.name())))?;
        if payload.len() < need {
            return Err(err(format!(
                "truncated: tensor {} needs {need} bytes, {} remain",
                id.name(),
                payload.len()
            )));
        }
        let data = payload[..need]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64)
            .collect();
        payload = &payload[need..];
        tensors.push(Tensor::matrix(r, c, data));
    }
    if !payload.is_empty() {
        return Err(err(format!(
            "{} bytes beyond the tensors the header lists",
            payload.len()
        )));
    }
    Ok(ModelParams::from_tensors(tensors, normalize)?)
}
