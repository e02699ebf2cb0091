//! On-disk dataset layout: a text manifest plus one binary feature file per
//! encoder branch.
//!
//! `manifest.txt` holds `id speaker source split` per utterance. Feature
//! files start with the magic `SASF` and a little-endian `u32` version,
//! followed by the manifest's vectors in order as little-endian `f32`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::{DataError, Dataset, Split};
use crate::autograd::Tensor;
use crate::io::atomic_write;
use crate::model::{Source, Utterance};

pub const FEATURE_MAGIC: &[u8; 4] = b"SASF";
pub const FEATURE_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const ASV_FEATURE_FILE: &str = "asv_features.bin";
pub const RAW_FEATURE_FILE: &str = "raw_features.bin";

pub fn write_features(w: &mut dyn Write, rows: &[&[f64]]) -> std::io::Result<()> {
    w.write_all(FEATURE_MAGIC)?;
    w.write_all(&FEATURE_VERSION.to_le_bytes())?;
    for row in rows {
        for &v in *row {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

/// Splits a feature file into `n` equal-length rows.
pub fn read_features(bytes: &[u8], n: usize) -> Result<Vec<Vec<f64>>, DataError> {
    if bytes.len() < 8 || &bytes[..4] != FEATURE_MAGIC {
        return Err(DataError::Format("missing SASF magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FEATURE_VERSION {
        return Err(DataError::Format(format!("unsupported version {version}")));
    }
    let payload = &bytes[8..];
    if !payload.len().is_multiple_of(4) {
        return Err(DataError::Format(
            "payload is not a whole number of f32 values".into(),
        ));
    }
    let values = payload.len() / 4;
    if n == 0 {
        return if values == 0 {
            Ok(Vec::new())
        } else {
            Err(DataError::Format(
                "features present for an empty manifest".into(),
            ))
        };
    }
    if !values.is_multiple_of(n) || values == 0 {
        return Err(DataError::Format(format!(
            "{values} values do not divide into {n} utterances"
        )));
    }
    let dim = values / n;
    Ok(payload
        .chunks_exact(4 * dim)
        .map(|row| {
            row.chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64)
                .collect()
        })
        .collect())
}

pub fn write_dataset(ds: &Dataset, dir: &Path) -> Result<(), DataError> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = String::new();
    for (split, u) in ds.iter() {
        let _ = writeln!(manifest, "{} {} {} {}", u.id, u.speaker, u.source, split);
    }
    atomic_write(&dir.join(MANIFEST_FILE), |w| {
        w.write_all(manifest.as_bytes())
    })?;
    let asv: Vec<&[f64]> = ds.iter().map(|(_, u)| u.asv_features.data()).collect();
    atomic_write(&dir.join(ASV_FEATURE_FILE), |w| write_features(w, &asv))?;
    let raw: Vec<&[f64]> = ds.iter().map(|(_, u)| u.raw_features.data()).collect();
    atomic_write(&dir.join(RAW_FEATURE_FILE), |w| write_features(w, &raw))?;
    Ok(())
}

pub fn read_dataset(dir: &Path) -> Result<Dataset, DataError> {
    let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let mut meta = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| DataError::Manifest { line, message };
        if raw.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = raw.split_whitespace().collect();
        if f.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", f.len())));
        }
        let speaker: usize = f[1]
            .parse()
            .map_err(|_| err(format!("bad speaker index {:?}", f[1])))?;
        let source: Source = f[2]
            .parse()
            .map_err(|e: crate::model::ModelError| err(e.to_string()))?;
        let split: Split = f[3].parse().map_err(err)?;
        meta.push((f[0].to_string(), speaker, source, split));
    }
    let asv = read_features(&std::fs::read(dir.join(ASV_FEATURE_FILE))?, meta.len())?;
    let raw = read_features(&std::fs::read(dir.join(RAW_FEATURE_FILE))?, meta.len())?;
    let mut ds = Dataset::default();
    for (((id, speaker, source, split), a), r) in meta.into_iter().zip(asv).zip(raw) {
        ds.split_mut(split).push(Utterance {
            id,
            speaker,
            source,
            asv_features: Tensor::row(&a),
            raw_features: Tensor::row(&r),
        });
    }
    Ok(ds)
}
