//! Per-utterance binary feature files: three little-endian `i32`s
//! (`T D kind`) followed by `T·D` little-endian `f64`s, plus a text index of
//! `id<TAB>path` lines.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureMatrix};
use crate::numerics::Tensor;

pub fn encode(f: &FeatureMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * f.data.len());
    out.extend_from_slice(&(f.frames() as i32).to_le_bytes());
    out.extend_from_slice(&(f.dims() as i32).to_le_bytes());
    out.extend_from_slice(&f.kind.code().to_le_bytes());
    for v in f.data.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < 12 {
        return Err(Error::Parse("feature file shorter than its header".into()));
    }
    let int = |i: usize| i32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let (t, d) = (int(0), int(4));
    let kind = FeatureKind::from_code(int(8))?;
    if t <= 0 || d <= 0 {
        return Err(Error::Parse(format!("bad feature extents {t}x{d}")));
    }
    let (t, d) = (t as usize, d as usize);
    let body = &bytes[12..];
    if body.len() != 8 * t * d {
        return Err(Error::Parse(format!("expected {} data bytes, got {}", 8 * t * d, body.len())));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    FeatureMatrix::new(Tensor::new(vec![t, d], data)?, kind)
}

/// Writes one file per utterance under `dir` plus `dir/index.txt`.
pub fn write_archive(dir: &Path, items: &[(String, FeatureMatrix)]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut index = String::new();
    for (id, f) in items {
        let name = format!("{id}.feats");
        let path = dir.join(&name);
        fs::write(&path, encode(f)).map_err(|e| Error::io(&path, e))?;
        index.push_str(&format!("{id}\t{name}\n"));
    }
    let index_path = dir.join("index.txt");
    fs::write(&index_path, index).map_err(|e| Error::io(&index_path, e))?;
    Ok(index_path)
}

pub fn read_archive(index_path: &Path) -> Result<Vec<(String, FeatureMatrix)>> {
    let base = index_path.parent().unwrap_or(Path::new("."));
    let text = fs::read_to_string(index_path).map_err(|e| Error::io(index_path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let (id, rel) = line
                .split_once('\t')
                .ok_or_else(|| Error::Parse(format!("bad index line {line:?}")))?;
            let path = base.join(rel);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            Ok((id.to_string(), decode(&bytes)?))
        })
        .collect()
}
