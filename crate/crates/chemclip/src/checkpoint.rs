//! Binary checkpoint container: magic "CCLP", version, named f64 matrices,
//! and a JSON trailer carrying the training configuration.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::model::ChemClipModel;
use crate::nn::{Linear, Matrix, Mlp};
use crate::train::TrainConfig;

const MAGIC: &[u8; 4] = b"CCLP";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid checkpoint format: {0}")]
    Format(String),
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
}

/// Write named matrices and a JSON trailer. Layout: magic, version (u32),
/// record count (u32), then per record name length (u32) + UTF-8 name +
/// rows (u32) + cols (u32) + row-major f64 little-endian data, finally
/// trailer length (u32) + trailer bytes.
pub fn write_container(
    path: &Path,
    records: &[(String, &Matrix)],
    trailer_json: &str,
) -> Result<(), CheckpointError> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(records.len() as u32).to_le_bytes());
    for (name, m) in records {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
        for v in m.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend_from_slice(&(trailer_json.len() as u32).to_le_bytes());
    out.extend_from_slice(trailer_json.as_bytes());
    fs::write(path, out)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], CheckpointError> {
        if self.pos + n > self.bytes.len() {
            return Err(CheckpointError::Format(format!(
                "truncated while reading {what} at byte {}",
                self.pos
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32, CheckpointError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()))
    }
}

/// Read a container written by [`write_container`].
pub fn read_container(path: &Path) -> Result<(Vec<(String, Matrix)>, String), CheckpointError> {
    let bytes = fs::read(path)?;
    let mut cur = Cursor {
        bytes: &bytes,
        pos: 0,
    };
    if cur.take(4, "magic")? != MAGIC {
        return Err(CheckpointError::Format("bad magic, expected CCLP".into()));
    }
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let n_records = cur.u32("record count")? as usize;
    let mut records = Vec::with_capacity(n_records);
    for i in 0..n_records {
        let name_len = cur.u32("name length")? as usize;
        let name = std::str::from_utf8(cur.take(name_len, "record name")?)
            .map_err(|_| CheckpointError::Format(format!("record {i} name is not UTF-8")))?
            .to_string();
        let rows = cur.u32("rows")? as usize;
        let cols = cur.u32("cols")? as usize;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| CheckpointError::Format(format!("record {name} shape overflows")))?;
        let raw = cur.take(n * 8, "matrix data")?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        records.push((name, Matrix::from_vec(rows, cols, data)));
    }
    let trailer_len = cur.u32("trailer length")? as usize;
    let trailer = std::str::from_utf8(cur.take(trailer_len, "trailer")?)
        .map_err(|_| CheckpointError::Format("trailer is not UTF-8".into()))?
        .to_string();
    if cur.pos != bytes.len() {
        return Err(CheckpointError::Format(format!(
            "{} trailing bytes after trailer",
            bytes.len() - cur.pos
        )));
    }
    Ok((records, trailer))
}

/// Save both heads and the full training configuration.
pub fn save_checkpoint(
    path: &Path,
    model: &ChemClipModel,
    config: &TrainConfig,
) -> Result<(), CheckpointError> {
    let mut bias_matrices = Vec::new();
    for head in [&model.inorganic_head, &model.organic_head] {
        for layer in &head.layers {
            bias_matrices.push(Matrix::from_vec(1, layer.b.len(), layer.b.clone()));
        }
    }
    let mut records: Vec<(String, &Matrix)> = Vec::new();
    let mut bias_iter = bias_matrices.iter();
    for (head_name, head) in [
        ("inorganic", &model.inorganic_head),
        ("organic", &model.organic_head),
    ] {
        for (i, layer) in head.layers.iter().enumerate() {
            records.push((format!("{head_name}.{i}.weight"), &layer.w));
            records.push((format!("{head_name}.{i}.bias"), bias_iter.next().unwrap()));
        }
    }
    let trailer = serde_json::to_string(config)
        .map_err(|e| CheckpointError::Format(format!("config serialization: {e}")))?;
    write_container(path, &records, &trailer)
}

/// Load a model checkpoint saved by [`save_checkpoint`].
pub fn load_checkpoint(path: &Path) -> Result<(ChemClipModel, TrainConfig), CheckpointError> {
    let (records, trailer) = read_container(path)?;
    let config: TrainConfig = serde_json::from_str(&trailer)
        .map_err(|e| CheckpointError::Format(format!("config trailer: {e}")))?;
    let mut map: std::collections::BTreeMap<String, Matrix> = records.into_iter().collect();
    let mut heads = Vec::new();
    for head_name in ["inorganic", "organic"] {
        let mut layers = Vec::new();
        let mut i = 0;
        while let Some(w) = map.remove(&format!("{head_name}.{i}.weight")) {
            let b = map.remove(&format!("{head_name}.{i}.bias")).ok_or_else(|| {
                CheckpointError::Format(format!("missing {head_name}.{i}.bias"))
            })?;
            if b.rows() != 1 || b.cols() != w.cols() {
                return Err(CheckpointError::Format(format!(
                    "{head_name}.{i}.bias shape {}x{} does not match weight cols {}",
                    b.rows(),
                    b.cols(),
                    w.cols()
                )));
            }
            layers.push(Linear {
                w,
                b: b.data().to_vec(),
            });
            i += 1;
        }
        if layers.is_empty() {
            return Err(CheckpointError::Format(format!(
                "checkpoint has no layers for head {head_name}"
            )));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(CheckpointError::Format(format!(
                    "{head_name} layer dims do not chain: {} -> {}",
                    pair[0].out_dim(),
                    pair[1].in_dim()
                )));
            }
        }
        heads.push(Mlp {
            layers,
            dropout: config.dropout,
        });
    }
    if !map.is_empty() {
        let stray: Vec<&String> = map.keys().collect();
        return Err(CheckpointError::Format(format!(
            "unexpected records in checkpoint: {stray:?}"
        )));
    }
    let organic_head = heads.pop().unwrap();
    let inorganic_head = heads.pop().unwrap();
    Ok((
        ChemClipModel {
            inorganic_head,
            organic_head,
            temperature: config.tau,
        },
        config,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn toy_model() -> (ChemClipModel, TrainConfig) {
        let model = ChemClipModel::with_dims(7, 9, 5, 4, 0.1, 21);
        let config = TrainConfig {
            epochs: 3,
            batch_size: 4,
            seed: 21,
            ..TrainConfig::default()
        };
        (model, config)
    }

    #[test]
    fn container_round_trips_exact_bits() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.cclp");
        let m = Matrix::from_vec(
            2,
            3,
            vec![1e-300, -0.0, std::f64::consts::PI, f64::MIN_POSITIVE, -1.5, 4.0],
        );
        let records = vec![("alpha".to_string(), &m)];
        write_container(&path, &records, "{\"k\":1}").unwrap();
        let (back, trailer) = read_container(&path).unwrap();
        assert_eq!(trailer, "{\"k\":1}");
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].0, "alpha");
        for (a, b) in back[0].1.data().iter().zip(m.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let (model, config) = toy_model();
        let dir = tempdir().unwrap();
        let p1 = dir.path().join("a.cclp");
        let p2 = dir.path().join("b.cclp");
        save_checkpoint(&p1, &model, &config).unwrap();
        let (loaded, loaded_config) = load_checkpoint(&p1).unwrap();
        assert_eq!(loaded_config, config);
        assert_eq!(loaded, model);
        save_checkpoint(&p2, &loaded, &loaded_config).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn corrupted_magic_is_format_error() {
        let (model, config) = toy_model();
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.cclp");
        save_checkpoint(&path, &model, &config).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(CheckpointError::Format(_))
        ));
    }

    #[test]
    fn future_version_is_rejected() {
        let (model, config) = toy_model();
        let dir = tempdir().unwrap();
        let path = dir.path().join("v99.cclp");
        save_checkpoint(&path, &model, &config).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4..8].copy_from_slice(&99u32.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(CheckpointError::UnsupportedVersion(99))
        ));
    }

    #[test]
    fn truncated_file_is_format_error() {
        let (model, config) = toy_model();
        let dir = tempdir().unwrap();
        let path = dir.path().join("trunc.cclp");
        save_checkpoint(&path, &model, &config).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(CheckpointError::Format(_))
        ));
    }

    #[test]
    fn garbage_trailer_is_format_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("trail.cclp");
        let m = Matrix::zeros(1, 1);
        write_container(&path, &[("x".into(), &m)], "not json").unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(CheckpointError::Format(_))
        ));
    }

    #[test]
    fn loaded_model_reproduces_embeddings() {
        let (model, config) = toy_model();
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.cclp");
        save_checkpoint(&path, &model, &config).unwrap();
        let (loaded, _) = load_checkpoint(&path).unwrap();
        let x = Matrix::from_rows(&[vec![0.5; 7], vec![-0.25; 7]]);
        let a = model.embed_inorganic(&x).unwrap();
        let b = loaded.embed_inorganic(&x).unwrap();
        assert_eq!(a, b);
        assert_eq!(loaded.temperature, config.tau);
    }
}
