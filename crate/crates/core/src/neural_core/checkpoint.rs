//! Text checkpoint format for trained models.
//!
//! Layout, line by line:
//!
//! ```text
//! format_version=1
//! phase=TR
//! n_features=4
//! hidden=64
//! tensor w_i 256
//! <256 space-separated decimals at 17 significant digits>
//! ...
//! tensor dense_b 1
//! <1 value>
//! ```
//!
//! Tensors appear in canonical order; the reader validates every shape
//! before accepting the model.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{LstmModel, TENSOR_NAMES};
use crate::pattern_synth::{fmt_f64, Phase};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported checkpoint format_version {found} (expected {FORMAT_VERSION})")]
    Version { found: String },
    #[error("tensor {tensor}: expected {expected} values, found {found}")]
    Shape {
        tensor: String,
        expected: usize,
        found: usize,
    },
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
}

fn io_err(path: &Path, source: std::io::Error) -> CheckpointError {
    CheckpointError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn save_model(m: &LstmModel, phase: Phase, path: &Path) -> Result<(), CheckpointError> {
    let mut out = String::new();
    out.push_str(&format!("format_version={FORMAT_VERSION}\n"));
    out.push_str(&format!("phase={phase}\n"));
    out.push_str(&format!("n_features={}\n", m.n_features));
    out.push_str(&format!("hidden={}\n", m.hidden));
    for (name, t) in m.tensors() {
        out.push_str(&format!("tensor {name} {}\n", t.len()));
        let row: Vec<String> = t.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn load_model(path: &Path) -> Result<(Phase, LstmModel), CheckpointError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines();

    let mut field = |key: &str| -> Result<String, CheckpointError> {
        let line = lines
            .next()
            .ok_or_else(|| CheckpointError::Malformed(format!("missing field {key}")))?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .map(str::to_string)
            .ok_or_else(|| CheckpointError::Malformed(format!("expected '{key}=...', got '{line}'")))
    };

    let version = field("format_version")?;
    if version != FORMAT_VERSION.to_string() {
        return Err(CheckpointError::Version { found: version });
    }
    let phase_str = field("phase")?;
    let phase = Phase::parse(&phase_str)
        .ok_or_else(|| CheckpointError::Malformed(format!("unknown phase '{phase_str}'")))?;
    let n_features: usize = field("n_features")?
        .parse()
        .map_err(|_| CheckpointError::Malformed("bad n_features".into()))?;
    let hidden: usize = field("hidden")?
        .parse()
        .map_err(|_| CheckpointError::Malformed("bad hidden".into()))?;
    if n_features == 0 || hidden == 0 {
        return Err(CheckpointError::Malformed("zero dimension".into()));
    }

    let mut m = LstmModel::zeros(n_features, hidden);
    for name in TENSOR_NAMES {
        let header = lines
            .next()
            .ok_or_else(|| CheckpointError::Malformed(format!("missing tensor {name}")))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("tensor") {
            return Err(CheckpointError::Malformed(format!(
                "expected 'tensor {name} <len>', got '{header}'"
            )));
        }
        let got_name = parts
            .next()
            .ok_or_else(|| CheckpointError::Malformed("tensor header missing name".into()))?;
        if got_name != name {
            return Err(CheckpointError::Malformed(format!(
                "expected tensor {name}, found {got_name}"
            )));
        }
        let declared: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| CheckpointError::Malformed(format!("tensor {name}: bad length")))?;

        let expected = m.tensor_len(name).unwrap();
        let data_line = lines
            .next()
            .ok_or_else(|| CheckpointError::Malformed(format!("tensor {name}: missing data")))?;
        let mut values = Vec::with_capacity(expected);
        for cell in data_line.split_whitespace() {
            let v: f64 = cell.parse().map_err(|_| {
                CheckpointError::Malformed(format!("tensor {name}: bad numeral '{cell}'"))
            })?;
            values.push(v);
        }
        if declared != expected || values.len() != expected {
            return Err(CheckpointError::Shape {
                tensor: name.to_string(),
                expected,
                found: if values.len() != expected {
                    values.len()
                } else {
                    declared
                },
            });
        }

        for (i, (_, slot)) in m.tensors_mut().into_iter().enumerate() {
            if TENSOR_NAMES[i] == name {
                slot.copy_from_slice(&values);
            }
        }
    }

    Ok((phase, m))
}
