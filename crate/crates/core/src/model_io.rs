//! Model files (JSON) and datasets (CSV).
//!
//! A model file holds `format_version = "1"`, the sizes `p, q, r`, the
//! monotonicity `m` and the arrays `P, Q, U, bias, V, v` as row-major lists.
//! Floats are written in shortest round-trip decimal form, so a save/load
//! cycle reproduces every binary64 value exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mondeq::{MonDeqError, MonDeqParams};
use crate::numerics::Matrix;

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelIoError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("shape mismatch for {field}: expected {expected}, got {got}")]
    ShapeMismatch { field: String, expected: String, got: String },
}

impl From<MonDeqError> for ModelIoError {
    fn from(e: MonDeqError) -> Self {
        match e {
            MonDeqError::ShapeMismatch { field, expected, got } => ModelIoError::ShapeMismatch { field, expected, got },
            other => ModelIoError::ShapeMismatch { field: "m".into(), expected: "valid model".into(), got: other.to_string() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: String,
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub m: f64,
    #[serde(rename = "P")]
    pub p_mat: Vec<f64>,
    #[serde(rename = "Q")]
    pub q_mat: Vec<f64>,
    #[serde(rename = "U")]
    pub u: Vec<f64>,
    pub bias: Vec<f64>,
    #[serde(rename = "V")]
    pub v_mat: Vec<f64>,
    #[serde(rename = "v")]
    pub v_bias: Vec<f64>,
}

impl From<&MonDeqParams> for ModelFile {
    fn from(m: &MonDeqParams) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION.into(),
            p: m.p(),
            q: m.q(),
            r: m.r(),
            m: m.m,
            p_mat: m.p_mat.data().to_vec(),
            q_mat: m.q_mat.data().to_vec(),
            u: m.u.data().to_vec(),
            bias: m.bias.clone(),
            v_mat: m.v.data().to_vec(),
            v_bias: m.v_bias.clone(),
        }
    }
}

fn matrix(field: &str, rows: usize, cols: usize, data: &[f64]) -> Result<Matrix, ModelIoError> {
    if data.len() != rows * cols {
        return Err(ModelIoError::ShapeMismatch {
            field: field.into(),
            expected: format!("{rows}x{cols} = {} values", rows * cols),
            got: format!("{} values", data.len()),
        });
    }
    Ok(Matrix::new(rows, cols, data.to_vec()).expect("length checked"))
}

fn vector(field: &str, len: usize, data: &[f64]) -> Result<Vec<f64>, ModelIoError> {
    if data.len() != len {
        return Err(ModelIoError::ShapeMismatch {
            field: field.into(),
            expected: format!("{len} values"),
            got: format!("{} values", data.len()),
        });
    }
    Ok(data.to_vec())
}

impl ModelFile {
    pub fn to_params(&self) -> Result<MonDeqParams, ModelIoError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ModelIoError::Parse {
                line: 0,
                column: 0,
                message: format!("unsupported format_version {:?}, expected {FORMAT_VERSION:?}", self.format_version),
            });
        }
        let (p, q, r) = (self.p, self.q, self.r);
        let params = MonDeqParams {
            p_mat: matrix("P", p, p, &self.p_mat)?,
            q_mat: matrix("Q", p, p, &self.q_mat)?,
            u: matrix("U", p, q, &self.u)?,
            bias: vector("bias", p, &self.bias)?,
            v: matrix("V", r, p, &self.v_mat)?,
            v_bias: vector("v", r, &self.v_bias)?,
            m: self.m,
        };
        params.validate()?;
        Ok(params)
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> ModelIoError {
    ModelIoError::Io { path: path.display().to_string(), message: e.to_string() }
}

pub fn model_from_json(text: &str) -> Result<MonDeqParams, ModelIoError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| ModelIoError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.to_params()
}

pub fn model_to_json(params: &MonDeqParams) -> String {
    let mut s = serde_json::to_string_pretty(&ModelFile::from(params)).expect("model serializes");
    s.push('\n');
    s
}

pub fn load_model(path: &Path) -> Result<MonDeqParams, ModelIoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    model_from_json(&text)
}

pub fn save_model(params: &MonDeqParams, path: &Path) -> Result<(), ModelIoError> {
    fs::write(path, model_to_json(params)).map_err(|e| io_err(path, e))
}

/// Rows of `q` features followed by an integer label. A first row that does
/// not parse as numbers is taken as a header.
pub fn dataset_from_reader<R: std::io::Read>(input: R, q: usize) -> Result<Vec<(Vec<f64>, usize)>, ModelIoError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let line = idx + 1;
        let rec = rec.map_err(|e| ModelIoError::Parse { line, column: 0, message: e.to_string() })?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let nums: Result<Vec<f64>, _> = rec.iter().map(|f| f.parse::<f64>()).collect();
        let nums = match nums {
            Ok(v) => v,
            Err(_) if idx == 0 => continue,
            Err(e) => return Err(ModelIoError::Parse { line, column: 0, message: format!("row {line}: {e}") }),
        };
        if nums.len() != q + 1 {
            return Err(ModelIoError::Parse {
                line,
                column: 0,
                message: format!("row {line} has {} fields, expected {}", nums.len(), q + 1),
            });
        }
        let label = nums[q];
        if !(label >= 0.0 && label.fract() == 0.0 && label.is_finite()) {
            return Err(ModelIoError::Parse { line, column: q + 1, message: format!("row {line}: label {label} is not a class index") });
        }
        out.push((nums[..q].to_vec(), label as usize));
    }
    Ok(out)
}

pub fn load_dataset(path: &Path, q: usize) -> Result<Vec<(Vec<f64>, usize)>, ModelIoError> {
    let f = fs::File::open(path).map_err(|e| io_err(path, e))?;
    dataset_from_reader(f, q)
}
