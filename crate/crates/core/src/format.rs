//! Versioned JSON files: channels, correlation matrices, mixed-unitary and
//! toroidal decompositions, and bare matrices.
//!
//! Every document is an object tagged `"format": "muchan/1"` and a `"kind"`.
//! Matrices are nested row-major arrays whose entries are `[re, im]` pairs.

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::channels::{self, KrausChannel};
use crate::constructive::ToroidalDecomposition;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, Tolerance};
use crate::mu_analysis::MixedUnitaryDecomposition;

pub const FORMAT_VERSION: &str = "muchan/1";

/// A parsed and validated file.
#[derive(Debug, Clone)]
pub enum Document {
    Kraus(KrausChannel),
    Correlation(CMatrix),
    MixedUnitary(MixedUnitaryDecomposition),
    Toroidal(ToroidalDecomposition),
    Matrix(CMatrix),
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Kraus(_) => "kraus",
            Document::Correlation(_) => "correlation",
            Document::MixedUnitary(_) => "mixed-unitary",
            Document::Toroidal(_) => "toroidal",
            Document::Matrix(_) => "matrix",
        }
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("format".into(), json!(FORMAT_VERSION));
        obj.insert("kind".into(), json!(self.kind()));
        match self {
            Document::Kraus(phi) => {
                obj.insert("dim_in".into(), json!(phi.dim_in()));
                obj.insert("dim_out".into(), json!(phi.dim_out()));
                let ops: Vec<Value> = phi.kraus().iter().map(matrix_to_json).collect();
                obj.insert("operators".into(), Value::Array(ops));
            }
            Document::Correlation(m) | Document::Matrix(m) => {
                if let Document::Correlation(_) = self {
                    obj.insert("dim".into(), json!(m.nrows()));
                } else {
                    obj.insert("rows".into(), json!(m.nrows()));
                    obj.insert("cols".into(), json!(m.ncols()));
                }
                obj.insert("matrix".into(), matrix_to_json(m));
            }
            Document::MixedUnitary(d) => {
                obj.insert("dim".into(), json!(d.dim()));
                obj.insert("probs".into(), json!(d.probs()));
                let us: Vec<Value> = d.unitaries().iter().map(matrix_to_json).collect();
                obj.insert("unitaries".into(), Value::Array(us));
            }
            Document::Toroidal(t) => {
                obj.insert("dim".into(), json!(t.dim()));
                obj.insert("probs".into(), json!(t.probs()));
                let vs: Vec<Value> = t
                    .vectors()
                    .iter()
                    .map(|v| Value::Array(v.iter().map(|z| complex_to_json(*z)).collect()))
                    .collect();
                obj.insert("vectors".into(), Value::Array(vs));
            }
        }
        Value::Object(obj)
    }

    /// Parses and validates a document. Schema problems are reported as
    /// [`Error::Format`] with a JSON-pointer location; objects that parse but
    /// violate their invariants are reported as [`Error::Validation`].
    pub fn from_json(v: &Value, tol: &Tolerance) -> Result<Document> {
        let obj = v.as_object().ok_or_else(|| fmt_err("", "expected a JSON object"))?;
        match obj.get("format") {
            Some(Value::String(s)) if s == FORMAT_VERSION => {}
            Some(Value::String(s)) => {
                return Err(fmt_err(
                    "/format",
                    format!("unsupported format {s:?}, expected {FORMAT_VERSION:?}"),
                ))
            }
            _ => return Err(fmt_err("/format", "missing format tag")),
        }
        let kind = field(obj, "kind")?
            .as_str()
            .ok_or_else(|| fmt_err("/kind", "expected a string"))?;
        match kind {
            "kraus" => {
                let n = usize_field(obj, "dim_in")?;
                let m = usize_field(obj, "dim_out")?;
                let ops = matrix_list(field(obj, "operators")?, "/operators")?;
                if ops.is_empty() {
                    return Err(fmt_err("/operators", "need at least one operator"));
                }
                for (k, a) in ops.iter().enumerate() {
                    if a.shape() != (m, n) {
                        return Err(fmt_err(
                            &format!("/operators/{k}"),
                            format!("shape {:?} does not match dim_out x dim_in = {m}x{n}", a.shape()),
                        ));
                    }
                }
                Ok(Document::Kraus(KrausChannel::new(ops, tol)?))
            }
            "correlation" => {
                let n = usize_field(obj, "dim")?;
                let m = matrix_from_json(field(obj, "matrix")?, "/matrix")?;
                if m.shape() != (n, n) {
                    return Err(fmt_err("/matrix", format!("shape {:?} does not match dim {n}", m.shape())));
                }
                channels::validate_correlation(&m, tol)?;
                Ok(Document::Correlation(m))
            }
            "matrix" => {
                let m = matrix_from_json(field(obj, "matrix")?, "/matrix")?;
                Ok(Document::Matrix(m))
            }
            "mixed-unitary" => {
                let n = usize_field(obj, "dim")?;
                let probs = float_list(field(obj, "probs")?, "/probs")?;
                let us = matrix_list(field(obj, "unitaries")?, "/unitaries")?;
                if probs.len() != us.len() {
                    return Err(fmt_err("/probs", "probs and unitaries differ in length"));
                }
                for (k, u) in us.iter().enumerate() {
                    if u.shape() != (n, n) {
                        return Err(fmt_err(
                            &format!("/unitaries/{k}"),
                            format!("shape {:?} does not match dim {n}", u.shape()),
                        ));
                    }
                }
                Ok(Document::MixedUnitary(MixedUnitaryDecomposition::new(probs, us, tol)?))
            }
            "toroidal" => {
                let n = usize_field(obj, "dim")?;
                let probs = float_list(field(obj, "probs")?, "/probs")?;
                let raw = field(obj, "vectors")?
                    .as_array()
                    .ok_or_else(|| fmt_err("/vectors", "expected an array"))?;
                let mut vectors = Vec::with_capacity(raw.len());
                for (k, v) in raw.iter().enumerate() {
                    let at = format!("/vectors/{k}");
                    let entries = v.as_array().ok_or_else(|| fmt_err(&at, "expected an array"))?;
                    if entries.len() != n {
                        return Err(fmt_err(&at, format!("length {} does not match dim {n}", entries.len())));
                    }
                    let row = entries
                        .iter()
                        .enumerate()
                        .map(|(j, z)| complex_from_json(z, &format!("{at}/{j}")))
                        .collect::<Result<Vec<_>>>()?;
                    vectors.push(row);
                }
                if probs.len() != vectors.len() {
                    return Err(fmt_err("/probs", "probs and vectors differ in length"));
                }
                Ok(Document::Toroidal(ToroidalDecomposition::new(probs, vectors, tol)?))
            }
            other => Err(fmt_err("/kind", format!("unknown kind {other:?}"))),
        }
    }

    pub fn to_string_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("documents serialize")
    }

    pub fn read(path: &Path, tol: &Tolerance) -> Result<Document> {
        let text = std::fs::read_to_string(path)?;
        let v: Value = serde_json::from_str(&text)?;
        Document::from_json(&v, tol)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = self.to_string_pretty();
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

fn fmt_err(path: &str, message: impl Into<String>) -> Error {
    Error::Format {
        path: if path.is_empty() { "/".into() } else { path.into() },
        message: message.into(),
    }
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| fmt_err(&format!("/{key}"), "missing field"))
}

fn usize_field(obj: &Map<String, Value>, key: &str) -> Result<usize> {
    field(obj, key)?
        .as_u64()
        .filter(|&n| n > 0)
        .map(|n| n as usize)
        .ok_or_else(|| fmt_err(&format!("/{key}"), "expected a positive integer"))
}

fn float_list(v: &Value, at: &str) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| fmt_err(at, "expected an array"))?;
    arr.iter()
        .enumerate()
        .map(|(k, x)| {
            x.as_f64()
                .ok_or_else(|| fmt_err(&format!("{at}/{k}"), "expected a number"))
        })
        .collect()
}

fn matrix_list(v: &Value, at: &str) -> Result<Vec<CMatrix>> {
    let arr = v.as_array().ok_or_else(|| fmt_err(at, "expected an array"))?;
    arr.iter()
        .enumerate()
        .map(|(k, m)| matrix_from_json(m, &format!("{at}/{k}")))
        .collect()
}

pub fn complex_to_json(z: C64) -> Value {
    json!([z.re, z.im])
}

fn complex_from_json(v: &Value, at: &str) -> Result<C64> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(C64::new(re, im)),
            _ => Err(fmt_err(at, "entries of [re, im] must be numbers")),
        },
        _ => Err(fmt_err(at, "expected a complex entry [re, im]")),
    }
}

/// Row-major nested arrays of `[re, im]`.
pub fn matrix_to_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex_to_json(m[(i, j)])).collect()))
            .collect(),
    )
}

/// Parses a matrix literal; `at` is the JSON-pointer location used in errors.
pub fn matrix_from_json(v: &Value, at: &str) -> Result<CMatrix> {
    let rows = v.as_array().ok_or_else(|| fmt_err(at, "expected an array of rows"))?;
    if rows.is_empty() {
        return Err(fmt_err(at, "matrix has no rows"));
    }
    let mut entries = Vec::new();
    let mut cols = None;
    for (i, row) in rows.iter().enumerate() {
        let at_row = format!("{at}/{i}");
        let row = row.as_array().ok_or_else(|| fmt_err(&at_row, "expected a row array"))?;
        if row.is_empty() || cols.is_some_and(|c| c != row.len()) {
            return Err(fmt_err(&at_row, "rows must be nonempty and of equal length"));
        }
        cols = Some(row.len());
        for (j, z) in row.iter().enumerate() {
            entries.push(complex_from_json(z, &format!("{at_row}/{j}"))?);
        }
    }
    let m = CMatrix::from_row_slice(rows.len(), cols.unwrap_or(0), &entries);
    linalg::check_finite(&m)?;
    Ok(m)
}
