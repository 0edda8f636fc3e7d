//! Matrix files and digests.
//!
//! Matrices are stored as headerless CSV, one interval per line, each value
//! in Rust's shortest round-trip form, so a write followed by a read gives
//! back the same bits.

use std::hash::Hasher;
use std::path::Path;

use fnv::FnvHasher;
use ndarray::{Array2, ArrayView2};
use serde::Serialize;

use crate::error::{CliError, Result};

/// FNV-1a 64 of `bytes` as 16 lowercase hex digits.
pub fn digest(bytes: &[u8]) -> String {
    let mut h = FnvHasher::default();
    h.write(bytes);
    format!("{:016x}", h.finish())
}

pub fn encode_matrix(m: ArrayView2<'_, f64>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::with_capacity(m.len() * 12));
    let mut record = Vec::with_capacity(m.ncols());
    for row in m.rows() {
        record.clear();
        record.extend(row.iter().map(|v| format!("{v:?}")));
        w.write_record(&record).expect("writing to memory");
    }
    w.into_inner().expect("flushing to memory")
}

pub fn decode_matrix(bytes: &[u8], path: &Path) -> Result<Array2<f64>> {
    let fail = |message: String| CliError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| fail(e.to_string()))?;
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(fail(format!(
                    "line {} has {} values, expected {c}",
                    line + 1,
                    record.len()
                )))
            }
            _ => {}
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                fail(format!(
                    "line {}, column {}: not a number: {field:?}",
                    line + 1,
                    j + 1
                ))
            })?;
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| fail("empty matrix file".into()))?;
    Array2::from_shape_vec((rows, cols), values).map_err(|e| fail(e.to_string()))
}

/// Writes `m` and returns the digest of the bytes written.
pub fn write_matrix(path: &Path, m: ArrayView2<'_, f64>) -> Result<String> {
    let bytes = encode_matrix(m);
    std::fs::write(path, &bytes).map_err(|e| CliError::io(path, e))?;
    Ok(digest(&bytes))
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_matrix(&bytes, path)
}

/// Reads `path` and checks its digest against `expected`.
pub fn read_matrix_checked(path: &Path, expected: &str) -> Result<Array2<f64>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let found = digest(&bytes);
    if found != expected {
        return Err(CliError::Digest {
            path: path.to_path_buf(),
            expected: expected.to_string(),
            found,
        });
    }
    decode_matrix(&bytes, path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}
