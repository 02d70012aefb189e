//! JSON encodings shared across the crate and the CLI.
//!
//! A matrix is `{"rows": r, "cols": c, "data": [[re, im], ...]}` with
//! `data` in row-major order.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::opcore::{c64, ComplexMatrix};
use crate::{DilationError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixRepr {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixRepr {
    fn from(m: &ComplexMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        MatrixRepr { rows: m.nrows(), cols: m.ncols(), data }
    }
}

impl TryFrom<MatrixRepr> for ComplexMatrix {
    type Error = DilationError;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        if r.data.len() != r.rows * r.cols {
            return Err(DilationError::Parse(format!(
                "matrix declares {}x{} but has {} entries",
                r.rows,
                r.cols,
                r.data.len()
            )));
        }
        if let Some(k) = r.data.iter().position(|[a, b]| !a.is_finite() || !b.is_finite()) {
            return Err(DilationError::Parse(format!("matrix entry {k} is not finite")));
        }
        Ok(ComplexMatrix::from_fn(r.rows, r.cols, |i, j| {
            let [re, im] = r.data[i * r.cols + j];
            c64::new(re, im)
        }))
    }
}

/// `#[serde(with = "matrix")]` adapter for `ComplexMatrix` fields.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ComplexMatrix, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        ComplexMatrix::try_from(repr).map_err(serde::de::Error::custom)
    }
}

pub fn matrix_to_value(m: &ComplexMatrix) -> serde_json::Value {
    serde_json::to_value(MatrixRepr::from(m)).expect("matrix encoding is infallible")
}

pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    let repr: MatrixRepr = serde_json::from_str(text).map_err(|e| DilationError::Parse(e.to_string()))?;
    ComplexMatrix::try_from(repr)
}

pub fn matrix_to_string(m: &ComplexMatrix) -> String {
    serde_json::to_string(&MatrixRepr::from(m)).expect("matrix encoding is infallible")
}

/// Complex vector as a list of `[re, im]` pairs.
pub fn pairs(v: &[c64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn from_pairs(v: &[[f64; 2]]) -> Vec<c64> {
    v.iter().map(|[re, im]| c64::new(*re, *im)).collect()
}
