//! Input documents. The kind is decided by the keys present:
//!
//! | keys              | document                                   |
//! |-------------------|--------------------------------------------|
//! | `moments`         | scalar sequence `[m_0, m_1, ...]`          |
//! | `dim`, `terms`    | operator sequence                          |
//! | `A`, `C`          | `C_A` instance                             |
//! | `A`, `T`          | pair for the `C_A` criteria                |
//! | `T`               | single operator                            |
//! | `operator`        | saved dilation                             |
//! | `dilation`        | report written by `dilate`                 |
//! | `rows`, `cols`    | bare matrix                                |

use std::path::{Path, PathBuf};

use dilation_core::ca_class::{ca_build, CaInstance};
use dilation_core::dilations::DilationResult;
use dilation_core::json::MatrixRepr;
use dilation_core::moments::MomentSequence;
use dilation_core::opcore::c64;
use dilation_core::{ComplexMatrix, DilationError, Tolerance};
use serde_json::{Map, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: invalid JSON at line {line}, column {column}: {message}")]
    Json { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{path}: field `{field}`: {message}")]
    Field { path: PathBuf, field: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] DilationError),
    #[error("refusing to write: {0}")]
    Unverified(String),
}

impl CliError {
    /// 1 for malformed input, 2 for a failed criterion or residual, 4 for a
    /// recursion breakdown.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(DilationError::RecursionBreakdown { .. }) => 4,
            CliError::Core(
                DilationError::CriterionFailed(_)
                | DilationError::VerificationFailed { .. }
                | DilationError::StructureDefect { .. }
                | DilationError::IndefiniteHankel { .. }
                | DilationError::CrossCheckFailed { .. }
                | DilationError::CoreIdentityFailed { .. },
            )
            | CliError::Unverified(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug)]
pub enum Document {
    Sequence(MomentSequence),
    Instance(Box<CaInstance>),
    Pair { a: ComplexMatrix, t: ComplexMatrix },
    Operator(ComplexMatrix),
    Dilation(Box<DilationResult>),
}

impl Document {
    pub fn describe(&self) -> &'static str {
        match self {
            Document::Sequence(_) => "moment sequence",
            Document::Instance(_) => "C_A instance",
            Document::Pair { .. } => "(A, T) pair",
            Document::Operator(_) => "operator",
            Document::Dilation(_) => "dilation",
        }
    }
}

pub fn load(path: &Path, tol: &Tolerance) -> Result<Document, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: path.into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let Value::Object(obj) = value else {
        return Err(field_error(path, "$", "expected a JSON object"));
    };
    parse_document(path, obj, tol)
}

fn field_error(path: &Path, field: &str, message: impl Into<String>) -> CliError {
    CliError::Field { path: path.into(), field: field.into(), message: message.into() }
}

fn take<T: serde::de::DeserializeOwned>(path: &Path, obj: &Map<String, Value>, field: &str) -> Result<T, CliError> {
    let v = obj.get(field).ok_or_else(|| field_error(path, field, "missing"))?;
    serde_json::from_value(v.clone()).map_err(|e| field_error(path, field, e.to_string()))
}

/// Row-major nested arrays; an entry is a real number or an `[re, im]` pair.
fn nested(path: &Path, field: &str, rows: &[Value]) -> Result<ComplexMatrix, CliError> {
    let bad = |msg: &str| field_error(path, field, msg);
    let mut parsed: Vec<Vec<c64>> = Vec::with_capacity(rows.len());
    for row in rows {
        let row = row.as_array().ok_or_else(|| bad("expected an array of rows"))?;
        let entries = row
            .iter()
            .map(|v| match v {
                Value::Number(x) => x.as_f64().map(|re| c64::new(re, 0.0)),
                Value::Array(p) if p.len() == 2 => Some(c64::new(p[0].as_f64()?, p[1].as_f64()?)),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| bad("entries must be numbers or [re, im] pairs"))?;
        parsed.push(entries);
    }
    let cols = parsed.first().map_or(0, Vec::len);
    if parsed.is_empty() || cols == 0 || parsed.iter().any(|r| r.len() != cols) {
        return Err(bad("rows must be non-empty and of equal length"));
    }
    Ok(ComplexMatrix::from_fn(parsed.len(), cols, |i, j| parsed[i][j]))
}

fn matrix(path: &Path, obj: &Map<String, Value>, field: &str) -> Result<ComplexMatrix, CliError> {
    if let Some(Value::Array(rows)) = obj.get(field) {
        return nested(path, field, rows);
    }
    let repr: MatrixRepr = take(path, obj, field)?;
    ComplexMatrix::try_from(repr).map_err(|e| field_error(path, field, e.to_string()))
}

fn parse_document(path: &Path, obj: Map<String, Value>, tol: &Tolerance) -> Result<Document, CliError> {
    let has = |k: &str| obj.contains_key(k);
    if has("moments") {
        let m: Vec<f64> = take(path, &obj, "moments")?;
        let seq = MomentSequence::from_scalars(&m).map_err(|e| field_error(path, "moments", e.to_string()))?;
        return Ok(Document::Sequence(seq));
    }
    if has("terms") {
        let seq: MomentSequence = serde_json::from_value(Value::Object(obj))
            .map_err(|e| field_error(path, "terms", e.to_string()))?;
        return Ok(Document::Sequence(seq));
    }
    if has("A") && has("C") {
        let a = matrix(path, &obj, "A")?;
        let c = matrix(path, &obj, "C")?;
        return Ok(Document::Instance(Box::new(ca_build(&a, &c, tol)?)));
    }
    if has("A") && has("T") {
        return Ok(Document::Pair { a: matrix(path, &obj, "A")?, t: matrix(path, &obj, "T")? });
    }
    if has("T") {
        return Ok(Document::Operator(matrix(path, &obj, "T")?));
    }
    if has("dilation") {
        return Ok(Document::Dilation(Box::new(take(path, &obj, "dilation")?)));
    }
    if has("operator") {
        let r: Result<DilationResult, _> = serde_json::from_value(Value::Object(obj.clone()));
        return match r {
            Ok(r) => Ok(Document::Dilation(Box::new(r))),
            Err(_) => Ok(Document::Operator(matrix(path, &obj, "operator")?)),
        };
    }
    if has("rows") {
        let repr: MatrixRepr = serde_json::from_value(Value::Object(obj)).map_err(|e| field_error(path, "$", e.to_string()))?;
        return Ok(Document::Operator(ComplexMatrix::try_from(repr).map_err(|e| field_error(path, "data", e.to_string()))?));
    }
    let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    Err(field_error(path, "$", format!("unrecognized document with keys {keys:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Document, CliError> {
        let Value::Object(obj) = serde_json::from_str(text).unwrap() else { panic!("not an object") };
        parse_document(Path::new("mem.json"), obj, &Tolerance::default())
    }

    #[test]
    fn nested_rows_accept_real_and_complex_entries() {
        let Document::Operator(m) = parse(r#"{"T": [[1, [0, 2]], [3, 4.5]]}"#).unwrap() else { panic!() };
        assert_eq!(m[(0, 1)], c64::new(0.0, 2.0));
        assert_eq!(m[(1, 1)], c64::new(4.5, 0.0));
    }

    #[test]
    fn ragged_rows_name_the_field() {
        let err = parse(r#"{"T": [[1, 2], [3]]}"#).unwrap_err();
        assert!(matches!(err, CliError::Field { ref field, .. } if field == "T"));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn dispatch_by_keys() {
        assert!(matches!(parse(r#"{"moments": [1, 0]}"#).unwrap(), Document::Sequence(_)));
        assert!(matches!(parse(r#"{"A": [[2]], "C": [[0.5]]}"#).unwrap(), Document::Instance(_)));
        assert!(matches!(parse(r#"{"A": [[2]], "T": [[0.5]]}"#).unwrap(), Document::Pair { .. }));
        assert!(parse(r#"{"x": 1}"#).is_err());
    }

    #[test]
    fn core_errors_map_to_exit_codes() {
        let err = parse(r#"{"A": [[2]], "C": [[1.5]]}"#).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert_eq!(CliError::Unverified("x".into()).exit_code(), 2);
    }
}
