use thiserror::Error;

pub type Result<T> = std::result::Result<T, DilationError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DilationError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("matrix is not positive semidefinite: minimum eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("insufficient data: need {needed} terms, sequence has {available}")]
    InsufficientData { needed: usize, available: usize },
    #[error("point {modulus} lies outside the open unit disk")]
    DiskViolation { modulus: f64 },
    #[error("tail bound unavailable: sequence is not flagged contractive")]
    TailBoundUnavailable,
    #[error("binomial order {k} exceeds the exact-arithmetic limit of 60")]
    Overflow { k: usize },
    #[error("operation requires a scalar (dim = 1) sequence, got dim = {dim}")]
    NotScalar { dim: usize },
    #[error("Hankel moment matrix is indefinite at order {order} (pivot {pivot:.3e})")]
    IndefiniteHankel { order: usize, pivot: f64 },
    #[error("criterion failed: {0}")]
    CriterionFailed(String),
    #[error("recursion breakdown at level {level}: residual {residual:.3e}")]
    RecursionBreakdown { level: usize, residual: f64 },
    #[error("dilation verification failed at power {order}: residual {residual:.3e}")]
    VerificationFailed { order: usize, residual: f64 },
    #[error("structure check failed: defect {defect:.3e} exceeds {bound:.3e}")]
    StructureDefect { defect: f64, bound: f64 },
    #[error("operator is not a contraction: norm {norm}")]
    NotContraction { norm: f64 },
    #[error("operators do not commute: defect {defect:.3e}")]
    NotCommuting { defect: f64 },
    #[error("operator is not invertible: minimum eigenvalue {min_eigenvalue:.3e}")]
    NotInvertible { min_eigenvalue: f64 },
    #[error("the two moment formulas disagree: defect {defect:.3e}")]
    CrossCheckFailed { defect: f64 },
    #[error("core block identity failed: defect {defect:.3e}")]
    CoreIdentityFailed { defect: f64 },
    #[error("A1 <= A2 fails: minimum eigenvalue of A2 - A1 is {min_eigenvalue:.3e}")]
    OrderViolation { min_eigenvalue: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}
