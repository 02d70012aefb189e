//! Moment sequences and dilation-existence criteria.
//!
//! Every criterion returns a [`CriterionReport`]. A `NO` always carries a
//! witness that can be re-evaluated to reproduce the negative margin.

mod criteria;
mod jacobi;

pub use criteria::{
    completely_monotone_check, hamburger_check, poisson_check, poisson_check_with, selfadjoint_contraction_check,
    toeplitz_form_value, toeplitz_positivity_check, DEFAULT_POISSON_RADII,
};
pub use jacobi::{jacobi_matrix, jacobi_parameters, JacobiParameters};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::json::MatrixRepr;
use crate::opcore::{
    c64, hermitian_defect, identity, op_norm, scalar, ComplexMatrix, PsdVerdict,
    Tolerance,
};
use crate::{DilationError, Result};

/// Truncated operator sequence `A_0 = I, A_1, ..., A_N` on `C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    dim: usize,
    terms: Vec<ComplexMatrix>,
    hermitian: bool,
    contractive: bool,
}

impl MomentSequence {
    /// Validates shapes and `A_0 = I` (within `tau`; stored as exact `I`)
    /// and computes the Hermitian/contractive flags.
    pub fn new(terms: Vec<ComplexMatrix>, tol: &Tolerance) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| DilationError::InvalidArgument("empty moment sequence".into()))?;
        let dim = first.nrows();
        for (n, t) in terms.iter().enumerate() {
            if t.shape() != (dim, dim) {
                return Err(DilationError::ShapeMismatch(format!(
                    "term {n} is {}x{}, expected {dim}x{dim}",
                    t.nrows(),
                    t.ncols()
                )));
            }
            if !crate::opcore::is_finite(t) {
                return Err(DilationError::InvalidArgument(format!("term {n} has non-finite entries")));
            }
        }
        let defect = op_norm(&(first - identity(dim)));
        if defect > tol.at_scale(1.0) {
            return Err(DilationError::InvalidArgument(format!(
                "A_0 must be the identity (defect {defect:.3e})"
            )));
        }
        let mut terms = terms;
        terms[0] = identity(dim);
        let hermitian = terms.iter().all(|t| hermitian_defect(t) <= tol.tau(t));
        let contractive = terms.iter().all(|t| op_norm(t) <= 1.0 + tol.at_scale(1.0));
        Ok(MomentSequence { dim, terms, hermitian, contractive })
    }

    /// Scalar moments `m_0 = 1, m_1, ...`.
    pub fn from_scalars(m: &[f64]) -> Result<Self> {
        Self::new(m.iter().map(|&x| scalar(x)).collect(), &Tolerance::default())
    }

    /// `A_n = T^n` for `n = 0..=n_max`.
    pub fn from_powers(t: &ComplexMatrix, n_max: usize) -> Result<Self> {
        crate::opcore::ensure_square(t)?;
        let mut terms = vec![identity(t.nrows())];
        for n in 1..=n_max {
            let next = &terms[n - 1] * t;
            terms.push(next);
        }
        Self::new(terms, &Tolerance::default())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Highest available index `N`.
    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn terms(&self) -> &[ComplexMatrix] {
        &self.terms
    }

    pub fn term(&self, n: usize) -> &ComplexMatrix {
        &self.terms[n]
    }

    /// `A_n` for `n >= 0` and `A_n^*` for negative `n`.
    pub fn signed_term(&self, n: isize) -> ComplexMatrix {
        if n >= 0 {
            self.terms[n as usize].clone()
        } else {
            self.terms[n.unsigned_abs()].adjoint()
        }
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_contractive(&self) -> bool {
        self.contractive
    }

    /// The first `n + 1` terms.
    pub fn truncated(&self, n: usize) -> MomentSequence {
        let terms: Vec<_> = self.terms[..=n.min(self.order())].to_vec();
        let hermitian = self.hermitian;
        let contractive = self.contractive;
        MomentSequence { dim: self.dim, terms, hermitian, contractive }
    }

    pub(crate) fn require_hermitian(&self, what: &str) -> Result<()> {
        if self.hermitian {
            Ok(())
        } else {
            Err(DilationError::InvalidArgument(format!("{what} requires a Hermitian sequence")))
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TermRepr {
    Identity(String),
    Matrix(MatrixRepr),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceRepr {
    dim: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for MomentSequence {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let terms = self.terms.iter().map(|t| TermRepr::Matrix(MatrixRepr::from(t))).collect();
        SequenceRepr { dim: self.dim, terms }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MomentSequence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let repr = SequenceRepr::deserialize(d)?;
        let mut terms = Vec::with_capacity(repr.terms.len());
        for (n, t) in repr.terms.into_iter().enumerate() {
            match t {
                TermRepr::Identity(s) if s == "I" && n == 0 => terms.push(identity(repr.dim)),
                TermRepr::Identity(s) => {
                    return Err(D::Error::custom(format!("terms[{n}]: unexpected string {s:?}")))
                }
                TermRepr::Matrix(m) => {
                    let m = ComplexMatrix::try_from(m).map_err(|e| D::Error::custom(format!("terms[{n}]: {e}")))?;
                    terms.push(m);
                }
            }
        }
        if terms.first().is_some_and(|t| t.nrows() != repr.dim) {
            return Err(D::Error::custom(format!("terms[0] does not match dim {}", repr.dim)));
        }
        MomentSequence::new(terms, &Tolerance::default()).map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Yes,
    No,
    Borderline,
}

impl Verdict {
    pub fn from_psd(v: PsdVerdict) -> Self {
        match v {
            PsdVerdict::Psd => Verdict::Yes,
            PsdVerdict::NotPsd => Verdict::No,
            PsdVerdict::Borderline => Verdict::Borderline,
        }
    }

    /// NO dominates BORDERLINE dominates YES.
    pub fn combine(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (No, _) | (_, No) => No,
            (Borderline, _) | (_, Borderline) => Borderline,
            _ => Yes,
        }
    }
}

/// Concrete data that reproduces a negative margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    /// Unit vector `v` with `<v, M v> < 0` for the matrix checked at `order`.
    Vector { order: usize, label: String, vector: Vec<[f64; 2]>, value: f64 },
    /// Difference `sum_i C(k, i) (-1)^i A_{n+i}` with a negative direction.
    Difference { k: usize, n: usize, vector: Vec<[f64; 2]>, value: f64 },
    /// Coefficients `c` and unit `h` with `sum conj(c_l) c_k <h, A_{k-l} h> < 0`.
    Coefficients { c: Vec<[f64; 2]>, h: Vec<[f64; 2]>, value: f64 },
    /// Grid point `z` and unit `h` with `<h, K(z) h> < 0` for a kernel `K`.
    GridPoint { z: [f64; 2], vector: Vec<[f64; 2]>, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub criterion: String,
    pub satisfied: Verdict,
    pub max_order_checked: usize,
    /// Smallest margin seen (eigenvalue minus the threshold it had to clear).
    pub worst_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<String>,
    /// Number of grid points or sub-checks per verdict, where meaningful.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<VerdictCounts>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub yes: usize,
    pub no: usize,
    pub borderline: usize,
}

impl VerdictCounts {
    pub fn add(&mut self, v: Verdict) {
        match v {
            Verdict::Yes => self.yes += 1,
            Verdict::No => self.no += 1,
            Verdict::Borderline => self.borderline += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    /// `max_{1 <= n <= N} ||A_n||^{1/n}`.
    pub bound: f64,
    pub ok: bool,
    /// Whether `bound <= 1 + tol`, reported for contractive sequences.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_unit: Option<bool>,
}

pub fn validate_growth(seq: &MomentSequence, tol: &Tolerance) -> Result<GrowthReport> {
    if seq.order() < 1 {
        return Err(DilationError::InsufficientData { needed: 2, available: 1 });
    }
    let bound = (1..=seq.order())
        .map(|n| op_norm(seq.term(n)).powf(1.0 / n as f64))
        .fold(0.0, f64::max);
    let within_unit = seq.is_contractive().then(|| bound <= 1.0 + tol.at_scale(1.0));
    Ok(GrowthReport { bound, ok: bound.is_finite(), within_unit })
}

/// Block Hankel matrix with `(i, j)` block `A_{i+j+shift}`, `0 <= i, j <= n`.
pub fn hankel(seq: &MomentSequence, n: usize, shift: usize) -> Result<ComplexMatrix> {
    if shift > 2 {
        return Err(DilationError::InvalidArgument(format!("shift {shift} not in {{0,1,2}}")));
    }
    let needed = 2 * n + shift;
    if needed > seq.order() {
        return Err(DilationError::InsufficientData { needed: needed + 1, available: seq.order() + 1 });
    }
    let d = seq.dim();
    let mut h = ComplexMatrix::zeros((n + 1) * d, (n + 1) * d);
    for i in 0..=n {
        for j in 0..=n {
            h.view_mut((i * d, j * d), (d, d)).copy_from(seq.term(i + j + shift));
        }
    }
    Ok(h)
}

/// `S_A(z) = sum_{n=0}^{K} z^n A_n^*`.
pub fn szego_partial_sum(seq: &MomentSequence, z: c64, k: usize) -> Result<ComplexMatrix> {
    if z.norm() >= 1.0 {
        return Err(DilationError::DiskViolation { modulus: z.norm() });
    }
    if k > seq.order() {
        return Err(DilationError::InsufficientData { needed: k + 1, available: seq.order() + 1 });
    }
    let d = seq.dim();
    let mut sum = ComplexMatrix::zeros(d, d);
    let mut zn = c64::new(1.0, 0.0);
    for n in 0..=k {
        sum += seq.term(n).adjoint() * zn;
        zn *= z;
    }
    Ok(sum)
}
