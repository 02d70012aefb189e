//! Dilation constructors and the verifier they all report through.
//!
//! A dilation acts on `C^K` with the base space `C^d` as the first `d`
//! coordinates. Finite sections of shifts cannot be exactly isometric, so
//! results record which block columns (exit edge) and rows (entry edge) are
//! excluded from the structure defect, and report the excluded part
//! separately.

mod isometric;
mod reduce;
mod selfadjoint;

pub use isometric::{isometric_recursive, schaffer_isometry, schaffer_unitary};
pub use reduce::{equivalence_by_moments, minimal_reduce, MinimalReduction};
pub use selfadjoint::{gns_selfadjoint, tridiagonal_recursive, TridiagonalBlocks};

use serde::{Deserialize, Serialize};

use crate::json;
use crate::moments::MomentSequence;
use crate::opcore::{corner_moments, hermitian_defect, identity, op_norm, ComplexMatrix, Tolerance};
use crate::{DilationError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DilationKind {
    SelfAdjoint,
    Positive,
    Isometric,
    Unitary,
    Partial,
}

/// A named numeric check with the bound it was held to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Certificate {
    pub fn new(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Certificate { name: name.into(), value, bound, passed: value <= bound }
    }
}

/// Coordinates excluded from the structure defect of a truncated shift.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Edges {
    /// Columns mapping out of the truncation (isometry fails there).
    pub exit_cols: Vec<usize>,
    /// Rows nothing maps into (co-isometry fails there).
    pub enter_rows: Vec<usize>,
}

impl Edges {
    pub fn none() -> Self {
        Edges::default()
    }

    pub fn is_empty(&self) -> bool {
        self.exit_cols.is_empty() && self.enter_rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationResult {
    pub kind: DilationKind,
    #[serde(with = "json::matrix")]
    pub operator: ComplexMatrix,
    pub ambient_dim: usize,
    pub base_dim: usize,
    /// Highest power `n` for which `(B^n)_00 = A_n` is certified.
    pub guaranteed_orders: usize,
    /// `||(B^n)_00 - A_n||_2` for `n = 0..=guaranteed_orders`.
    pub residuals: Vec<f64>,
    pub structure_defect: f64,
    /// Full defect including the truncation edges, when edges are excluded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_defect: Option<f64>,
    #[serde(default, skip_serializing_if = "Edges::is_empty")]
    pub edges: Edges,
    /// `||((B^*)^n)_00 - A_n^*||_2` where backward powers are certified.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub adjoint_residuals: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<Certificate>,
    /// Dimension of each block level, for constructors that build by level.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub level_dims: Vec<usize>,
    /// The construction stopped early because the data has finite rank.
    #[serde(default)]
    pub rank_terminated: bool,
}

impl DilationResult {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().chain(&self.adjoint_residuals).fold(0.0, |a, &b| a.max(b))
    }

    /// Residuals and structure defect within `verify` bands, and every
    /// certificate passed.
    pub fn passes(&self, seq: &MomentSequence, tol: &Tolerance) -> bool {
        self.first_failure(seq, tol).is_none()
    }

    fn first_failure(&self, seq: &MomentSequence, tol: &Tolerance) -> Option<DilationError> {
        for (n, &r) in self.residuals.iter().enumerate() {
            let scale = seq.terms().get(n).map(op_norm).unwrap_or(1.0);
            if !(r <= tol.verify(scale)) {
                return Some(DilationError::VerificationFailed { order: n, residual: r });
            }
        }
        for (n, &r) in self.adjoint_residuals.iter().enumerate() {
            let scale = seq.terms().get(n).map(op_norm).unwrap_or(1.0);
            if !(r <= tol.verify(scale)) {
                return Some(DilationError::VerificationFailed { order: n, residual: r });
            }
        }
        let bound = tol.verify(op_norm(&self.operator));
        if !(self.structure_defect <= bound) {
            return Some(DilationError::StructureDefect { defect: self.structure_defect, bound });
        }
        self.certificates
            .iter()
            .find(|c| !c.passed)
            .map(|c| DilationError::StructureDefect { defect: c.value, bound: c.bound })
    }

    /// Fails with the first violated residual or structure bound.
    pub fn ensure_passes(self, seq: &MomentSequence, tol: &Tolerance) -> Result<Self> {
        match self.first_failure(seq, tol) {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

/// Structure defect per kind, with `edges` excluded:
/// Hermitian defect for self-adjoint, plus negative part of the spectrum for
/// positive, `||V*V - I||` for isometric, `||U*U - I|| + ||UU* - I||` for
/// unitary, `||(B*B)^2 - B*B||` for partial isometries.
pub fn structure_defect(b: &ComplexMatrix, kind: DilationKind, edges: &Edges) -> f64 {
    match kind {
        DilationKind::SelfAdjoint => hermitian_defect(b),
        DilationKind::Positive => {
            let h = crate::opcore::hermitian_part(b);
            let lam = crate::opcore::hermitian_eig(&h, &Tolerance::default()).map(|(l, _)| l.first().copied().unwrap_or(0.0));
            hermitian_defect(b) + lam.map(|l| (-l).max(0.0)).unwrap_or(f64::INFINITY)
        }
        DilationKind::Isometric => gram_defect(&(b.adjoint() * b), &edges.exit_cols),
        DilationKind::Unitary => {
            gram_defect(&(b.adjoint() * b), &edges.exit_cols) + gram_defect(&(b * b.adjoint()), &edges.enter_rows)
        }
        DilationKind::Partial => {
            let p = b.adjoint() * b;
            op_norm(&(&p * &p - &p))
        }
    }
}

/// `||G - I||` on the coordinates not in `skip`.
fn gram_defect(g: &ComplexMatrix, skip: &[usize]) -> f64 {
    let keep: Vec<usize> = (0..g.nrows()).filter(|i| !skip.contains(i)).collect();
    let n = keep.len();
    let sub = ComplexMatrix::from_fn(n, n, |i, j| g[(keep[i], keep[j])]);
    op_norm(&(sub - identity(n)))
}

/// Recomputes corner residuals and the structure defect from scratch.
/// Residuals cover `n = 0..=min(n_max, N)`.
pub fn verify_dilation(b: &ComplexMatrix, seq: &MomentSequence, n_max: usize, kind: DilationKind) -> Result<DilationResult> {
    verify_dilation_with(b, seq, n_max, kind, &Edges::none())
}

pub fn verify_dilation_with(
    b: &ComplexMatrix,
    seq: &MomentSequence,
    n_max: usize,
    kind: DilationKind,
    edges: &Edges,
) -> Result<DilationResult> {
    let d = seq.dim();
    let top = n_max.min(seq.order());
    let corners = corner_moments(b, d, top)?;
    let residuals = corners.iter().zip(seq.terms()).map(|(c, a)| op_norm(&(c - a))).collect();
    let structure = structure_defect(b, kind, edges);
    let edge_defect = (!edges.is_empty()).then(|| structure_defect(b, kind, &Edges::none()));
    Ok(DilationResult {
        kind,
        operator: b.clone(),
        ambient_dim: b.nrows(),
        base_dim: d,
        guaranteed_orders: top,
        residuals,
        structure_defect: structure,
        edge_defect,
        edges: edges.clone(),
        adjoint_residuals: Vec::new(),
        certificates: Vec::new(),
        level_dims: Vec::new(),
        rank_terminated: false,
    })
}

/// `||((B^*)^n)_00 - A_n^*||` for `n = 0..=n_max`.
pub fn adjoint_residuals(b: &ComplexMatrix, seq: &MomentSequence, n_max: usize) -> Result<Vec<f64>> {
    let top = n_max.min(seq.order());
    let corners = corner_moments(&b.adjoint(), seq.dim(), top)?;
    Ok(corners.iter().zip(seq.terms()).map(|(c, a)| op_norm(&(c - a.adjoint()))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::{from_real, scalar};

    fn example_v() -> ComplexMatrix {
        from_real(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0])
    }

    #[test]
    fn verifies_tridiagonal_example_exactly() {
        let seq = MomentSequence::from_scalars(&[1.0, 0.0, 1.0, 0.0, 2.0]).unwrap();
        let r = verify_dilation(&example_v(), &seq, 4, DilationKind::SelfAdjoint).unwrap();
        assert_eq!(r.residuals, vec![0.0; 5]);
        assert_eq!(r.structure_defect, 0.0);
        assert!(r.passes(&seq, &Tolerance::default()));
    }

    #[test]
    fn identity_against_identity_sequence() {
        let seq = MomentSequence::new(vec![identity(3); 4], &Tolerance::default()).unwrap();
        let r = verify_dilation(&identity(3), &seq, 3, DilationKind::Unitary).unwrap();
        assert!(r.residuals.iter().all(|&x| x == 0.0));
        assert_eq!(r.base_dim, 3);
    }

    #[test]
    fn random_pair_reports_without_error() {
        let mut rng = crate::random::rng(5);
        let b = crate::random::ginibre(&mut rng, 4, 4);
        let seq = MomentSequence::from_scalars(&[1.0, 0.3, 0.2, 0.1]).unwrap();
        let r = verify_dilation(&b, &seq, 3, DilationKind::Isometric).unwrap();
        assert_eq!(r.residuals.len(), 4);
        assert!(r.residuals[1] > 0.0);
        assert!(!r.passes(&seq, &Tolerance::default()));
    }

    #[test]
    fn edges_are_excluded_and_reported() {
        let shift = from_real(3, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let seq = MomentSequence::from_scalars(&[1.0, 0.0, 0.0]).unwrap();
        let edges = Edges { exit_cols: vec![2], enter_rows: vec![0] };
        let r = verify_dilation_with(&shift, &seq, 2, DilationKind::Unitary, &edges).unwrap();
        assert!(r.structure_defect < 1e-15);
        assert!((r.edge_defect.unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let seq = MomentSequence::from_scalars(&[1.0, 0.5]).unwrap();
        let r = verify_dilation(&scalar(0.5), &seq, 1, DilationKind::SelfAdjoint).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains(r#""kind":"SELF_ADJOINT""#));
        let back: DilationResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
