//! Dense complex linear algebra kernel.
//!
//! All spectral work goes through the Hermitian eigendecomposition in
//! [`hermitian_eig`]; square roots, inverse roots and pseudo-inverses are
//! spectral functions of it, never iterative.

mod block;
mod eig;
mod krylov;
mod radius;

pub use block::{
    block_assemble, block_offdiag_defect, corner_compress, corner_moments, BlockMatrix,
};
pub use eig::{
    hermitian_eig, inv_sqrt_pd, orth, pinv_psd, psd_check, psd_factor, right_pinv, singular_values, sqrt_psd,
    PinvResult, PsdReport, PsdVerdict,
};
pub use krylov::{krylov_orthonormalize, KrylovBasis};
pub use radius::{numerical_radius, numerical_radius_with, DEFAULT_RADIUS_GRID};

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

#[allow(non_camel_case_types)]
pub type c64 = Complex<f64>;

/// Dense complex matrix. Column-major in memory; the JSON encoding is
/// row-major (see [`crate::json`]).
pub type ComplexMatrix = DMatrix<c64>;

/// Scale-aware tolerance: `tau(M) = abs + rel * ||M||_2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-10, rel: 1e-12 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        assert!(abs >= 0.0 && rel >= 0.0 && abs.is_finite() && rel.is_finite());
        Tolerance { abs, rel }
    }

    pub fn tau(&self, m: &ComplexMatrix) -> f64 {
        self.at_scale(op_norm(m))
    }

    pub fn at_scale(&self, scale: f64) -> f64 {
        self.abs + self.rel * scale
    }

    /// Tolerance widened for a quantity built by cancellation from terms
    /// whose norms add up to `scale`.
    pub fn widened(&self, scale: f64) -> Tolerance {
        Tolerance { abs: self.abs + self.rel * scale, rel: self.rel }
    }

    /// The acceptance band used by verifiers: `100 * tau` at the given scale.
    pub fn verify(&self, scale: f64) -> f64 {
        100.0 * self.at_scale(scale.max(1.0))
    }
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

/// 1x1 matrix holding a real scalar.
pub fn scalar(x: f64) -> ComplexMatrix {
    ComplexMatrix::from_element(1, 1, c64::new(x, 0.0))
}

/// Builds a matrix from real entries given in row-major order.
pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> ComplexMatrix {
    assert_eq!(entries.len(), rows * cols, "entry count does not match shape");
    ComplexMatrix::from_fn(rows, cols, |i, j| c64::new(entries[i * cols + j], 0.0))
}

pub fn real_diag(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { c64::new(values[i], 0.0) } else { c64::new(0.0, 0.0) })
}

/// Spectral norm `||M||_2`, as the square root of the top eigenvalue of the
/// smaller of `M*M` and `MM*`.
pub fn op_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() < m.ncols() { m * m.adjoint() } else { m.adjoint() * m };
    let top = nalgebra::SymmetricEigen::new(hermitian_part(&gram)).eigenvalues.max();
    top.max(0.0).sqrt()
}

pub fn hermitian_defect(m: &ComplexMatrix) -> f64 {
    op_norm(&(m - m.adjoint()))
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * c64::new(0.5, 0.0)
}

pub fn matrix_power(m: &ComplexMatrix, n: usize) -> ComplexMatrix {
    assert!(m.is_square());
    let mut out = identity(m.nrows());
    for _ in 0..n {
        out = &out * m;
    }
    out
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub(crate) fn ensure_square(m: &ComplexMatrix) -> crate::Result<usize> {
    if m.is_square() {
        Ok(m.nrows())
    } else {
        Err(crate::DilationError::NotSquare { rows: m.nrows(), cols: m.ncols() })
    }
}

/// Defect of `M* M = I`, optionally ignoring the columns in `skip`.
pub fn isometry_defect(m: &ComplexMatrix, skip: Option<std::ops::Range<usize>>) -> f64 {
    let gram = m.adjoint() * m;
    let keep: Vec<usize> = (0..m.ncols()).filter(|j| skip.as_ref().is_none_or(|r| !r.contains(j))).collect();
    let n = keep.len();
    let sub = ComplexMatrix::from_fn(n, n, |i, j| gram[(keep[i], keep[j])]);
    op_norm(&(sub - identity(n)))
}
