use crate::opcore::{
    block_offdiag_defect, corner_moments, ensure_square, hermitian_defect, krylov_orthonormalize, op_norm,
    ComplexMatrix, Tolerance,
};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct MinimalReduction {
    pub operator: ComplexMatrix,
    pub level_dims: Vec<usize>,
    /// Largest block `(i, j)` with `i > j + 1` of the compression.
    pub hessenberg_defect: f64,
    /// Largest block with `|i - j| > 1`, for Hermitian input.
    pub tridiagonal_defect: Option<f64>,
}

/// Compression of `B` to `span{B^m H : m < depth}`. The basis starts with
/// `H` itself, so the corner is unchanged and corner moments agree with
/// those of `B` up to `n = depth`.
pub fn minimal_reduce(b: &ComplexMatrix, d: usize, depth: usize, tol: &Tolerance) -> Result<MinimalReduction> {
    ensure_square(b)?;
    let k = krylov_orthonormalize(b, d, depth.max(1), tol);
    let operator = k.basis.adjoint() * b * &k.basis;
    let dims: Vec<usize> = k.level_dims.iter().copied().filter(|&x| x > 0).collect();
    let hessenberg_defect = block_offdiag_defect(&operator, &dims, |i, j| i <= j + 1)?;
    let tridiagonal_defect = if hermitian_defect(b) <= tol.tau(b) {
        Some(block_offdiag_defect(&operator, &dims, |i, j| i.abs_diff(j) <= 1)?)
    } else {
        None
    };
    Ok(MinimalReduction { operator, level_dims: k.level_dims, hessenberg_defect, tridiagonal_defect })
}

/// `max_{n <= n_max} ||(B1^n)_00 - (B2^n)_00||`, also over adjoint powers
/// when `two_sided`.
pub fn equivalence_by_moments(
    b1: &ComplexMatrix,
    b2: &ComplexMatrix,
    d: usize,
    n_max: usize,
    two_sided: bool,
) -> Result<f64> {
    let gap = |x: &ComplexMatrix, y: &ComplexMatrix| -> Result<f64> {
        let cx = corner_moments(x, d, n_max)?;
        let cy = corner_moments(y, d, n_max)?;
        Ok(cx.iter().zip(&cy).map(|(a, b)| op_norm(&(a - b))).fold(0.0, f64::max))
    };
    let mut worst = gap(b1, b2)?;
    if two_sided {
        worst = worst.max(gap(&b1.adjoint(), &b2.adjoint())?);
    }
    Ok(worst)
}
