use super::{verify_dilation, Certificate, DilationKind, DilationResult};
use crate::moments::{hamburger_check, hankel, selfadjoint_contraction_check, MomentSequence, Verdict};
use crate::opcore::{
    block_offdiag_defect, corner_compress, hermitian_defect, hermitian_eig, hermitian_part, op_norm, psd_check,
    psd_factor, right_pinv, BlockMatrix, ComplexMatrix, PsdVerdict, Tolerance,
};
use crate::{DilationError, Result};

/// Blocks of a block tridiagonal self-adjoint operator. Level `k` has
/// dimension `diag[k].nrows()`; `sub[k]` is the block `B_{k+1,k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalBlocks {
    pub diag: Vec<ComplexMatrix>,
    pub sub: Vec<ComplexMatrix>,
}

impl TridiagonalBlocks {
    pub fn level_dims(&self) -> Vec<usize> {
        self.diag.iter().map(|b| b.nrows()).collect()
    }

    pub fn assemble(&self) -> Result<ComplexMatrix> {
        let mut grid = BlockMatrix::square(self.level_dims());
        for (k, b) in self.diag.iter().enumerate() {
            grid.set(k, k, b.clone())?;
        }
        for (k, s) in self.sub.iter().enumerate() {
            grid.set(k + 1, k, s.clone())?;
            grid.set(k, k + 1, s.adjoint())?;
        }
        grid.assemble()
    }
}

fn check_criterion(seq: &MomentSequence, tol: &Tolerance) -> Result<()> {
    let report = if seq.is_contractive() {
        selfadjoint_contraction_check(seq, tol)?
    } else {
        hamburger_check(seq, tol)?
    };
    if report.satisfied == Verdict::No {
        return Err(DilationError::CriterionFailed(format!("{} check reports NO", report.criterion)));
    }
    Ok(())
}

/// Finite GNS construction. With `G = H_L` (blocks `A_{m+n}`) factored as
/// `G = Q Lambda Q*` on its numerical range, the shift `lambda(m, g) ->
/// lambda(m + 1, g)` is represented by `Lambda^{-1/2} Q* H_L^(1) Q
/// Lambda^{-1/2}`, then rotated so that the classes of `lambda(0, e_i)` are
/// the first `d` coordinates.
///
/// `levels` is clamped to `(N - 1) / 2` so that `H_L^(1)` exists. Corner
/// moments are certified for `n <= 2L + 1`.
pub fn gns_selfadjoint(seq: &MomentSequence, levels: usize, tol: &Tolerance) -> Result<DilationResult> {
    seq.require_hermitian("gns_selfadjoint")?;
    let big_n = seq.order();
    if big_n < 1 {
        return Err(DilationError::InsufficientData { needed: 2, available: 1 });
    }
    check_criterion(seq, tol)?;
    let l = levels.min((big_n - 1) / 2);
    let d = seq.dim();
    let g = hankel(seq, l, 0)?;
    let g1 = hankel(seq, l, 1)?;
    let (vals, vecs) = hermitian_eig(&g, tol)?;
    let thr = tol.tau(&g);
    let kept: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > thr).collect();
    let r = kept.len();
    if r < d {
        return Err(DilationError::CriterionFailed(format!("Gram matrix rank {r} below base dimension {d}")));
    }
    let rows = g.nrows();
    // Lambda^{-1/2} Q*, restricted to the kept eigenpairs
    let inv_root = ComplexMatrix::from_fn(r, rows, |i, j| vecs[(j, kept[i])].conj() / vals[kept[i]].sqrt());
    let b = &inv_root * &g1 * inv_root.adjoint();
    // classes of lambda(0, e_j): Lambda^{1/2} Q* restricted to the first d columns
    let w0 = ComplexMatrix::from_fn(r, d, |i, j| vecs[(j, kept[i])].conj() * vals[kept[i]].sqrt());
    let comp = crate::opcore::orth(&(crate::opcore::identity(r) - &w0 * w0.adjoint()), &Tolerance::new(0.5, 0.0));
    if comp.ncols() != r - d {
        return Err(DilationError::RecursionBreakdown { level: 0, residual: op_norm(&(w0.adjoint() * &w0 - crate::opcore::identity(d))) });
    }
    let mut y = ComplexMatrix::zeros(r, r);
    y.columns_mut(0, d).copy_from(&w0);
    y.columns_mut(d, r - d).copy_from(&comp);
    let rotated = y.adjoint() * &b * &y;
    let asym = hermitian_defect(&rotated);
    let operator = hermitian_part(&rotated);
    let guaranteed = 2 * l + 1;
    let mut result = verify_dilation(&operator, seq, guaranteed, DilationKind::SelfAdjoint)?;
    result.certificates.push(Certificate::new(
        "hermiticity_before_symmetrization",
        asym,
        tol.verify(op_norm(&operator)),
    ));
    result.level_dims = vec![d, r - d];
    result.ensure_passes(seq, tol)
}

/// Block tridiagonal self-adjoint dilation built level by level.
///
/// `B_00 = A_1`. The block `B_{n+1,n}` is the only unknown entering
/// `(B^{2n+2})_00 = A_{2n+2}`, through the term `P* S* S P` with `P` the
/// product of the subdiagonal blocks so far; `S*S` is solved with a right
/// pseudo-inverse of `P` and factored by a PSD root whose row count is the
/// numerical rank. `B_{n+1,n+1}` is then the only unknown in
/// `(B^{2n+3})_00 = A_{2n+3}` (zero when that term is not available). Each
/// solve is checked against the equation it solves.
///
/// A zero-rank subdiagonal block ends the recursion: the data has finite
/// rank and the dilation is checked against every available term.
pub fn tridiagonal_recursive(
    seq: &MomentSequence,
    levels: usize,
    tol: &Tolerance,
) -> Result<(TridiagonalBlocks, DilationResult)> {
    seq.require_hermitian("tridiagonal_recursive")?;
    let big_n = seq.order();
    if 2 * levels > big_n || big_n < 1 {
        return Err(DilationError::InsufficientData { needed: (2 * levels).max(1) + 1, available: big_n + 1 });
    }
    if big_n >= 2 {
        let a1 = seq.term(1);
        let gap = seq.term(2) - a1 * a1;
        let rep = psd_check(&hermitian_part(&gap), &tol.widened(op_norm(seq.term(2)) + op_norm(a1).powi(2)))?;
        if rep.verdict == PsdVerdict::NotPsd {
            return Err(DilationError::CriterionFailed(format!(
                "A_2 - A_1^2 has eigenvalue {:.3e}",
                rep.min_eigenvalue
            )));
        }
    }
    let d = seq.dim();
    let mut blocks = TridiagonalBlocks { diag: vec![hermitian_part(seq.term(1))], sub: Vec::new() };
    let mut p = crate::opcore::identity(d);
    let mut rank_terminated = false;

    for n in 0..levels {
        let level = n + 1;
        // subdiagonal block from A_{2n+2}
        let current = blocks.assemble()?;
        let known = corner_compress(&current, d, 2 * n + 2)?;
        let target = seq.term(2 * n + 2);
        let rhs = hermitian_part(&(target - &known));
        let scale = op_norm(target) + op_norm(&known);
        let pp = right_pinv(&p, tol)?;
        let x = hermitian_part(&(pp.adjoint() * &rhs * &pp));
        let x_tol = tol.widened(scale * op_norm(&pp).powi(2).max(1.0));
        let rep = psd_check(&x, &x_tol)?;
        if rep.verdict == PsdVerdict::NotPsd {
            return Err(DilationError::CriterionFailed(format!(
                "level {level}: S*S would need eigenvalue {:.3e}",
                rep.min_eigenvalue
            )));
        }
        let s = psd_factor(&x, x_tol.tau(&x));
        let fit = op_norm(&(p.adjoint() * s.adjoint() * &s * &p - &rhs));
        if fit > tol.verify(scale) {
            return Err(DilationError::RecursionBreakdown { level, residual: fit });
        }
        if s.nrows() == 0 {
            rank_terminated = true;
            break;
        }
        let r = s.nrows();
        p = &s * &p;
        blocks.sub.push(s);
        blocks.diag.push(ComplexMatrix::zeros(r, r));

        // diagonal block from A_{2n+3}
        if 2 * n + 3 <= big_n {
            let current = blocks.assemble()?;
            let known = corner_compress(&current, d, 2 * n + 3)?;
            let target = seq.term(2 * n + 3);
            let rhs = hermitian_part(&(target - &known));
            let scale = op_norm(target) + op_norm(&known);
            let qp = right_pinv(&p, tol)?;
            let dblk = hermitian_part(&(qp.adjoint() * &rhs * &qp));
            let fit = op_norm(&(p.adjoint() * &dblk * &p - &rhs));
            if fit > tol.verify(scale) {
                return Err(DilationError::RecursionBreakdown { level, residual: fit });
            }
            *blocks.diag.last_mut().expect("pushed above") = dblk;
        }
    }

    let operator = blocks.assemble()?;
    let computed = blocks.sub.len();
    let guaranteed = if rank_terminated { big_n } else { (2 * computed + 1).min(big_n) };
    let mut result = verify_dilation(&operator, seq, guaranteed, DilationKind::SelfAdjoint)?;
    let dims = blocks.level_dims();
    let pattern = block_offdiag_defect(&operator, &dims, |i, j| i.abs_diff(j) <= 1)?;
    result.certificates.push(Certificate::new("tridiagonal_zero_pattern", pattern, tol.tau(&operator)));
    result.level_dims = dims;
    result.rank_terminated = rank_terminated;
    let result = result.ensure_passes(seq, tol)?;
    Ok((blocks, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilations::equivalence_by_moments;
    use crate::opcore::{from_real, identity, scalar};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn coin() -> MomentSequence {
        MomentSequence::from_scalars(&[1.0, 0.0, 1.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn gns_rank_one() {
        let c: f64 = -0.6;
        let m: Vec<f64> = (0..5).map(|n| c.powi(n)).collect();
        let r = gns_selfadjoint(&MomentSequence::from_scalars(&m).unwrap(), 2, &tol()).unwrap();
        assert_eq!(r.ambient_dim, 1);
        assert!((r.operator[(0, 0)].re - c).abs() < 1e-12);
        assert!(r.max_residual() < 1e-12);
    }

    #[test]
    fn gns_coin_clamps_levels() {
        let r = gns_selfadjoint(&coin(), 2, &tol()).unwrap();
        assert_eq!(r.ambient_dim, 2);
        assert_eq!(r.guaranteed_orders, 3);
        // unitarily equivalent to the swap: eigenvalues -1, 1
        let (vals, _) = hermitian_eig(&r.operator, &tol()).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
        assert!(r.max_residual() < 1e-12);
    }

    #[test]
    fn gns_operator_sequence() {
        let z = ComplexMatrix::zeros(2, 2);
        let seq = MomentSequence::new(vec![identity(2), z.clone(), identity(2), z, identity(2)], &tol()).unwrap();
        let r = gns_selfadjoint(&seq, 1, &tol()).unwrap();
        assert_eq!(r.ambient_dim, 4);
        assert!(r.structure_defect < 1e-10);
        assert!(r.max_residual() < 1e-12);
    }

    #[test]
    fn gns_rejects_failing_criterion() {
        let seq = MomentSequence::from_scalars(&[1.0, 0.0, -1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(gns_selfadjoint(&seq, 1, &tol()), Err(DilationError::CriterionFailed(_))));
    }

    #[test]
    fn tridiagonal_coin() {
        let (blocks, r) = tridiagonal_recursive(&coin(), 1, &tol()).unwrap();
        assert_eq!(blocks.diag, vec![scalar(0.0), scalar(0.0)]);
        assert_eq!(blocks.sub, vec![scalar(1.0)]);
        assert_eq!(r.operator, from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(r.guaranteed_orders, 3);
    }

    #[test]
    fn tridiagonal_point_mass_terminates() {
        let c: f64 = 0.4;
        let m: Vec<f64> = (0..5).map(|n| c.powi(n)).collect();
        let (blocks, r) = tridiagonal_recursive(&MomentSequence::from_scalars(&m).unwrap(), 2, &tol()).unwrap();
        assert!(r.rank_terminated);
        assert!(blocks.sub.is_empty());
        assert_eq!(r.operator, scalar(c));
        assert_eq!(r.guaranteed_orders, 4);
    }

    #[test]
    fn tridiagonal_reproduces_example_matrix() {
        // A_n = 2^{(n-2)/2} T^n for even n >= 2, 0 for odd n, T = 1, A_0 = I
        let seq = MomentSequence::from_scalars(&[1.0, 0.0, 1.0, 0.0, 2.0]).unwrap();
        let (_, r) = tridiagonal_recursive(&seq, 2, &tol()).unwrap();
        let v = from_real(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert!(equivalence_by_moments(&r.operator, &v, 1, 4, false).unwrap() < 1e-10);
        assert!(crate::opcore::op_norm(&(r.operator - v)) < 1e-12);
    }

    #[test]
    fn tridiagonal_matches_gns_on_coin() {
        let (_, t) = tridiagonal_recursive(&coin(), 2, &tol()).unwrap();
        let g = gns_selfadjoint(&coin(), 1, &tol()).unwrap();
        assert!(equivalence_by_moments(&t.operator, &g.operator, 1, 4, false).unwrap() < 1e-8);
    }

    #[test]
    fn tridiagonal_requires_enough_terms() {
        assert!(matches!(tridiagonal_recursive(&coin(), 3, &tol()), Err(DilationError::InsufficientData { .. })));
    }
}
