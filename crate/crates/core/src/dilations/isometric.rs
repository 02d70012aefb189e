use super::{adjoint_residuals, verify_dilation_with, DilationKind, DilationResult, Edges};
use crate::moments::{toeplitz_positivity_check, MomentSequence, Verdict};
use crate::opcore::{
    corner_compress, ensure_square, hermitian_part, identity, op_norm, pinv_psd, psd_check, psd_factor,
    right_pinv, sqrt_psd, BlockMatrix, ComplexMatrix, PsdVerdict, Tolerance,
};
use crate::{DilationError, Result};

/// Sampling budget of the Toeplitz precondition inside the isometric recursion.
const PRECONDITION_TRIALS: usize = 64;

/// Upper Hessenberg block columns: `cols[n][k] = V_{kn}` for `k <= n + 1`.
struct Hessenberg {
    dims: Vec<usize>,
    cols: Vec<Vec<ComplexMatrix>>,
}

impl Hessenberg {
    fn assemble(&self) -> Result<ComplexMatrix> {
        let mut grid = BlockMatrix::square(self.dims.clone());
        for (n, col) in self.cols.iter().enumerate() {
            for (k, blk) in col.iter().enumerate() {
                grid.set(k, n, blk.clone())?;
            }
        }
        grid.assemble()
    }
}

fn level_indices(dims: &[usize], level: usize) -> Vec<usize> {
    let start: usize = dims[..level].iter().sum();
    (start..start + dims[level]).collect()
}

/// Isometric dilation in upper Hessenberg block form, one block column per
/// step.
///
/// Column 0 is `(A_1, (I - A_1* A_1)^{1/2}, 0, ...)`. For column `n`:
/// `V_{0n}` is the only unknown in `(V^{n+1})_00 = A_{n+1}`, entering as
/// `V_{0n} P_n` with `P_n = V_{n,n-1} ... V_{10}`; `V_{kn}` for `1 <= k <= n`
/// makes column `n` orthogonal to column `k - 1`; `V_{n+1,n}` is the PSD root
/// of `I - sum_i V_{in}* V_{in}` with as many rows as its rank. The last block
/// column is left zero (the truncation edge). Orders up to `levels + 1` are
/// certified.
///
/// A zero-rank root closes the recursion: the matrix built so far is
/// unitary and must reproduce every available term, otherwise the data admits
/// no consistent completion and `RecursionBreakdown` is returned.
pub fn isometric_recursive(seq: &MomentSequence, levels: usize, tol: &Tolerance) -> Result<DilationResult> {
    if !seq.is_contractive() {
        let norm = seq.terms().iter().map(op_norm).fold(0.0, f64::max);
        return Err(DilationError::NotContraction { norm });
    }
    let big_n = seq.order();
    if levels + 1 > big_n {
        return Err(DilationError::InsufficientData { needed: levels + 2, available: big_n + 1 });
    }
    let pre = toeplitz_positivity_check(seq, PRECONDITION_TRIALS, 0, tol)?;
    if pre.satisfied == Verdict::No {
        return Err(DilationError::CriterionFailed("toeplitz check reports NO".into()));
    }
    let d = seq.dim();
    let a1 = seq.term(1).clone();
    let defect = identity(d) - a1.adjoint() * &a1;
    let v10 = root_block(&defect, 1.0, tol, 1)?;
    let mut h = Hessenberg { dims: vec![d, v10.nrows()], cols: vec![vec![a1, v10.clone()]] };
    let mut p = v10;
    let mut terminated_at = (h.dims[1] == 0).then_some(1);

    for n in 1..=levels {
        if terminated_at.is_some() {
            break;
        }
        let rn = h.dims[n];
        // V_{0n} from A_{n+1}, with column n still zero
        h.cols.push((0..=n).map(|k| ComplexMatrix::zeros(h.dims[k], rn)).collect());
        let current = h.assemble()?;
        let known = corner_compress(&current, d, n + 1)?;
        let target = seq.term(n + 1);
        let rhs = target - &known;
        let scale = op_norm(target) + op_norm(&known);
        let v0n = &rhs * right_pinv(&p, tol)?;
        let fit = op_norm(&(&v0n * &p - &rhs));
        if fit > tol.verify(scale) {
            return Err(DilationError::RecursionBreakdown { level: n, residual: fit });
        }
        let mut col = vec![v0n];
        // orthogonality to column k - 1 fixes V_{kn}
        for k in 1..=n {
            let prev = &h.cols[k - 1];
            let mut y = ComplexMatrix::zeros(h.dims[k - 1], rn);
            let mut scale = 0.0;
            for (i, vin) in col.iter().enumerate() {
                y -= prev[i].adjoint() * vin;
                scale += op_norm(&prev[i]) * op_norm(vin);
            }
            let s = &prev[k];
            let gram = pinv_psd(&(s * s.adjoint()), tol)?;
            let vkn = gram.pinv * s * &y;
            let fit = op_norm(&(s.adjoint() * &vkn - &y));
            if fit > tol.verify(scale) {
                return Err(DilationError::RecursionBreakdown { level: n, residual: fit });
            }
            col.push(vkn);
        }
        let mut rest = identity(rn);
        let mut scale = 1.0;
        for vin in &col {
            rest -= vin.adjoint() * vin;
            scale += op_norm(vin).powi(2);
        }
        let sub = root_block(&rest, scale, tol, n + 1)?;
        let r_next = sub.nrows();
        p = &sub * &p;
        col.push(sub);
        h.dims.push(r_next);
        h.cols[n] = col;
        if r_next == 0 {
            terminated_at = Some(n + 1);
        }
    }

    let (operator, guaranteed, edges) = match terminated_at {
        Some(level) => {
            // drop the empty level; the square part is unitary
            h.dims.truncate(level);
            h.cols.truncate(level);
            for col in h.cols.iter_mut() {
                col.truncate(level);
            }
            (h.assemble()?, big_n, Edges::none())
        }
        None => {
            let last = h.dims.len() - 1;
            let edges = Edges { exit_cols: level_indices(&h.dims, last), enter_rows: Vec::new() };
            (h.assemble()?, levels + 1, edges)
        }
    };
    let mut result = verify_dilation_with(&operator, seq, guaranteed, DilationKind::Isometric, &edges)?;
    result.level_dims = h.dims.clone();
    result.rank_terminated = terminated_at.is_some();
    match result.ensure_passes(seq, tol) {
        Ok(r) => Ok(r),
        Err(DilationError::VerificationFailed { order, residual }) if terminated_at.is_some() => {
            Err(DilationError::RecursionBreakdown { level: order, residual })
        }
        Err(e) => Err(e),
    }
}

/// PSD root of a defect `I - sum V*V` that must be PSD; rows = numerical rank.
fn root_block(defect: &ComplexMatrix, scale: f64, tol: &Tolerance, level: usize) -> Result<ComplexMatrix> {
    let defect = hermitian_part(defect);
    let t = tol.widened(scale);
    let rep = psd_check(&defect, &t)?;
    if rep.verdict == PsdVerdict::NotPsd {
        return Err(DilationError::RecursionBreakdown { level, residual: -rep.min_eigenvalue });
    }
    Ok(psd_factor(&defect, t.tau(&defect)))
}

fn check_contraction(t: &ComplexMatrix, tol: &Tolerance) -> Result<usize> {
    let d = ensure_square(t)?;
    let norm = op_norm(t);
    if norm > 1.0 + tol.at_scale(1.0) {
        return Err(DilationError::NotContraction { norm });
    }
    Ok(d)
}

fn defect_root(t: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    let d = t.nrows();
    sqrt_psd(&hermitian_part(&(identity(d) - t.adjoint() * t)), tol)
}

/// Schäffer isometric dilation on `H + D^copies`: first block column
/// `(T, D_T, 0, ...)`, identity shift below the diagonal, last block column
/// zero (the truncation edge). Corner moments equal `T^n` for every `n`;
/// `copies` of them are reported.
pub fn schaffer_isometry(t: &ComplexMatrix, copies: usize, tol: &Tolerance) -> Result<DilationResult> {
    let d = check_contraction(t, tol)?;
    if copies == 0 {
        return Err(DilationError::InvalidArgument("schaffer_isometry needs copies >= 1".into()));
    }
    let mut grid = BlockMatrix::square(vec![d; copies + 1]);
    grid.set(0, 0, t.clone())?;
    grid.set(1, 0, defect_root(t, tol)?)?;
    for k in 1..copies {
        grid.set(k + 1, k, identity(d))?;
    }
    let operator = grid.assemble()?;
    let seq = MomentSequence::from_powers(t, copies)?;
    let edges = Edges { exit_cols: (copies * d..(copies + 1) * d).collect(), enter_rows: Vec::new() };
    let mut result = verify_dilation_with(&operator, &seq, copies, DilationKind::Isometric, &edges)?;
    result.level_dims = grid.row_dims.clone();
    Ok(result)
}

/// Bilateral Schäffer unitary. Block order `[h, x_{-1}, ..., x_{-back},
/// x_1, ..., x_fwd]`; the Julia block `[[T, D_{T*}], [D_T, -T*]]` maps
/// `(h, x_{-1})` to `(h, x_1)`, and identity shifts move `x_{-k-1} -> x_{-k}`
/// and `x_k -> x_{k+1}`. Row `x_{-back}` and column `x_fwd` are the
/// truncation edges. Forward moments are certified to `fwd`, backward
/// (adjoint) moments to `back`.
pub fn schaffer_unitary(t: &ComplexMatrix, back: usize, fwd: usize, tol: &Tolerance) -> Result<DilationResult> {
    let d = check_contraction(t, tol)?;
    if back == 0 || fwd == 0 {
        return Err(DilationError::InvalidArgument("schaffer_unitary needs back >= 1 and fwd >= 1".into()));
    }
    let d_t = defect_root(t, tol)?;
    let d_tstar = defect_root(&t.adjoint(), tol)?;
    let levels = 1 + back + fwd;
    let x_back = |k: usize| k;
    let x_fwd = |k: usize| back + k;
    let mut grid = BlockMatrix::square(vec![d; levels]);
    grid.set(0, 0, t.clone())?;
    grid.set(0, x_back(1), d_tstar)?;
    grid.set(x_fwd(1), 0, d_t)?;
    grid.set(x_fwd(1), x_back(1), -t.adjoint())?;
    for k in 1..back {
        grid.set(x_back(k), x_back(k + 1), identity(d))?;
    }
    for k in 1..fwd {
        grid.set(x_fwd(k + 1), x_fwd(k), identity(d))?;
    }
    let operator = grid.assemble()?;
    let seq = MomentSequence::from_powers(t, back.max(fwd))?;
    let offsets = grid.row_offsets();
    let edges = Edges {
        exit_cols: (offsets[x_fwd(fwd)]..offsets[x_fwd(fwd)] + d).collect(),
        enter_rows: (offsets[x_back(back)]..offsets[x_back(back)] + d).collect(),
    };
    let mut result = verify_dilation_with(&operator, &seq, fwd, DilationKind::Unitary, &edges)?;
    result.adjoint_residuals = adjoint_residuals(&operator, &seq, back)?;
    result.level_dims = grid.row_dims.clone();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilations::equivalence_by_moments;
    use crate::opcore::{from_real, scalar};
    use crate::random;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn recursion_reproduces_schaffer_for_geometric_moments() {
        let m: Vec<f64> = (0..6).map(|n| 0.5f64.powi(n)).collect();
        let seq = MomentSequence::from_scalars(&m).unwrap();
        let r = isometric_recursive(&seq, 4, &tol()).unwrap();
        let v = &r.operator;
        assert!((v[(0, 0)].re - 0.5).abs() < 1e-14);
        assert!((v[(1, 0)].re - 0.75f64.sqrt()).abs() < 1e-14);
        for n in 1..5 {
            assert!(v[(0, n)].norm() < 1e-12, "V_0{n}");
        }
        let s = schaffer_isometry(&scalar(0.5), 5, &tol()).unwrap();
        assert!(equivalence_by_moments(v, &s.operator, 1, 5, false).unwrap() < 1e-12);
        assert_eq!(r.guaranteed_orders, 5);
        assert!(r.structure_defect < 1e-12);
    }

    #[test]
    fn zero_tail_gives_block_shift() {
        let seq = MomentSequence::from_powers(&ComplexMatrix::zeros(2, 2), 4).unwrap();
        let r = isometric_recursive(&seq, 3, &tol()).unwrap();
        assert!(r.residuals.iter().all(|&x| x < 1e-14));
        assert_eq!(r.level_dims, vec![2, 2, 2, 2, 2]);
    }

    #[test]
    fn unitary_scalar_short_circuits_or_breaks_down() {
        let ones = MomentSequence::from_scalars(&[1.0; 5]).unwrap();
        let r = isometric_recursive(&ones, 2, &tol()).unwrap();
        assert!(r.rank_terminated);
        assert_eq!(r.operator, scalar(1.0));
        let bad = MomentSequence::from_scalars(&[1.0, 1.0, 0.5, 0.2]).unwrap();
        assert!(matches!(isometric_recursive(&bad, 2, &tol()), Err(DilationError::RecursionBreakdown { .. })
            | Err(DilationError::CriterionFailed(_))));
    }

    #[test]
    fn recursion_matches_schaffer_on_random_contraction() {
        let mut rng = random::rng(17);
        let t = random::contraction(&mut rng, 2, 0.3, 0.95);
        let seq = MomentSequence::from_powers(&t, 6).unwrap();
        let r = isometric_recursive(&seq, 5, &tol()).unwrap();
        let s = schaffer_isometry(&t, 6, &tol()).unwrap();
        assert!(equivalence_by_moments(&r.operator, &s.operator, 2, 6, false).unwrap() < 1e-8);
        assert!(r.structure_defect < 1e-10);
    }

    #[test]
    fn schaffer_isometry_cases() {
        let r = schaffer_isometry(&scalar(0.0), 3, &tol()).unwrap();
        let shift = from_real(4, 4, &[0., 0., 0., 0., 1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1., 0.]);
        assert_eq!(r.operator, shift);
        let r = schaffer_isometry(&scalar(1.0), 3, &tol()).unwrap();
        assert!(r.residuals.iter().all(|&x| x == 0.0));
        let mut rng = random::rng(4);
        let t = random::contraction(&mut rng, 2, 0.5, 0.99);
        let r = schaffer_isometry(&t, 6, &tol()).unwrap();
        assert!(r.max_residual() < 1e-12);
        assert!(r.structure_defect < 1e-12);
        assert!(r.edge_defect.unwrap() > 0.5);
        assert!(matches!(schaffer_isometry(&scalar(1.5), 2, &tol()), Err(DilationError::NotContraction { .. })));
    }

    #[test]
    fn schaffer_unitary_cases() {
        let r = schaffer_unitary(&scalar(0.0), 1, 1, &tol()).unwrap();
        // h -> x_1, x_{-1} -> h
        assert_eq!(r.operator, from_real(3, 3, &[0., 1., 0., 0., 0., 0., 1., 0., 0.]));
        let r = schaffer_unitary(&scalar(1.0), 2, 2, &tol()).unwrap();
        assert!(r.residuals.iter().chain(&r.adjoint_residuals).all(|&x| x == 0.0));
        let mut rng = random::rng(8);
        let t = random::contraction(&mut rng, 2, 0.5, 0.99);
        let r = schaffer_unitary(&t, 6, 6, &tol()).unwrap();
        assert!(r.max_residual() < 1e-12);
        assert_eq!(r.adjoint_residuals.len(), 7);
        assert!(r.structure_defect < 1e-12);
    }
}
