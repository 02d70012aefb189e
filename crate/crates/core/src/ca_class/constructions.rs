use serde::{Deserialize, Serialize};

use super::{ca_moments, CaInstance};
use crate::dilations::{adjoint_residuals, verify_dilation_with, Certificate, DilationKind, DilationResult, Edges};
use crate::moments::Verdict;
use crate::opcore::{
    identity, krylov_orthonormalize, op_norm, orth, singular_values, zeros, BlockMatrix, ComplexMatrix, Tolerance,
};
use crate::{DilationError, Result};

fn block_range(slot: usize, d: usize) -> Vec<usize> {
    (slot * d..(slot + 1) * d).collect()
}

fn check(name: &str, m: &ComplexMatrix, bound: f64) -> Certificate {
    Certificate::new(name, op_norm(m), bound)
}

/// `R = [[BDC, BDD_*], [(A-I)CBC, (A-I)CBD_*]]` on `H + H`, a partial
/// isometry whose corner powers are `T_n` for `n <= n_max`.
pub fn partial_isometry_r(inst: &CaInstance, n_max: usize) -> Result<DilationResult> {
    let d = inst.dim();
    let (b, c, dd, ds) = (inst.b(), inst.c(), inst.d(), inst.d_star());
    let am1 = inst.a_minus_i();
    let mut grid = BlockMatrix::square(vec![d; 2]);
    grid.set(0, 0, b * dd * c)?;
    grid.set(0, 1, b * dd * ds)?;
    grid.set(1, 0, &am1 * c * b * c)?;
    grid.set(1, 1, &am1 * c * b * ds)?;
    let r = grid.assemble()?;

    let seq = ca_moments(inst, n_max.max(1))?.seq;
    let mut result = verify_dilation_with(&r, &seq, n_max, DilationKind::Partial, &Edges::none())?;

    let rr = r.adjoint() * &r;
    let mut expected = BlockMatrix::square(vec![d; 2]);
    expected.set(0, 0, c.adjoint() * c)?;
    expected.set(0, 1, c.adjoint() * ds)?;
    expected.set(1, 0, ds * c)?;
    expected.set(1, 1, ds * ds)?;
    let expected = expected.assemble()?;
    let mut defect = BlockMatrix::square(vec![d; 2]);
    defect.set(0, 0, dd * dd)?;
    defect.set(0, 1, -(c.adjoint() * ds))?;
    defect.set(1, 0, -(ds * c))?;
    defect.set(1, 1, c * c.adjoint())?;
    let defect = defect.assemble()?;
    let bound = inst.tol().verify(op_norm(&r).powi(3).max(1.0));
    result.certificates = vec![
        check("(R*R)^2 = R*R", &(&rr * &rr - &rr), bound),
        check("R R*R = R", &(&r * &rr - &r), bound),
        check("R*R = [[C*C, C*D_*], [D_*C, D_*^2]]", &(&rr - expected), bound),
        check("I - R*R = [[D^2, -C*D_*], [-D_*C, CC*]]", &(identity(2 * d) - &rr - defect), bound),
    ];
    result.level_dims = vec![d, d];
    Ok(result)
}

/// Finite section of the explicit isometric dilation on
/// `h, y, z, f_1, ..., f_levels`. Columns `h` and `y` carry the blocks of
/// `R` plus `(D, -C*)` into `z`; `z` and each `f_k` shift forward. The last
/// column is the exit edge.
pub fn ca_isometric_v(inst: &CaInstance, levels: usize) -> Result<DilationResult> {
    if levels == 0 {
        return Err(DilationError::InvalidArgument("ca_isometric_V needs levels >= 1".into()));
    }
    let d = inst.dim();
    let (b, c, dd, ds) = (inst.b(), inst.c(), inst.d(), inst.d_star());
    let am1 = inst.a_minus_i();
    let slots = 3 + levels;
    let mut grid = BlockMatrix::square(vec![d; slots]);
    grid.set(0, 0, b * dd * c)?;
    grid.set(1, 0, &am1 * c * b * c)?;
    grid.set(2, 0, dd.clone())?;
    grid.set(0, 1, b * dd * ds)?;
    grid.set(1, 1, &am1 * c * b * ds)?;
    grid.set(2, 1, -c.adjoint())?;
    for k in 2..slots - 1 {
        grid.set(k + 1, k, identity(d))?;
    }
    let v = grid.assemble()?;
    let top = levels + 1;
    let seq = ca_moments(inst, top)?.seq;
    let edges = Edges { exit_cols: block_range(slots - 1, d), enter_rows: Vec::new() };
    let mut result = verify_dilation_with(&v, &seq, top, DilationKind::Isometric, &edges)?;
    result.level_dims = grid.row_dims.clone();
    Ok(result)
}

/// The core block `M` in block order `(w, h, y, z)`, with the identities
/// `M*M = diag(I, I, I, 0)` and `MM* = diag(0, I, I, I)` certified.
pub fn ca_core_matrix(inst: &CaInstance) -> Result<(ComplexMatrix, Vec<Certificate>)> {
    let d = inst.dim();
    let (b, c, dd, ds, bs) = (inst.b(), inst.c(), inst.d(), inst.d_star(), inst.b_star());
    let am1 = inst.a_minus_i();
    let mut grid = BlockMatrix::square(vec![d; 4]);
    grid.set(1, 0, -(&am1 * b * c.adjoint()))?;
    grid.set(1, 1, b * dd * c)?;
    grid.set(1, 2, b * dd * ds)?;
    grid.set(2, 0, bs * ds)?;
    grid.set(2, 1, &am1 * c * b * c)?;
    grid.set(2, 2, &am1 * c * b * ds)?;
    grid.set(3, 1, dd.clone())?;
    grid.set(3, 2, -c.adjoint())?;
    let m = grid.assemble()?;

    let proj = |skip: usize| {
        let mut p = identity(4 * d);
        for i in block_range(skip, d) {
            p[(i, i)] = 0.0.into();
        }
        p
    };
    let bound = inst.tol().verify(op_norm(&m).powi(2).max(1.0));
    let certs = vec![
        check("M*M = diag(I, I, I, 0)", &(m.adjoint() * &m - proj(3)), bound),
        check("MM* = diag(0, I, I, I)", &(&m * m.adjoint() - proj(0)), bound),
    ];
    if let Some(bad) = certs.iter().find(|c| !c.passed) {
        return Err(DilationError::CoreIdentityFailed { defect: bad.value });
    }
    Ok((m, certs))
}

/// Finite section of the explicit unitary dilation on
/// `h, w, y, z, b_1..b_back, f_1..f_fwd`: the core `M`, an incoming shift
/// `b_back -> ... -> b_1 -> w` and an outgoing shift `z -> f_1 -> ... -> f_fwd`.
/// Forward corners are certified to `fwd`, backward ones to `back`.
pub fn ca_unitary_u(inst: &CaInstance, back: usize, fwd: usize) -> Result<DilationResult> {
    let d = inst.dim();
    let (m, certs) = ca_core_matrix(inst)?;
    // core order (w, h, y, z) -> slots (1, 0, 2, 3)
    let slot_of = [1usize, 0, 2, 3];
    let slots = 4 + back + fwd;
    let b_slot = |k: usize| 3 + k;
    let f_slot = |k: usize| 3 + back + k;
    let mut grid = BlockMatrix::square(vec![d; slots]);
    for (i, &si) in slot_of.iter().enumerate() {
        for (j, &sj) in slot_of.iter().enumerate() {
            let blk = m.view((i * d, j * d), (d, d)).into_owned();
            if blk.iter().any(|x| *x != 0.0.into()) {
                grid.set(si, sj, blk)?;
            }
        }
    }
    if back >= 1 {
        grid.set(1, b_slot(1), identity(d))?;
    }
    for k in 1..back {
        grid.set(b_slot(k), b_slot(k + 1), identity(d))?;
    }
    if fwd >= 1 {
        grid.set(f_slot(1), 3, identity(d))?;
    }
    for k in 1..fwd {
        grid.set(f_slot(k + 1), f_slot(k), identity(d))?;
    }
    let u = grid.assemble()?;
    let enter = if back == 0 { 1 } else { b_slot(back) };
    let exit = if fwd == 0 { 3 } else { f_slot(fwd) };
    let edges = Edges { exit_cols: block_range(exit, d), enter_rows: block_range(enter, d) };
    let seq = ca_moments(inst, back.max(fwd).max(1))?.seq;
    let mut result = verify_dilation_with(&u, &seq, fwd, DilationKind::Unitary, &edges)?;
    result.adjoint_residuals = adjoint_residuals(&u, &seq, back)?;
    result.certificates = certs;
    result.level_dims = grid.row_dims.clone();
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalSubspaceReport {
    /// Gap for `H_1, ..., H_{n_max}`; 1 where the dimensions differ.
    pub gaps: Vec<f64>,
    pub max_gap: f64,
    /// Dimension of `ker((I - A) B D C)`.
    pub kernel_dim: usize,
    pub formula_dims: Vec<usize>,
    pub krylov_dims: Vec<usize>,
    /// BORDERLINE when a singular value of `(I - A) B D C` sits within ten
    /// times the rank tolerance.
    pub rank_decision: Verdict,
}

/// Compares the closed-form wandering subspaces `H_n` of the isometric
/// dilation with the Krylov levels `V^n H` minus the earlier ones, by the
/// projector gap `||P_1 - P_2||_2`.
///
/// `H_1 = {(0, (A-I)CBC h, D h, 0, ...)}`; for `n >= 2`, `H_n` has
/// `(I-A)BCP h` at coordinate `n` and `D h` at coordinate `n + 1`
/// (coordinate 0 is `h`), with `P` the projection onto `ker((I-A)BDC)`.
pub fn minimal_subspace_check(inst: &CaInstance, n_max: usize, tol: &Tolerance) -> Result<MinimalSubspaceReport> {
    if n_max == 0 {
        return Err(DilationError::InvalidArgument("minimal_subspace_check needs n_max >= 1".into()));
    }
    let d = inst.dim();
    let v = ca_isometric_v(inst, n_max + 1)?.operator;
    let total = v.nrows();
    let krylov = krylov_orthonormalize(&v, d, n_max + 1, tol);

    let id = identity(d);
    let (b, c, dd) = (inst.b(), inst.c(), inst.d());
    let k_op = (&id - inst.a()) * b * dd * c;
    let svals = singular_values(&k_op);
    let tau = tol.tau(&k_op);
    let borderline = svals.iter().any(|&s| s > tau && s <= 10.0 * tau);
    let range_adj = orth(&k_op.adjoint(), tol);
    let p = &id - &range_adj * range_adj.adjoint();
    let kernel_dim = d - range_adj.ncols();

    let mut gaps = Vec::with_capacity(n_max);
    let mut formula_dims = Vec::with_capacity(n_max);
    let mut krylov_dims = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut span = zeros(total, d);
        let (first, slot) = if n == 1 {
            (inst.a_minus_i() * c * b * c, 1)
        } else {
            ((&id - inst.a()) * b * c * &p, n)
        };
        span.view_mut((slot * d, 0), (d, d)).copy_from(&first);
        span.view_mut(((slot + 1) * d, 0), (d, d)).copy_from(dd);
        let q = orth(&span, tol);
        let k = if n < krylov.level_dims.len() { krylov.level(n) } else { zeros(total, 0) };
        formula_dims.push(q.ncols());
        krylov_dims.push(k.ncols());
        let gap = if q.ncols() != k.ncols() {
            1.0
        } else {
            op_norm(&(&q * q.adjoint() - &k * k.adjoint()))
        };
        gaps.push(gap);
    }
    let max_gap = gaps.iter().fold(0.0f64, |a, &b| a.max(b));
    Ok(MinimalSubspaceReport {
        gaps,
        max_gap,
        kernel_dim,
        formula_dims,
        krylov_dims,
        rank_decision: if borderline { Verdict::Borderline } else { Verdict::Yes },
    })
}
