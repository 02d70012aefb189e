use super::eig::orth_above;
use super::{c64, ensure_square, op_norm, ComplexMatrix, Tolerance};

/// Orthonormal basis of the block Krylov space `span{B^m H : m < depth}`,
/// ordered by level.
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovBasis {
    pub basis: ComplexMatrix,
    /// `level_dims[k] = dim(H_k)`, the part of `B^k H` new at level `k`.
    pub level_dims: Vec<usize>,
}

impl KrylovBasis {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Columns belonging to level `k`.
    pub fn level(&self, k: usize) -> ComplexMatrix {
        let start: usize = self.level_dims[..k].iter().sum();
        self.basis.columns(start, self.level_dims[k]).into_owned()
    }
}

/// Block Gram-Schmidt over `H, BH, B^2 H, ...` with `H` the first `d`
/// coordinates. Each level is `B` applied to the previous level, projected
/// twice against everything found so far; directions whose singular value
/// falls below the tolerance at the scale of `B Q_{k-1}` are discarded.
pub fn krylov_orthonormalize(b: &ComplexMatrix, d: usize, depth: usize, tol: &Tolerance) -> KrylovBasis {
    let n = ensure_square(b).expect("krylov_orthonormalize needs a square matrix");
    assert!(d <= n, "base dimension exceeds ambient dimension");
    let mut basis = ComplexMatrix::zeros(n, 0);
    let mut level_dims = Vec::with_capacity(depth);
    if depth == 0 {
        return KrylovBasis { basis, level_dims };
    }
    let mut last = ComplexMatrix::from_fn(n, d, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) });
    basis = last.clone();
    level_dims.push(d);
    for _ in 1..depth {
        if last.ncols() == 0 {
            level_dims.push(0);
            continue;
        }
        let mut next = b * &last;
        let scale = op_norm(&next);
        for _ in 0..2 {
            let coeffs = basis.adjoint() * &next;
            next -= &basis * coeffs;
        }
        let q = orth_above(&next, tol.at_scale(scale));
        level_dims.push(q.ncols());
        let mut grown = ComplexMatrix::zeros(n, basis.ncols() + q.ncols());
        grown.columns_mut(0, basis.ncols()).copy_from(&basis);
        grown.columns_mut(basis.ncols(), q.ncols()).copy_from(&q);
        basis = grown;
        last = q;
    }
    KrylovBasis { basis, level_dims }
}
