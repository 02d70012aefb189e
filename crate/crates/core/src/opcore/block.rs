use super::{ensure_square, identity, ComplexMatrix};
use crate::{DilationError, Result};

/// Grid of blocks with explicit row and column dimensions. Missing blocks
/// are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    pub row_dims: Vec<usize>,
    pub col_dims: Vec<usize>,
    pub blocks: Vec<Vec<Option<ComplexMatrix>>>,
}

impl BlockMatrix {
    pub fn new(row_dims: Vec<usize>, col_dims: Vec<usize>) -> Self {
        let blocks = vec![vec![None; col_dims.len()]; row_dims.len()];
        BlockMatrix { row_dims, col_dims, blocks }
    }

    /// Square grid with the same dimensions on rows and columns.
    pub fn square(dims: Vec<usize>) -> Self {
        BlockMatrix::new(dims.clone(), dims)
    }

    pub fn set(&mut self, i: usize, j: usize, block: ComplexMatrix) -> Result<()> {
        let (r, c) = (self.row_dims.get(i).copied(), self.col_dims.get(j).copied());
        match (r, c) {
            (Some(r), Some(c)) if block.shape() == (r, c) => {
                self.blocks[i][j] = Some(block);
                Ok(())
            }
            (Some(r), Some(c)) => Err(DilationError::ShapeMismatch(format!(
                "block ({i},{j}) is {}x{}, expected {r}x{c}",
                block.nrows(),
                block.ncols()
            ))),
            _ => Err(DilationError::ShapeMismatch(format!("block index ({i},{j}) out of grid"))),
        }
    }

    /// Offset of each block row (and one past the end).
    pub fn row_offsets(&self) -> Vec<usize> {
        offsets(&self.row_dims)
    }

    pub fn col_offsets(&self) -> Vec<usize> {
        offsets(&self.col_dims)
    }

    pub fn assemble(&self) -> Result<ComplexMatrix> {
        block_assemble(self)
    }
}

pub(crate) fn offsets(dims: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(dims.len() + 1);
    let mut acc = 0;
    out.push(0);
    for d in dims {
        acc += d;
        out.push(acc);
    }
    out
}

pub fn block_assemble(b: &BlockMatrix) -> Result<ComplexMatrix> {
    if b.blocks.len() != b.row_dims.len() || b.blocks.iter().any(|row| row.len() != b.col_dims.len()) {
        return Err(DilationError::ShapeMismatch("block grid does not match dimension lists".into()));
    }
    let ro = b.row_offsets();
    let co = b.col_offsets();
    let mut out = ComplexMatrix::zeros(ro[ro.len() - 1], co[co.len() - 1]);
    for (i, row) in b.blocks.iter().enumerate() {
        for (j, block) in row.iter().enumerate() {
            let Some(m) = block else { continue };
            if m.shape() != (b.row_dims[i], b.col_dims[j]) {
                return Err(DilationError::ShapeMismatch(format!(
                    "block ({i},{j}) is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    b.row_dims[i],
                    b.col_dims[j]
                )));
            }
            out.view_mut((ro[i], co[j]), m.shape()).copy_from(m);
        }
    }
    Ok(out)
}

fn check_corner(b: &ComplexMatrix, d: usize) -> Result<()> {
    ensure_square(b)?;
    if d > b.nrows() {
        return Err(DilationError::ShapeMismatch(format!(
            "base dimension {d} exceeds ambient dimension {}",
            b.nrows()
        )));
    }
    Ok(())
}

/// Leading `d x d` block of `B^n`, i.e. `P_H B^n |_H` with `H` the first `d`
/// coordinates.
pub fn corner_compress(b: &ComplexMatrix, d: usize, n: usize) -> Result<ComplexMatrix> {
    Ok(corner_moments(b, d, n)?.pop().expect("n + 1 >= 1 moments"))
}

/// Corner moments `(B^n)_00` for `n = 0..=n_max`, sharing the power chain.
pub fn corner_moments(b: &ComplexMatrix, d: usize, n_max: usize) -> Result<Vec<ComplexMatrix>> {
    check_corner(b, d)?;
    let k = b.nrows();
    let mut cols = ComplexMatrix::zeros(k, d);
    cols.view_mut((0, 0), (d, d)).copy_from(&identity(d));
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(identity(d));
    for _ in 0..n_max {
        cols = b * cols;
        out.push(cols.rows(0, d).into_owned());
    }
    Ok(out)
}

/// Largest norm of a block `(i, j)` of `B` (partitioned by `dims`) for which
/// `allowed(i, j)` is false. Zero when the pattern is respected exactly.
pub fn block_offdiag_defect(
    b: &ComplexMatrix,
    dims: &[usize],
    allowed: impl Fn(usize, usize) -> bool,
) -> Result<f64> {
    let off = offsets(dims);
    let total = off[off.len() - 1];
    if b.shape() != (total, total) {
        return Err(DilationError::ShapeMismatch(format!(
            "matrix is {}x{}, block dimensions sum to {total}",
            b.nrows(),
            b.ncols()
        )));
    }
    let mut worst = 0.0f64;
    for i in 0..dims.len() {
        for j in 0..dims.len() {
            if allowed(i, j) || dims[i] == 0 || dims[j] == 0 {
                continue;
            }
            let blk = b.view((off[i], off[j]), (dims[i], dims[j])).into_owned();
            worst = worst.max(super::op_norm(&blk));
        }
    }
    Ok(worst)
}
