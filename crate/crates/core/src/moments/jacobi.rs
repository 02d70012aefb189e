use serde::{Deserialize, Serialize};

use super::MomentSequence;
use crate::opcore::{c64, ComplexMatrix, Tolerance};
use crate::{DilationError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiParameters {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// The moment functional has rank `a.len()`: the measure has that many
    /// atoms and the recurrence stops.
    pub rank_terminated: bool,
}

/// Stieltjes process on `<x^i, x^j> = m_{i+j}`: monic orthogonal
/// polynomials `p_{k+1} = (x - a_k) p_k - b_{k-1}^2 p_{k-1}` with
/// `a_k = <x p_k, p_k> / <p_k, p_k>` and `b_{k-1}^2 = <p_k, p_k> / <p_{k-1}, p_{k-1}>`.
///
/// Needs `m_0..m_{2 levels - 1}`. A pivot `<p_k, p_k>` within the tolerance
/// (scaled by the cancellation in its evaluation) ends the recursion as rank
/// termination; a clearly negative pivot is an indefinite Hankel matrix.
pub fn jacobi_parameters(seq: &MomentSequence, levels: usize, tol: &Tolerance) -> Result<JacobiParameters> {
    if seq.dim() != 1 {
        return Err(DilationError::NotScalar { dim: seq.dim() });
    }
    seq.require_hermitian("jacobi_parameters")?;
    if levels == 0 {
        return Ok(JacobiParameters { a: vec![], b: vec![], rank_terminated: false });
    }
    let big_n = seq.order();
    if 2 * levels - 1 > big_n {
        return Err(DilationError::InsufficientData { needed: 2 * levels, available: big_n + 1 });
    }
    let m: Vec<f64> = seq.terms().iter().map(|t| t[(0, 0)].re).collect();
    // <p, x^s q> and the absolute sum of its terms
    let form = |p: &[f64], q: &[f64], s: usize| -> (f64, f64) {
        let mut v = 0.0;
        let mut scale = 0.0;
        for (i, pi) in p.iter().enumerate() {
            for (j, qj) in q.iter().enumerate() {
                let t = pi * qj * m[i + j + s];
                v += t;
                scale += t.abs();
            }
        }
        (v, scale)
    };
    let pivot_state = |value: f64, scale: f64, k: usize| -> Result<bool> {
        let tau = tol.at_scale(scale);
        if value < -10.0 * tau {
            Err(DilationError::IndefiniteHankel { order: k, pivot: value })
        } else {
            Ok(value.abs() <= tau)
        }
    };

    let mut a = Vec::with_capacity(levels);
    let mut b = Vec::with_capacity(levels.saturating_sub(1));
    let mut prev: Vec<f64> = vec![];
    let mut prev_norm = 0.0;
    let mut cur: Vec<f64> = vec![1.0];
    let mut cur_norm = m[0];
    let mut rank_terminated = false;
    for k in 0..levels {
        if k > 0 {
            let (nk, scale) = form(&cur, &cur, 0);
            if pivot_state(nk, scale, k)? {
                rank_terminated = true;
                break;
            }
            cur_norm = nk;
            b.push((cur_norm / prev_norm).sqrt());
        }
        let (xk, _) = form(&cur, &cur, 1);
        let ak = xk / cur_norm;
        a.push(ak);
        // p_{k+1} = x p_k - a_k p_k - b_{k-1}^2 p_{k-1}
        let mut next = vec![0.0; cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= ak * c;
        }
        if k > 0 {
            let b2 = cur_norm / prev_norm;
            for (i, c) in prev.iter().enumerate() {
                next[i] -= b2 * c;
            }
        }
        prev = std::mem::replace(&mut cur, next);
        prev_norm = cur_norm;
    }
    if !rank_terminated && a.len() == levels && 2 * levels <= big_n {
        let (nl, scale) = form(&cur, &cur, 0);
        rank_terminated = pivot_state(nl, scale, levels)?;
    }
    Ok(JacobiParameters { a, b, rank_terminated })
}

/// Symmetric tridiagonal matrix with diagonal `a` and off-diagonal `b`.
pub fn jacobi_matrix(a: &[f64], b: &[f64]) -> Result<ComplexMatrix> {
    if a.is_empty() || b.len() + 1 != a.len() {
        return Err(DilationError::ShapeMismatch(format!(
            "need len(b) = len(a) - 1, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if let Some(x) = b.iter().find(|&&x| !(x >= 0.0)) {
        return Err(DilationError::InvalidArgument(format!("off-diagonal entry {x} is negative")));
    }
    let n = a.len();
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        let v = if i == j {
            a[i]
        } else if i == j + 1 {
            b[j]
        } else if j == i + 1 {
            b[i]
        } else {
            0.0
        };
        c64::new(v, 0.0)
    }))
}
