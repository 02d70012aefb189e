use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::{c64, ensure_square, hermitian_defect, hermitian_part, ComplexMatrix, Tolerance};
use crate::{DilationError, Result};

/// Eigenvalues (ascending) and a unitary matrix of eigenvectors of a
/// Hermitian matrix. Fails if `||M - M*||_2` exceeds `tau(M)`.
pub fn hermitian_eig(m: &ComplexMatrix, tol: &Tolerance) -> Result<(Vec<f64>, ComplexMatrix)> {
    ensure_square(m)?;
    let defect = hermitian_defect(m);
    let tau = tol.tau(m);
    if defect > tau {
        return Err(DilationError::NotHermitian { defect, tol: tau });
    }
    Ok(eig_sorted(hermitian_part(m)))
}

fn eig_sorted(h: ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), h);
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PsdVerdict {
    Psd,
    NotPsd,
    Borderline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdReport {
    pub verdict: PsdVerdict,
    pub min_eigenvalue: f64,
    pub hermiticity_defect: f64,
    /// The tolerance `tau(M)` the verdict was decided against.
    pub tau: f64,
    /// Unit eigenvector for `min_eigenvalue`.
    pub witness: Option<Vec<c64>>,
}

impl PsdReport {
    pub fn is_psd(&self) -> bool {
        self.verdict == PsdVerdict::Psd
    }
}

/// PSD verdict with a one-decade borderline band:
/// PSD iff `lambda_min >= -tau`, NOT_PSD iff `lambda_min < -10 tau`.
pub fn psd_check(m: &ComplexMatrix, tol: &Tolerance) -> Result<PsdReport> {
    let defect = hermitian_defect(m);
    let (values, vectors) = hermitian_eig(m, tol)?;
    let tau = tol.tau(m);
    if values.is_empty() {
        return Ok(PsdReport {
            verdict: PsdVerdict::Psd,
            min_eigenvalue: 0.0,
            hermiticity_defect: 0.0,
            tau,
            witness: None,
        });
    }
    let min_eigenvalue = values[0];
    let verdict = if min_eigenvalue >= -tau {
        PsdVerdict::Psd
    } else if min_eigenvalue < -10.0 * tau {
        PsdVerdict::NotPsd
    } else {
        PsdVerdict::Borderline
    };
    Ok(PsdReport {
        verdict,
        min_eigenvalue,
        hermiticity_defect: defect,
        tau,
        witness: Some(vectors.column(0).iter().copied().collect()),
    })
}

fn spectral_fn(values: &[f64], vectors: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let n = values.len();
    let mut scaled = vectors.clone();
    for j in 0..n {
        let s = c64::new(f(values[j]), 0.0);
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    &scaled * vectors.adjoint()
}

/// Principal square root of a PSD matrix; eigenvalues in `[-tau, 0)` (and
/// the borderline band) are clamped to zero.
pub fn sqrt_psd(m: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    let report = psd_check(m, tol)?;
    if report.verdict == PsdVerdict::NotPsd {
        return Err(DilationError::NotPsd { min_eigenvalue: report.min_eigenvalue });
    }
    let (values, vectors) = eig_sorted(hermitian_part(m));
    Ok(spectral_fn(&values, &vectors, |x| x.max(0.0).sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PinvResult {
    pub pinv: ComplexMatrix,
    pub rank: usize,
    pub is_invertible: bool,
}

/// Moore-Penrose pseudo-inverse of a PSD matrix: eigenvalues above
/// `tau(M)` are inverted, the rest zeroed.
pub fn pinv_psd(m: &ComplexMatrix, rank_tol: &Tolerance) -> Result<PinvResult> {
    let report = psd_check(m, rank_tol)?;
    if report.verdict == PsdVerdict::NotPsd {
        return Err(DilationError::NotPsd { min_eigenvalue: report.min_eigenvalue });
    }
    let tau = report.tau;
    let (values, vectors) = eig_sorted(hermitian_part(m));
    let rank = values.iter().filter(|&&x| x > tau).count();
    let pinv = spectral_fn(&values, &vectors, |x| if x > tau { 1.0 / x } else { 0.0 });
    Ok(PinvResult { pinv, rank, is_invertible: rank == values.len() })
}

/// `M^{-1/2}` for a positive definite matrix.
pub fn inv_sqrt_pd(m: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    let report = psd_check(m, tol)?;
    if report.min_eigenvalue <= report.tau {
        return Err(DilationError::NotInvertible { min_eigenvalue: report.min_eigenvalue });
    }
    let (values, vectors) = eig_sorted(hermitian_part(m));
    Ok(spectral_fn(&values, &vectors, |x| 1.0 / x.sqrt()))
}

/// Factor `M = W* W` for PSD `M`, keeping only eigenvalues above
/// `threshold`. Full rank yields the principal root (square, Hermitian);
/// rank `r < n` yields an `r x n` factor with orthogonal rows.
pub fn psd_factor(m: &ComplexMatrix, threshold: f64) -> ComplexMatrix {
    let n = m.nrows();
    let (values, vectors) = eig_sorted(hermitian_part(m));
    let kept: Vec<usize> = (0..n).filter(|&i| values[i] > threshold).collect();
    if kept.len() == n {
        return spectral_fn(&values, &vectors, |x| x.sqrt());
    }
    let r = kept.len();
    ComplexMatrix::from_fn(r, n, |i, j| vectors[(j, kept[i])].conj() * values[kept[i]].sqrt())
}

/// Right pseudo-inverse `P* (P P*)^+`; an exact right inverse when `P` has
/// full row rank.
pub fn right_pinv(p: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    let gram = p * p.adjoint();
    let inv = pinv_psd(&gram, tol)?;
    Ok(p.adjoint() * inv.pinv)
}

/// Orthonormal basis (as columns) of the column space of `M`; singular
/// values at or below `tau(M)` are treated as zero.
pub fn orth(m: &ComplexMatrix, tol: &Tolerance) -> ComplexMatrix {
    orth_above(m, tol.tau(m))
}

/// Left singular vectors of `M` whose singular value exceeds `threshold`.
///
/// Read off the Hermitian dilation `[[0, M], [M*, 0]]`, whose eigenpairs are
/// `(+-sigma, (u, +-v) / sqrt 2)`. This keeps small singular values at full
/// precision and avoids the complex SVD.
pub(crate) fn orth_above(m: &ComplexMatrix, threshold: f64) -> ComplexMatrix {
    let (n, k) = m.shape();
    if n == 0 || k == 0 {
        return ComplexMatrix::zeros(n, 0);
    }
    let (vals, vecs) = eig_sorted(dilation(m));
    let kept: Vec<usize> = (0..vals.len()).rev().take_while(|&i| vals[i] > threshold).collect();
    let mut q = ComplexMatrix::from_fn(n, kept.len(), |i, j| vecs[(i, kept[j])]);
    for mut col in q.column_iter_mut() {
        let norm = col.norm();
        col /= c64::new(norm, 0.0);
    }
    q
}

/// Singular values of `M` in descending order, from the Hermitian dilation.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let r = m.nrows().min(m.ncols());
    if r == 0 {
        return Vec::new();
    }
    let (vals, _) = eig_sorted(dilation(m));
    vals.iter().rev().take(r).map(|&v| v.max(0.0)).collect()
}

fn dilation(m: &ComplexMatrix) -> ComplexMatrix {
    let (n, k) = m.shape();
    let mut h = ComplexMatrix::zeros(n + k, n + k);
    h.view_mut((0, n), (n, k)).copy_from(m);
    h.view_mut((n, 0), (k, n)).copy_from(&m.adjoint());
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::{from_real, identity, op_norm, real_diag, scalar};
    use crate::random;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn orth_of_near_rank_one_projection() {
        // a case where the complex SVD loses orthogonality
        let w = ComplexMatrix::from_column_slice(2, 1, &[c64::new(-0.309527, 0.0), c64::new(0.950891, 0.0)]);
        let w = &w / c64::new(w.norm(), 0.0);
        let p = identity(2) - &w * w.adjoint();
        let q = orth(&p, &Tolerance::new(0.5, 0.0));
        assert_eq!(q.ncols(), 1);
        assert!((w.adjoint() * &q).norm() < 1e-15);
        assert!((op_norm(&p) - 1.0).abs() < 1e-15);
        let s = singular_values(&p);
        assert!((s[0] - 1.0).abs() < 1e-15 && s[1] < 1e-15);
    }

    #[test]
    fn identity_eigenvalues() {
        let (vals, v) = hermitian_eig(&identity(2), &tol()).unwrap();
        assert_eq!(vals.len(), 2);
        assert!(vals.iter().all(|x| (x - 1.0).abs() < 1e-14));
        assert!(op_norm(&(v.adjoint() * &v - identity(2))) < 1e-14);
    }

    #[test]
    fn pauli_x_eigenvalues() {
        let x = from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let (vals, _) = hermitian_eig(&x, &tol()).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_hermitian_round_trip() {
        let mut rng = random::rng(7);
        let h = random::hermitian(&mut rng, 5);
        let (vals, v) = hermitian_eig(&h, &tol()).unwrap();
        let rebuilt = &v * real_diag(&vals) * v.adjoint();
        assert!(op_norm(&(rebuilt - &h)) < 1e-10);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eig_rejects_non_hermitian_and_non_square() {
        let t = from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(hermitian_eig(&t, &tol()), Err(DilationError::NotHermitian { .. })));
        let r = ComplexMatrix::zeros(2, 3);
        assert!(matches!(hermitian_eig(&r, &tol()), Err(DilationError::NotSquare { .. })));
    }

    #[test]
    fn psd_identity() {
        let r = psd_check(&identity(3), &tol()).unwrap();
        assert_eq!(r.verdict, PsdVerdict::Psd);
        assert!((r.min_eigenvalue - 1.0).abs() < 1e-14);
    }

    #[test]
    fn psd_indefinite_with_witness() {
        let m = from_real(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let r = psd_check(&m, &tol()).unwrap();
        assert_eq!(r.verdict, PsdVerdict::NotPsd);
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-14);
        let w = r.witness.unwrap();
        // proportional to (1, -1)/sqrt(2)
        let ratio = w[1] / w[0];
        assert!((ratio + c64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((w[0].norm() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn psd_borderline_band() {
        let t = tol();
        let m = real_diag(&[1.0, -5e-10]);
        // tau = 1e-10 + 1e-12; -5e-10 lies in [-10 tau, -tau)
        assert_eq!(psd_check(&m, &t).unwrap().verdict, PsdVerdict::Borderline);
        let m = real_diag(&[1.0, -5e-11]);
        assert_eq!(psd_check(&m, &t).unwrap().verdict, PsdVerdict::Psd);
        let m = real_diag(&[1.0, -5e-9]);
        assert_eq!(psd_check(&m, &t).unwrap().verdict, PsdVerdict::NotPsd);
    }

    #[test]
    fn sqrt_examples() {
        assert!(op_norm(&(sqrt_psd(&identity(2), &tol()).unwrap() - identity(2))) < 1e-14);
        assert!(op_norm(&(sqrt_psd(&scalar(4.0), &tol()).unwrap() - scalar(2.0))) < 1e-14);
        let s = sqrt_psd(&real_diag(&[2.0, 0.0]), &tol()).unwrap();
        assert!(op_norm(&(s - real_diag(&[2f64.sqrt(), 0.0]))) < 1e-14);
        let bad = from_real(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(sqrt_psd(&bad, &tol()), Err(DilationError::NotPsd { .. })));
    }

    #[test]
    fn pinv_examples() {
        let p = pinv_psd(&identity(3), &tol()).unwrap();
        assert_eq!((p.rank, p.is_invertible), (3, true));
        let p = pinv_psd(&real_diag(&[2.0, 0.0]), &tol()).unwrap();
        assert_eq!((p.rank, p.is_invertible), (1, false));
        assert!(op_norm(&(p.pinv - real_diag(&[0.5, 0.0]))) < 1e-14);
    }

    #[test]
    fn pinv_full_rank_residual() {
        let mut rng = random::rng(11);
        let x = random::ginibre(&mut rng, 4, 4);
        let m = x.adjoint() * &x + identity(4) * c64::new(0.1, 0.0);
        let p = pinv_psd(&m, &tol()).unwrap();
        assert!(p.is_invertible);
        assert!(op_norm(&(&p.pinv * &m - identity(4))) < 1e-8);
    }

    #[test]
    fn hilbert_matrix_min_eigenvalue() {
        let h = ComplexMatrix::from_fn(4, 4, |i, j| c64::new(1.0 / (i + j + 1) as f64, 0.0));
        let r = psd_check(&h, &tol()).unwrap();
        assert_eq!(r.verdict, PsdVerdict::Psd);
        // independent value from a cyclic Jacobi sweep in f64 (test oracle below)
        let oracle = jacobi_min_eigenvalue(4, |i, j| 1.0 / (i + j + 1) as f64);
        assert!((r.min_eigenvalue - oracle).abs() < 1e-12);
        assert!((oracle - 9.67e-5).abs() < 1e-7);
    }

    #[test]
    fn psd_factor_reproduces_matrix() {
        let m = from_real(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let w = psd_factor(&m, 1e-10);
        assert_eq!(w.nrows(), 1);
        assert!(op_norm(&(w.adjoint() * &w - &m)) < 1e-14);
        let full = psd_factor(&real_diag(&[4.0, 9.0]), 1e-10);
        assert!(op_norm(&(full - real_diag(&[2.0, 3.0]))) < 1e-14);
    }

    #[test]
    fn orth_rank() {
        let m = from_real(3, 2, &[1.0, 2.0, 0.0, 0.0, 1.0, 2.0]);
        let q = orth(&m, &tol());
        assert_eq!(q.ncols(), 1);
        assert!(op_norm(&(q.adjoint() * &q - identity(1))) < 1e-14);
    }

    /// Real symmetric cyclic Jacobi eigenvalue iteration, independent of
    /// nalgebra.
    fn jacobi_min_eigenvalue(n: usize, f: impl Fn(usize, usize) -> f64) -> f64 {
        let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect();
        for _ in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += a[p][q] * a[p][q];
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
            if off < 1e-40 {
                break;
            }
        }
        (0..n).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
    }
}
