use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::json::pairs;
use crate::moments::{toeplitz_positivity_check, CriterionReport, MomentSequence, Verdict, VerdictCounts, Witness};
use crate::opcore::{
    c64, ensure_square, hermitian_defect, hermitian_part, identity, inv_sqrt_pd, numerical_radius, op_norm,
    psd_check, ComplexMatrix, PsdReport, PsdVerdict, Tolerance,
};
use crate::par::{self, Backend};
use crate::{random, DilationError, Result};

pub const DEFAULT_KERNEL_RADII: [f64; 4] = [0.3, 0.6, 0.9, 0.99];
pub const DEFAULT_KERNEL_ANGLES: usize = 64;

/// `zeta_A(n) = A^{-1/2} T^n A^{-1/2}` for `n = 1..=n`, with `zeta_A(0) = I`.
pub fn zeta_sequence(a: &ComplexMatrix, t: &ComplexMatrix, n: usize, tol: &Tolerance) -> Result<MomentSequence> {
    let d = ensure_square(a)?;
    if t.shape() != (d, d) {
        return Err(DilationError::ShapeMismatch(format!("A is {d}x{d}, T is {}x{}", t.nrows(), t.ncols())));
    }
    let a_half = inv_sqrt_pd(&hermitian_part(a), tol)?;
    let mut terms = vec![identity(d)];
    let mut pow = identity(d);
    for _ in 0..n {
        pow = &pow * t;
        terms.push(&a_half * &pow * &a_half);
    }
    MomentSequence::new(terms, tol)
}

/// Toeplitz positivity of `zeta_A` up to order `n`, with the same two-tier
/// semantics as [`toeplitz_positivity_check`].
pub fn zeta_check(
    a: &ComplexMatrix,
    t: &ComplexMatrix,
    n: usize,
    trials: usize,
    rng_seed: u64,
    tol: &Tolerance,
) -> Result<CriterionReport> {
    let seq = zeta_sequence(a, t, n, tol)?;
    let mut report = toeplitz_positivity_check(&seq, trials, rng_seed, tol)?;
    report.criterion = "zeta".into();
    Ok(report)
}

/// `W(z) = (I - zT)^* (A - 2I) (I - zT) + (I - zT) + (I - zT)^*`.
pub fn kernel_operator(a: &ComplexMatrix, t: &ComplexMatrix, z: c64) -> ComplexMatrix {
    let d = a.nrows();
    let id = identity(d);
    let x = &id - t * z;
    let w = x.adjoint() * (a - &id * c64::new(2.0, 0.0)) * &x + &x + x.adjoint();
    hermitian_part(&w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelPoint {
    pub z: [f64; 2],
    pub verdict: Verdict,
    pub min_eigenvalue: f64,
    pub tau: f64,
}

fn polar_grid(radii: &[f64], angles: usize) -> Result<Vec<c64>> {
    if let Some(&r) = radii.iter().find(|&&r| !(0.0..1.0).contains(&r)) {
        return Err(DilationError::DiskViolation { modulus: r });
    }
    if angles == 0 {
        return Err(DilationError::InvalidArgument("angles must be positive".into()));
    }
    Ok(radii
        .iter()
        .flat_map(|&r| (0..angles).map(move |j| c64::from_polar(r, 2.0 * PI * j as f64 / angles as f64)))
        .collect())
}

fn check_pair(a: &ComplexMatrix, t: &ComplexMatrix, tol: &Tolerance) -> Result<()> {
    let d = ensure_square(a)?;
    if t.shape() != (d, d) {
        return Err(DilationError::ShapeMismatch(format!("A is {d}x{d}, T is {}x{}", t.nrows(), t.ncols())));
    }
    let defect = hermitian_defect(a);
    if defect > tol.tau(a) {
        return Err(DilationError::NotHermitian { defect, tol: tol.tau(a) });
    }
    Ok(())
}

fn evaluate(
    a: &ComplexMatrix,
    t: &ComplexMatrix,
    grid: &[c64],
    tol: &Tolerance,
    backend: Backend,
) -> Result<Vec<(c64, PsdReport)>> {
    par::map(backend, grid, |&z| psd_check(&kernel_operator(a, t, z), tol).map(|r| (z, r)))
        .into_iter()
        .collect()
}

/// Per-point verdicts of `W(z) >= 0` on the polar grid `radii x angles`.
pub fn kernel_grid(
    a: &ComplexMatrix,
    t: &ComplexMatrix,
    radii: &[f64],
    angles: usize,
    tol: &Tolerance,
) -> Result<Vec<KernelPoint>> {
    check_pair(a, t, tol)?;
    let grid = polar_grid(radii, angles)?;
    Ok(evaluate(a, t, &grid, tol, Backend::default())?
        .into_iter()
        .map(|(z, r)| KernelPoint {
            z: [z.re, z.im],
            verdict: Verdict::from_psd(r.verdict),
            min_eigenvalue: r.min_eigenvalue,
            tau: r.tau,
        })
        .collect())
}

/// Positivity of `W(z)` at the grid points. The verdict only speaks for the
/// points checked.
pub fn kernel_check(
    a: &ComplexMatrix,
    t: &ComplexMatrix,
    radii: &[f64],
    angles: usize,
    tol: &Tolerance,
) -> Result<CriterionReport> {
    kernel_check_with(a, t, radii, angles, tol, Backend::default())
}

/// [`kernel_check`] on an explicit backend.
pub fn kernel_check_with(
    a: &ComplexMatrix,
    t: &ComplexMatrix,
    radii: &[f64],
    angles: usize,
    tol: &Tolerance,
    backend: Backend,
) -> Result<CriterionReport> {
    check_pair(a, t, tol)?;
    let grid = polar_grid(radii, angles)?;
    let results = evaluate(a, t, &grid, tol, backend)?;
    let mut verdict = Verdict::Yes;
    let mut counts = VerdictCounts::default();
    let mut worst_margin = f64::INFINITY;
    let mut witness: Option<(f64, Witness)> = None;
    for (z, rep) in &results {
        let v = Verdict::from_psd(rep.verdict);
        counts.add(v);
        verdict = verdict.combine(v);
        worst_margin = worst_margin.min(rep.min_eigenvalue + rep.tau);
        if rep.verdict == PsdVerdict::NotPsd && witness.as_ref().is_none_or(|(w, _)| rep.min_eigenvalue < *w) {
            let vector = pairs(rep.witness.as_deref().unwrap_or_default());
            let wit = Witness::GridPoint { z: [z.re, z.im], vector, value: rep.min_eigenvalue };
            witness = Some((rep.min_eigenvalue, wit));
        }
    }
    Ok(CriterionReport {
        criterion: "kernel".into(),
        satisfied: verdict,
        max_order_checked: 0,
        worst_margin,
        witness: witness.map(|(_, w)| w),
        certificate: Some(format!("{} grid points", grid.len())),
        counts: Some(counts),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaMembershipReport {
    pub zeta_verdict: CriterionReport,
    pub kernel_verdict: CriterionReport,
    /// Never one YES and the other NO.
    pub consistent: bool,
}

/// Runs both membership criteria on `(A, T)`.
#[allow(clippy::too_many_arguments)]
pub fn ca_membership(
    a: &ComplexMatrix,
    t: &ComplexMatrix,
    n: usize,
    trials: usize,
    rng_seed: u64,
    radii: &[f64],
    angles: usize,
    tol: &Tolerance,
) -> Result<CaMembershipReport> {
    let zeta_verdict = zeta_check(a, t, n, trials, rng_seed, tol)?;
    let kernel_verdict = kernel_check(a, t, radii, angles, tol)?;
    let pair = (zeta_verdict.satisfied, kernel_verdict.satisfied);
    let consistent = !matches!(pair, (Verdict::Yes, Verdict::No) | (Verdict::No, Verdict::Yes));
    Ok(CaMembershipReport { zeta_verdict, kernel_verdict, consistent })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BergerStampfliReport {
    pub w: f64,
    pub in_c2: bool,
    pub criterion_agrees: bool,
    pub kernel: CriterionReport,
}

/// `w(T) <= 1` against the kernel criterion with `A = 2I` on the default grid.
pub fn berger_stampfli_check(t: &ComplexMatrix, grid: usize, tol: &Tolerance) -> Result<BergerStampfliReport> {
    let d = ensure_square(t)?;
    let w = numerical_radius(t, grid)?;
    let in_c2 = w <= 1.0 + tol.at_scale(op_norm(t));
    let two = identity(d) * c64::new(2.0, 0.0);
    let kernel = kernel_check(&two, t, &DEFAULT_KERNEL_RADII, DEFAULT_KERNEL_ANGLES, tol)?;
    let criterion_agrees = if in_c2 { kernel.satisfied != Verdict::No } else { kernel.satisfied == Verdict::No };
    Ok(BergerStampfliReport { w, in_c2, criterion_agrees, kernel })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IstratescuReport {
    /// No grid point is YES for `A1` and NO for `A2`.
    pub consistent: bool,
    /// Smallest eigenvalue of `W_{A2}(z) - W_{A1}(z)` over the sampled `z`.
    pub congruence_min: f64,
    pub congruence_ok: bool,
    pub samples: usize,
    pub flag: bool,
}

/// Monotonicity of the kernel criterion in `A`: with `A1 <= A2`, YES for
/// `A1` at a grid point forbids NO for `A2`, and `W_{A2}(z) - W_{A1}(z)` is
/// PSD at `samples` random points of the disk.
#[allow(clippy::too_many_arguments)]
pub fn istratescu_monotonicity_test(
    a1: &ComplexMatrix,
    a2: &ComplexMatrix,
    t: &ComplexMatrix,
    radii: &[f64],
    angles: usize,
    samples: usize,
    rng_seed: u64,
    tol: &Tolerance,
) -> Result<IstratescuReport> {
    check_pair(a1, t, tol)?;
    check_pair(a2, t, tol)?;
    let gap = psd_check(&hermitian_part(&(a2 - a1)), tol)?;
    if gap.verdict == PsdVerdict::NotPsd {
        return Err(DilationError::OrderViolation { min_eigenvalue: gap.min_eigenvalue });
    }
    let g1 = kernel_grid(a1, t, radii, angles, tol)?;
    let g2 = kernel_grid(a2, t, radii, angles, tol)?;
    let consistent = g1.iter().zip(&g2).all(|(p, q)| !(p.verdict == Verdict::Yes && q.verdict == Verdict::No));

    let mut rng = random::rng(rng_seed);
    let zs: Vec<c64> = (0..samples)
        .map(|_| c64::from_polar(rng.random::<f64>().sqrt(), 2.0 * PI * rng.random::<f64>()))
        .collect();
    let diffs = par::map(Backend::default(), &zs, |&z| {
        psd_check(&(kernel_operator(a2, t, z) - kernel_operator(a1, t, z)), tol)
    });
    let mut congruence_min = f64::INFINITY;
    let mut congruence_ok = true;
    for rep in diffs {
        let rep = rep?;
        congruence_min = congruence_min.min(rep.min_eigenvalue);
        congruence_ok &= rep.verdict != PsdVerdict::NotPsd;
    }
    Ok(IstratescuReport { consistent, congruence_min, congruence_ok, samples, flag: consistent && congruence_ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ca_class::{ca_build, CaInstance};
    use crate::opcore::{from_real, scalar};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn kernel(a: &ComplexMatrix, t: &ComplexMatrix) -> CriterionReport {
        kernel_check(a, t, &DEFAULT_KERNEL_RADII, DEFAULT_KERNEL_ANGLES, &tol()).unwrap()
    }

    fn scalar_instance() -> CaInstance {
        ca_build(&scalar(2.0), &scalar(0.5f64.sqrt()), &tol()).unwrap()
    }

    #[test]
    fn zeta_examples() {
        let i = scalar_instance();
        let r = zeta_check(i.a(), i.t(), 3, 16, 0, &tol()).unwrap();
        assert_eq!(r.satisfied, Verdict::Yes);
        assert_eq!(r.certificate.as_deref(), Some("block-Toeplitz"));
        let r = zeta_check(&scalar(1.0), &scalar(0.5), 3, 16, 0, &tol()).unwrap();
        assert_eq!(r.satisfied, Verdict::Yes);
        let r = zeta_check(&scalar(1.0), &scalar(1.5), 1, 16, 0, &tol()).unwrap();
        assert_eq!(r.satisfied, Verdict::No);
        let Some(Witness::Coefficients { c, value, .. }) = r.witness else { panic!() };
        // optimal c for [[1, 1.5], [1.5, 1]] is (1, -1)/sqrt(2) up to phase
        let ratio = c64::new(c[1][0], c[1][1]) / c64::new(c[0][0], c[0][1]);
        assert!((ratio + 1.0).norm() < 1e-8);
        assert!((value + 0.5).abs() < 1e-8);
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel(&scalar(2.0), &scalar(1.0)).satisfied, Verdict::Yes);
        assert_eq!(kernel(&scalar(1.0), &scalar(0.5)).satisfied, Verdict::Yes);
        let t3 = from_real(2, 2, &[0.0, 3.0, 0.0, 0.0]);
        let two = identity(2) * c64::new(2.0, 0.0);
        let r = kernel(&two, &t3);
        assert_eq!(r.satisfied, Verdict::No);
        let Some(Witness::GridPoint { z, value, .. }) = r.witness else { panic!() };
        let w = kernel_operator(&two, &t3, c64::new(z[0], z[1]));
        let lo = crate::opcore::hermitian_eig(&w, &tol()).unwrap().0[0];
        assert!((lo - value).abs() < 1e-12 && value < 0.0);
    }

    #[test]
    fn kernel_with_identity_matches_closed_form() {
        // A = I: W(z) = I - |z|^2 T*T
        let t = scalar(0.5);
        let z = c64::from_polar(0.7, 1.1);
        let w = kernel_operator(&scalar(1.0), &t, z)[(0, 0)].re;
        assert!((w - (1.0 - 0.49 * 0.25)).abs() < 1e-14);
    }

    #[test]
    fn kernel_grid_rejects_outside_disk() {
        let err = kernel_grid(&scalar(1.0), &scalar(0.5), &[0.5, 1.0], 4, &tol());
        assert!(matches!(err, Err(DilationError::DiskViolation { .. })));
    }

    #[test]
    fn membership_of_built_instance() {
        let mut rng = random::rng(11);
        let (a, c) = random::commuting_pair(&mut rng, 3, false);
        let i = ca_build(&a, &c, &tol()).unwrap();
        let m = ca_membership(i.a(), i.t(), 4, 16, 1, &DEFAULT_KERNEL_RADII, 16, &tol()).unwrap();
        assert_eq!(m.zeta_verdict.satisfied, Verdict::Yes);
        assert_eq!(m.kernel_verdict.satisfied, Verdict::Yes);
        assert!(m.consistent);
    }

    #[test]
    fn berger_stampfli_examples() {
        let r = berger_stampfli_check(&from_real(2, 2, &[0.0, 2.0, 0.0, 0.0]), 1024, &tol()).unwrap();
        assert!((r.w - 1.0).abs() < 1e-4 && r.in_c2 && r.criterion_agrees);
        let r = berger_stampfli_check(&identity(2), 1024, &tol()).unwrap();
        assert!((r.w - 1.0).abs() < 1e-12 && r.in_c2 && r.criterion_agrees);
        let r = berger_stampfli_check(&from_real(2, 2, &[0.0, 3.0, 0.0, 0.0]), 1024, &tol()).unwrap();
        assert!((r.w - 1.5).abs() < 1e-4 && !r.in_c2 && r.criterion_agrees);
        assert_eq!(r.kernel.satisfied, Verdict::No);
    }

    #[test]
    fn istratescu_examples() {
        let r = istratescu_monotonicity_test(
            &scalar(1.0),
            &scalar(2.0),
            &scalar(0.5),
            &DEFAULT_KERNEL_RADII,
            16,
            100,
            0,
            &tol(),
        )
        .unwrap();
        assert!(r.flag);
        let mut rng = random::rng(5);
        let t = random::contraction(&mut rng, 3, 0.3, 1.0);
        let three = identity(3) * c64::new(3.0, 0.0);
        let r = istratescu_monotonicity_test(&identity(3), &three, &t, &[0.5], 8, 100, 1, &tol()).unwrap();
        assert!(r.flag && r.congruence_min >= -1e-10);
        let r = istratescu_monotonicity_test(&three, &three, &t, &[0.5], 8, 10, 1, &tol()).unwrap();
        assert!(r.consistent);
        let err = istratescu_monotonicity_test(&scalar(2.0), &scalar(1.0), &scalar(0.5), &[0.5], 4, 4, 0, &tol());
        assert!(matches!(err, Err(DilationError::OrderViolation { .. })));
    }
}
