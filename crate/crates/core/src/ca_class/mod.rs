//! The `C_A` class: operators `T` for which `A^{-1/2} T^n A^{-1/2}` admits a
//! unitary dilation, for a fixed positive invertible `A`.
//!
//! Instances are of the form `T = A B D C` with `C` a contraction commuting
//! with `A`, `B = (I + A(A - 2I) C*C)^{-1/2}` and `D = (I - C*C)^{1/2}`.
//! [`ca_build`] derives every auxiliary operator once and checks the
//! algebraic identities the explicit dilations rely on.

mod constructions;
mod criteria;

pub use constructions::{
    ca_core_matrix, ca_isometric_v, ca_unitary_u, minimal_subspace_check, partial_isometry_r,
    MinimalSubspaceReport,
};
pub use criteria::{
    berger_stampfli_check, ca_membership, istratescu_monotonicity_test, kernel_check, kernel_check_with, kernel_grid,
    kernel_operator, zeta_check, zeta_sequence, BergerStampfliReport, CaMembershipReport, IstratescuReport,
    KernelPoint, DEFAULT_KERNEL_ANGLES, DEFAULT_KERNEL_RADII,
};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dilations::Certificate;
use crate::json::matrix;
use crate::moments::MomentSequence;
use crate::opcore::{
    c64, hermitian_defect, hermitian_part, identity, inv_sqrt_pd, matrix_power, op_norm, psd_check, sqrt_psd,
    ComplexMatrix, Tolerance,
};
use crate::{DilationError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CaInstance {
    a: ComplexMatrix,
    c: ComplexMatrix,
    b: ComplexMatrix,
    d: ComplexMatrix,
    d_star: ComplexMatrix,
    b_star: ComplexMatrix,
    t: ComplexMatrix,
    tol: Tolerance,
    identities: Vec<Certificate>,
}

impl CaInstance {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }
    pub fn c(&self) -> &ComplexMatrix {
        &self.c
    }
    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }
    pub fn d(&self) -> &ComplexMatrix {
        &self.d
    }
    pub fn d_star(&self) -> &ComplexMatrix {
        &self.d_star
    }
    pub fn b_star(&self) -> &ComplexMatrix {
        &self.b_star
    }
    pub fn t(&self) -> &ComplexMatrix {
        &self.t
    }
    pub fn tol(&self) -> &Tolerance {
        &self.tol
    }
    /// Algebraic identities checked at construction.
    pub fn identities(&self) -> &[Certificate] {
        &self.identities
    }

    /// `B D C`, the operator whose powers give the moments up to `A^{n-1}`.
    pub fn bdc(&self) -> ComplexMatrix {
        &self.b * &self.d * &self.c
    }

    fn a_minus_i(&self) -> ComplexMatrix {
        &self.a - identity(self.dim())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceRepr {
    #[serde(rename = "A", with = "matrix")]
    a: ComplexMatrix,
    #[serde(rename = "C", with = "matrix")]
    c: ComplexMatrix,
}

impl Serialize for CaInstance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        InstanceRepr { a: self.a.clone(), c: self.c.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CaInstance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = InstanceRepr::deserialize(d)?;
        ca_build(&repr.a, &repr.c, &Tolerance::default()).map_err(serde::de::Error::custom)
    }
}

fn real(x: f64) -> c64 {
    c64::new(x, 0.0)
}

/// Validates `(A, C)` and derives `B, D, D_*, B_*, T`.
///
/// Requires `A` Hermitian with `lambda_min(A) > tau`, `||C|| <= 1 + tau`,
/// `||AC - CA|| <= tau`, and `I + A(A - 2I)C*C` (and its `CC*` twin)
/// positive definite. The identities `AB = BA`, `AD = DA`, `BD = DB`,
/// `D_* C = C D` and `(BD)^2 = I - B^2 (A - I)^2 C*C` are checked to
/// `100 tau` and recorded.
pub fn ca_build(a: &ComplexMatrix, c: &ComplexMatrix, tol: &Tolerance) -> Result<CaInstance> {
    let n = crate::opcore::ensure_square(a)?;
    if c.shape() != (n, n) {
        return Err(DilationError::ShapeMismatch(format!("A is {n}x{n}, C is {}x{}", c.nrows(), c.ncols())));
    }
    let defect = hermitian_defect(a);
    if defect > tol.tau(a) {
        return Err(DilationError::NotHermitian { defect, tol: tol.tau(a) });
    }
    let a = hermitian_part(a);
    let rep = psd_check(&a, tol)?;
    if rep.min_eigenvalue <= rep.tau {
        return Err(DilationError::NotInvertible { min_eigenvalue: rep.min_eigenvalue });
    }
    let norm_c = op_norm(c);
    if norm_c > 1.0 + tol.at_scale(1.0) {
        return Err(DilationError::NotContraction { norm: norm_c });
    }
    let scale = op_norm(&a) * norm_c.max(1.0);
    let comm = op_norm(&(&a * c - c * &a));
    if comm > tol.at_scale(scale) {
        return Err(DilationError::NotCommuting { defect: comm });
    }
    let id = identity(n);
    let a2 = &a * (&a - &id * real(2.0));
    let x = hermitian_part(&(&id + &a2 * c.adjoint() * c));
    let b = inv_sqrt_pd(&x, tol)?;
    let x_star = hermitian_part(&(&id + &a2 * c * c.adjoint()));
    let b_star = inv_sqrt_pd(&x_star, tol)?;
    let d = sqrt_psd(&hermitian_part(&(&id - c.adjoint() * c)), tol)?;
    let d_star = sqrt_psd(&hermitian_part(&(&id - c * c.adjoint())), tol)?;
    let t = &a * &b * &d * c;

    let bound = tol.verify(scale * op_norm(&b).powi(2).max(1.0));
    let am1 = &a - &id;
    let bd = &b * &d;
    let rhs = &id - &b * &b * &am1 * &am1 * c.adjoint() * c;
    let identities = vec![
        Certificate::new("AB = BA", op_norm(&(&a * &b - &b * &a)), bound),
        Certificate::new("AD = DA", op_norm(&(&a * &d - &d * &a)), bound),
        Certificate::new("BD = DB", op_norm(&(&b * &d - &d * &b)), bound),
        Certificate::new("D_* C = C D", op_norm(&(&d_star * c - c * &d)), bound),
        Certificate::new("(BD)^2 = I - B^2 (A-I)^2 C*C", op_norm(&(&bd * &bd - rhs)), bound),
    ];
    if let Some(bad) = identities.iter().find(|c| !c.passed) {
        return Err(DilationError::NotCommuting { defect: bad.value });
    }
    Ok(CaInstance { a, c: c.clone(), b, d, d_star, b_star, t, tol: *tol, identities })
}

/// `A = rho I`: the Durszt form `T = rho (I + rho(rho - 2) C*C)^{-1/2} D C`,
/// with `T_n = T^n / rho` certified up to `n = 8` in the identities.
pub fn c_rho_build(rho: f64, c: &ComplexMatrix, tol: &Tolerance) -> Result<CaInstance> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(DilationError::InvalidArgument(format!("rho = {rho} must be positive")));
    }
    let n = crate::opcore::ensure_square(c)?;
    let mut inst = ca_build(&(identity(n) * real(rho)), c, tol)?;
    let moments = ca_moments(&inst, 8)?;
    let mut worst: f64 = 0.0;
    for k in 1..=8 {
        let direct = matrix_power(&inst.t, k) * real(1.0 / rho);
        worst = worst.max(op_norm(&(moments.seq.term(k) - direct)));
    }
    let bound = tol.verify(op_norm(&inst.t).max(1.0).powi(8));
    inst.identities.push(Certificate::new("T_n = T^n / rho", worst, bound));
    Ok(inst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaMoments {
    pub seq: MomentSequence,
    /// `max_n ||A^{-1/2} T^n A^{-1/2} - A^{n-1} (BDC)^n||`.
    pub cross_residual: f64,
}

/// `T_0 = I`, `T_n = A^{-1/2} T^n A^{-1/2}`, cross-checked against
/// `A^{n-1} (BDC)^n`.
pub fn ca_moments(inst: &CaInstance, n_max: usize) -> Result<CaMoments> {
    if n_max < 1 {
        return Err(DilationError::InvalidArgument("ca_moments needs n_max >= 1".into()));
    }
    let n = inst.dim();
    let a_inv_half = inv_sqrt_pd(&inst.a, &inst.tol)?;
    let bdc = inst.bdc();
    let mut terms = vec![identity(n)];
    let mut t_pow = identity(n);
    let mut bdc_pow = identity(n);
    let mut a_pow = identity(n);
    let mut cross: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for k in 1..=n_max {
        t_pow = &t_pow * &inst.t;
        bdc_pow = &bdc_pow * &bdc;
        if k >= 2 {
            a_pow = &a_pow * &inst.a;
        }
        let first = &a_inv_half * &t_pow * &a_inv_half;
        let second = &a_pow * &bdc_pow;
        cross = cross.max(op_norm(&(&first - &second)));
        scale = scale.max(op_norm(&a_inv_half).powi(2) * op_norm(&t_pow)).max(op_norm(&a_pow) * op_norm(&bdc_pow));
        terms.push(first);
    }
    if cross > inst.tol.verify(scale) {
        return Err(DilationError::CrossCheckFailed { defect: cross });
    }
    let seq = MomentSequence::new(terms, &inst.tol)?;
    Ok(CaMoments { seq, cross_residual: cross })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::scalar;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn scalar_instance() -> CaInstance {
        ca_build(&scalar(2.0), &scalar(0.5f64.sqrt()), &tol()).unwrap()
    }

    #[test]
    fn scalar_instance_values() {
        let i = scalar_instance();
        let h = 0.5f64.sqrt();
        for (m, want) in [(i.b(), 1.0), (i.d(), h), (i.d_star(), h), (i.b_star(), 1.0), (i.t(), 1.0)] {
            assert!((m[(0, 0)].re - want).abs() < 1e-14);
        }
        assert!(i.identities().iter().all(|c| c.passed));
    }

    #[test]
    fn identity_a_collapses_to_contraction() {
        let mut rng = crate::random::rng(3);
        let c = crate::random::contraction(&mut rng, 3, 0.2, 0.9);
        let i = ca_build(&identity(3), &c, &tol()).unwrap();
        assert!(op_norm(&(i.t() - &c)) < 1e-12);
        let m = ca_moments(&i, 4).unwrap();
        for k in 0..=4 {
            assert!(op_norm(&(m.seq.term(k) - matrix_power(&c, k))) < 1e-12);
        }
    }

    #[test]
    fn unitary_c_gives_zero_t() {
        let i = ca_build(&scalar(2.0), &scalar(1.0), &tol()).unwrap();
        assert_eq!(i.t()[(0, 0)].re, 0.0);
    }

    #[test]
    fn build_errors() {
        let c = crate::opcore::from_real(2, 2, &[0.0, 0.5, 0.0, 0.0]);
        let a = crate::opcore::real_diag(&[1.0, 2.0]);
        assert!(matches!(ca_build(&a, &c, &tol()), Err(DilationError::NotCommuting { .. })));
        assert!(matches!(ca_build(&scalar(0.0), &scalar(0.5), &tol()), Err(DilationError::NotInvertible { .. })));
        assert!(matches!(ca_build(&scalar(1.0), &scalar(1.5), &tol()), Err(DilationError::NotContraction { .. })));
        // A = I, C unitary: I - C*C = 0 is singular
        assert!(matches!(ca_build(&scalar(1.0), &scalar(1.0), &tol()), Err(DilationError::NotInvertible { .. })));
    }

    #[test]
    fn scalar_moments_are_one_half() {
        let m = ca_moments(&scalar_instance(), 6).unwrap();
        for k in 1..=6 {
            assert!((m.seq.term(k)[(0, 0)].re - 0.5).abs() < 1e-14);
        }
        assert!(m.cross_residual < 1e-14);
    }

    #[test]
    fn zero_c_gives_zero_moments() {
        let i = ca_build(&scalar(1.7), &scalar(0.0), &tol()).unwrap();
        let m = ca_moments(&i, 3).unwrap();
        assert!((1..=3).all(|k| m.seq.term(k)[(0, 0)].norm() == 0.0));
    }

    #[test]
    fn c_rho_examples() {
        let i = c_rho_build(1.0, &scalar(0.5), &tol()).unwrap();
        assert!((i.t()[(0, 0)].re - 0.5).abs() < 1e-14);
        let i = c_rho_build(2.0, &scalar(0.5f64.sqrt()), &tol()).unwrap();
        assert!((i.t()[(0, 0)].re - 1.0).abs() < 1e-14);
        assert!(i.identities().last().unwrap().passed);
        let i = c_rho_build(2.0, &scalar(0.0), &tol()).unwrap();
        assert_eq!(i.t()[(0, 0)].re, 0.0);
    }

    #[test]
    fn json_keeps_only_a_and_c() {
        let i = scalar_instance();
        let text = serde_json::to_string(&i).unwrap();
        assert!(text.starts_with(r#"{"A":"#) && !text.contains("B_star"));
        let back: CaInstance = serde_json::from_str(&text).unwrap();
        assert_eq!(back, i);
    }
}
