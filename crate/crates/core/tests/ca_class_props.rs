use dilation_core::ca_class::{
    ca_build, ca_isometric_v, ca_membership, ca_moments, ca_unitary_u, istratescu_monotonicity_test,
    partial_isometry_r, CaInstance, DEFAULT_KERNEL_RADII,
};
use dilation_core::moments::Verdict;
use dilation_core::opcore::{corner_moments, op_norm, ComplexMatrix, Tolerance};
use dilation_core::random;
use proptest::prelude::*;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn instance(seed: u64, d: usize, unit_block: bool) -> CaInstance {
    let mut rng = random::rng(seed);
    let (a, c) = random::commuting_pair(&mut rng, d, unit_block);
    ca_build(&a, &c, &tol()).unwrap()
}

fn corner_gap(op: &ComplexMatrix, inst: &CaInstance, n: usize) -> f64 {
    let want = ca_moments(inst, n).unwrap();
    let got = corner_moments(op, inst.dim(), n).unwrap();
    got.iter().zip(want.seq.terms()).map(|(x, y)| op_norm(&(x - y))).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn derived_identities_hold(seed in any::<u64>(), d in 1usize..5, unit in prop::bool::ANY) {
        let inst = instance(seed, d, unit);
        for c in inst.identities() {
            prop_assert!(c.passed, "{} = {} > {}", c.name, c.value, c.bound);
        }
    }

    #[test]
    fn r_is_a_partial_isometry(seed in any::<u64>(), d in 1usize..5) {
        let inst = instance(seed, d, false);
        let r = partial_isometry_r(&inst, 4).unwrap();
        for c in &r.certificates {
            prop_assert!(c.passed, "{} = {}", c.name, c.value);
        }
    }

    #[test]
    fn moment_chain(seed in any::<u64>(), d in 1usize..4, n in 1usize..6) {
        let inst = instance(seed, d, seed % 3 == 0);
        let bound = tol().verify(op_norm(inst.t()).max(1.0).powi(n as i32) * 10.0);
        let r = partial_isometry_r(&inst, n).unwrap();
        prop_assert!(corner_gap(&r.operator, &inst, n) <= bound);
        let v = ca_isometric_v(&inst, n).unwrap();
        prop_assert!(corner_gap(&v.operator, &inst, n) <= bound);
        let u = ca_unitary_u(&inst, n, n).unwrap();
        prop_assert!(corner_gap(&u.operator, &inst, n) <= bound);
        prop_assert!(u.adjoint_residuals.iter().all(|&x| x <= bound));
    }

    #[test]
    fn built_instances_are_members(seed in any::<u64>(), d in 1usize..4) {
        let inst = instance(seed, d, false);
        let m = ca_membership(inst.a(), inst.t(), 4, 8, seed, &DEFAULT_KERNEL_RADII, 16, &tol()).unwrap();
        prop_assert_eq!(m.zeta_verdict.satisfied, Verdict::Yes);
        prop_assert_eq!(m.kernel_verdict.satisfied, Verdict::Yes);
        prop_assert!(m.consistent);
    }

    #[test]
    fn monotone_in_a(seed in any::<u64>(), d in 1usize..4) {
        let mut rng = random::rng(seed);
        let a1 = random::positive_definite(&mut rng, d, 0.3, 2.0);
        let g = random::ginibre(&mut rng, d, d);
        let a2 = &a1 + &g * g.adjoint();
        let t = random::ginibre(&mut rng, d, d);
        let r = istratescu_monotonicity_test(&a1, &a2, &t, &[0.3, 0.7], 16, 50, seed, &tol()).unwrap();
        prop_assert!(r.flag, "{:?}", r);
    }
}
