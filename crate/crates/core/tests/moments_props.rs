use dilation_core::json::from_pairs;
use dilation_core::moments::{
    completely_monotone_check, hamburger_check, hankel, jacobi_matrix, jacobi_parameters, poisson_check,
    selfadjoint_contraction_check, MomentSequence, Verdict, Witness,
};
use dilation_core::opcore::{c64, identity, matrix_power, psd_check, zeros, ComplexMatrix, PsdVerdict, Tolerance};
use dilation_core::random;
use nalgebra::DVector;
use proptest::prelude::*;

fn tol() -> Tolerance {
    Tolerance::default()
}

/// `A_n = P K^n P*` for a Hermitian contraction `K` on `C^{d + extra}`.
fn compressed_hermitian(seed: u64, d: usize, extra: usize, n: usize) -> MomentSequence {
    let mut rng = random::rng(seed);
    let h = random::hermitian(&mut rng, d + extra);
    let norm = dilation_core::opcore::op_norm(&h);
    let k = h * c64::new(0.95 / norm, 0.0);
    let terms = (0..=n).map(|j| matrix_power(&k, j).view((0, 0), (d, d)).into_owned()).collect();
    MomentSequence::new(terms, &tol()).unwrap()
}

fn form(seq: &MomentSequence, xs: &[ComplexMatrix], n: usize) -> ComplexMatrix {
    let d = seq.dim();
    let mut s = zeros(d, d);
    for i in 0..=n {
        for j in 0..=n {
            s += xs[i].adjoint() * seq.term(i + j) * &xs[j];
        }
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn positive_hankel_gives_positive_forms(seed in any::<u64>(), d in 1usize..3, n in 1usize..3) {
        let seq = compressed_hermitian(seed, d, 3, 2 * n);
        prop_assert_eq!(hamburger_check(&seq, &tol()).unwrap().satisfied, Verdict::Yes);
        let mut rng = random::rng(seed ^ 0x5eed);
        let xs: Vec<ComplexMatrix> = (0..=n).map(|_| random::ginibre(&mut rng, d, d)).collect();
        let s = form(&seq, &xs, n);
        prop_assert_ne!(psd_check(&s, &tol()).unwrap().verdict, PsdVerdict::NotPsd);
    }

    #[test]
    fn hankel_witness_gives_negative_form(seed in any::<u64>(), d in 1usize..3) {
        let good = compressed_hermitian(seed, d, 3, 4);
        let mut terms = good.terms().to_vec();
        let a1 = terms[1].clone();
        terms[2] = &a1 * &a1 - identity(d) * c64::new(0.5, 0.0);
        let bad = MomentSequence::new(terms, &tol()).unwrap();
        let r = hamburger_check(&bad, &tol()).unwrap();
        prop_assert_eq!(r.satisfied, Verdict::No);
        let Some(Witness::Vector { order, vector, .. }) = r.witness else { panic!("no witness") };
        let n = order / 2;
        let v = from_pairs(&vector);
        // X_i = |h_i><g| with a fixed unit g
        let mut g = DVector::zeros(d);
        g[0] = c64::new(1.0, 0.0);
        let xs: Vec<ComplexMatrix> = (0..=n)
            .map(|i| DVector::from_column_slice(&v[i * d..(i + 1) * d]) * g.adjoint())
            .collect();
        let s = form(&bad, &xs, n);
        prop_assert_eq!(psd_check(&s, &tol()).unwrap().verdict, PsdVerdict::NotPsd);
    }

    #[test]
    fn selfadjoint_contraction_implies_second_moment_bound(seed in any::<u64>(), d in 1usize..4) {
        let seq = compressed_hermitian(seed, d, 2, 4);
        let r = selfadjoint_contraction_check(&seq, &tol()).unwrap();
        prop_assume!(r.satisfied == Verdict::Yes);
        let a1 = seq.term(1);
        let gap = seq.term(2) - a1 * a1;
        prop_assert_eq!(psd_check(&gap, &tol()).unwrap().verdict, PsdVerdict::Psd);
    }

    #[test]
    fn measures_on_unit_interval_are_completely_monotone(seed in any::<u64>(), atoms in 1usize..5) {
        let mut rng = random::rng(seed);
        let m = random::discrete_measure_moments(&mut rng, atoms, 0.0, 1.0, 12);
        let seq = MomentSequence::from_scalars(&m).unwrap();
        prop_assert_ne!(completely_monotone_check(&seq, &tol()).unwrap().satisfied, Verdict::No);
    }

    #[test]
    fn mass_outside_unit_interval_is_caught(seed in any::<u64>(), atoms in 1usize..4, outside in prop::bool::ANY) {
        let mut rng = random::rng(seed);
        let inside = random::discrete_measure_moments(&mut rng, atoms, 0.0, 1.0, 20);
        let x: f64 = if outside { 1.5 } else { -0.5 };
        let m: Vec<f64> = inside.iter().enumerate().map(|(k, v)| 0.8 * v + 0.2 * x.powi(k as i32)).collect();
        let seq = MomentSequence::from_scalars(&m).unwrap();
        prop_assert_eq!(completely_monotone_check(&seq, &tol()).unwrap().satisfied, Verdict::No);
    }

    #[test]
    fn powers_of_contractions_pass_poisson(seed in any::<u64>(), d in 1usize..4) {
        let mut rng = random::rng(seed);
        let t = random::contraction(&mut rng, d, 0.1, 0.9);
        let seq = MomentSequence::from_powers(&t, 20).unwrap();
        let r = poisson_check(&seq, &[0.3, 0.5, 0.7], 16, &tol()).unwrap();
        prop_assert_eq!(r.satisfied, Verdict::Yes);
    }

    #[test]
    fn jacobi_round_trip(seed in any::<u64>(), levels in 1usize..5, spare in 0usize..3) {
        let mut rng = random::rng(seed);
        let m = random::discrete_measure_moments(&mut rng, levels + spare, -1.0, 1.0, 2 * levels);
        let seq = MomentSequence::from_scalars(&m).unwrap();
        let p = jacobi_parameters(&seq, levels, &tol()).unwrap();
        let j = jacobi_matrix(&p.a, &p.b).unwrap();
        for (n, want) in m.iter().enumerate().take(2 * p.a.len()) {
            prop_assert!((matrix_power(&j, n)[(0, 0)].re - want).abs() < 1e-8, "n = {}", n);
        }
    }
}

#[test]
fn hankel_of_constant_sequence_is_all_ones() {
    let seq = MomentSequence::from_scalars(&[1.0; 5]).unwrap();
    let h = hankel(&seq, 2, 0).unwrap();
    assert!(h.iter().all(|x| *x == c64::new(1.0, 0.0)));
}
