//! Seeded generators for test instances and sampling trials.

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::opcore::{c64, identity, op_norm, real_diag, ComplexMatrix};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> c64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<c64> {
    loop {
        let v: Vec<c64> = (0..n).map(|_| complex_normal(rng)).collect();
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-8 {
            return v.into_iter().map(|z| z / nrm).collect();
        }
    }
}

pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = ginibre(rng, n, n);
    (&g + g.adjoint()) * c64::new(0.5, 0.0)
}

/// Haar-distributed unitary via QR with the phases of `diag(R)` removed.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let qr = ginibre(rng, n, n).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random matrix rescaled to spectral norm exactly `norm`.
pub fn with_norm<R: Rng + ?Sized>(rng: &mut R, n: usize, norm: f64) -> ComplexMatrix {
    let g = ginibre(rng, n, n);
    let s = op_norm(&g);
    g * c64::new(norm / s, 0.0)
}

/// Contraction with spectral norm drawn uniformly from `[lo, hi]`.
pub fn contraction<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> ComplexMatrix {
    let norm = rng.random_range(lo..=hi);
    with_norm(rng, n, norm)
}

/// Positive definite matrix `W diag(lambda) W*` with eigenvalues in `[lo, hi]`.
pub fn positive_definite<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> ComplexMatrix {
    let w = unitary(rng, n);
    let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    &w * real_diag(&lambda) * w.adjoint()
}

/// Commuting pair `(A, C)` with `A` positive definite and `C` a strict
/// contraction: `C = W (C_1 + ... + C_k) W*`, `A = W (a_1 I + ... + a_k I) W*`.
/// With `unit_block` set, one block has `a_j = 1`, so `(I - A) B D C` has a
/// kernel.
pub fn commuting_pair<R: Rng + ?Sized>(rng: &mut R, d: usize, unit_block: bool) -> (ComplexMatrix, ComplexMatrix) {
    assert!(d >= 1);
    let mut sizes = Vec::new();
    let mut left = d;
    while left > 0 {
        let s = rng.random_range(1..=left);
        sizes.push(s);
        left -= s;
    }
    let forced = if unit_block { Some(rng.random_range(0..sizes.len())) } else { None };
    let mut a_diag = ComplexMatrix::zeros(d, d);
    let mut c_diag = ComplexMatrix::zeros(d, d);
    let mut off = 0;
    for (j, &s) in sizes.iter().enumerate() {
        let a = if forced == Some(j) {
            1.0
        } else {
            // keep away from 1 so the generic regime has an invertible (I - A)
            let x: f64 = rng.random_range(0.3..2.5);
            if (x - 1.0).abs() < 0.1 { x + 0.2 } else { x }
        };
        let c = contraction(rng, s, 0.2, 0.9);
        a_diag.view_mut((off, off), (s, s)).copy_from(&(identity(s) * c64::new(a, 0.0)));
        c_diag.view_mut((off, off), (s, s)).copy_from(&c);
        off += s;
    }
    let w = unitary(rng, d);
    let a = &w * a_diag * w.adjoint();
    let c = &w * c_diag * w.adjoint();
    (crate::opcore::hermitian_part(&a), c)
}

/// Moments `m_0..m_n` of a discrete probability measure with `atoms` atoms
/// drawn uniformly from `[lo, hi]`.
pub fn discrete_measure_moments<R: Rng + ?Sized>(rng: &mut R, atoms: usize, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let xs: Vec<f64> = (0..atoms).map(|_| rng.random_range(lo..=hi)).collect();
    let ws: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = ws.iter().sum();
    (0..=n)
        .map(|k| xs.iter().zip(&ws).map(|(x, w)| w / total * x.powi(k as i32)).sum())
        .collect()
}
