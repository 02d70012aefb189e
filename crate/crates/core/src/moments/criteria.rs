use std::f64::consts::PI;

use super::{hankel, szego_partial_sum, CriterionReport, MomentSequence, Verdict, VerdictCounts, Witness};
use crate::json::pairs;
use crate::opcore::{c64, hermitian_eig, identity, psd_check, ComplexMatrix, PsdReport, PsdVerdict, Tolerance};
use crate::par::{self, Backend};
use crate::random;
use crate::{DilationError, Result};

pub const DEFAULT_POISSON_RADII: [f64; 4] = [0.3, 0.6, 0.9, 0.99];

/// Largest `k` for which `C(k, i)` is tabulated exactly.
const MAX_BINOMIAL_ORDER: usize = 60;

struct Check {
    order: usize,
    label: String,
    report: PsdReport,
}

fn fold_checks(criterion: &str, checks: Vec<Check>) -> CriterionReport {
    let mut verdict = Verdict::Yes;
    let mut worst_margin = f64::INFINITY;
    let mut worst_no: Option<&Check> = None;
    let mut counts = VerdictCounts::default();
    for c in &checks {
        let v = Verdict::from_psd(c.report.verdict);
        counts.add(v);
        verdict = verdict.combine(v);
        worst_margin = worst_margin.min(c.report.min_eigenvalue);
        // lowest failing order, most negative on ties
        let better = |w: &Check| (c.order, c.report.min_eigenvalue) < (w.order, w.report.min_eigenvalue);
        if v == Verdict::No && worst_no.is_none_or(better) {
            worst_no = Some(c);
        }
    }
    let witness = worst_no.map(|c| Witness::Vector {
        order: c.order,
        label: c.label.clone(),
        vector: pairs(c.report.witness.as_deref().unwrap_or_default()),
        value: c.report.min_eigenvalue,
    });
    CriterionReport {
        criterion: criterion.to_string(),
        satisfied: verdict,
        max_order_checked: checks.iter().map(|c| c.order).max().unwrap_or(0),
        worst_margin: if checks.is_empty() { 0.0 } else { worst_margin },
        witness,
        certificate: None,
        counts: Some(counts),
    }
}

fn run_checks(jobs: Vec<(usize, String, ComplexMatrix)>, tol: &Tolerance) -> Result<Vec<Check>> {
    par::map(Backend::default(), &jobs, |(order, label, m)| {
        psd_check(m, tol).map(|report| Check { order: *order, label: label.clone(), report })
    })
    .into_iter()
    .collect()
}

/// `H_n >= 0` for every `n` with `2n <= N`.
pub fn hamburger_check(seq: &MomentSequence, tol: &Tolerance) -> Result<CriterionReport> {
    seq.require_hermitian("hamburger_check")?;
    let mut jobs = Vec::new();
    for n in 0..=seq.order() / 2 {
        jobs.push((2 * n, format!("H_{n}"), hankel(seq, n, 0)?));
    }
    Ok(fold_checks("hamburger", run_checks(jobs, tol)?))
}

/// `H_n >= 0` (for `2n <= N`) and `H_n - H_n^(2) >= 0` (for `2n + 2 <= N`).
pub fn selfadjoint_contraction_check(seq: &MomentSequence, tol: &Tolerance) -> Result<CriterionReport> {
    seq.require_hermitian("selfadjoint_contraction_check")?;
    let mut jobs = Vec::new();
    for n in 0..=seq.order() / 2 {
        jobs.push((2 * n, format!("H_{n}"), hankel(seq, n, 0)?));
    }
    if seq.order() >= 2 {
        for n in 0..=(seq.order() - 2) / 2 {
            let diff = hankel(seq, n, 0)? - hankel(seq, n, 2)?;
            jobs.push((2 * n + 2, format!("H_{n} - H_{n}^(2)"), diff));
        }
    }
    Ok(fold_checks("selfadjoint_contraction", run_checks(jobs, tol)?))
}

fn binomial_rows(k_max: usize) -> Result<Vec<Vec<u64>>> {
    if k_max > MAX_BINOMIAL_ORDER {
        return Err(DilationError::Overflow { k: k_max });
    }
    let mut rows: Vec<Vec<u64>> = vec![vec![1]];
    for k in 1..=k_max {
        let prev = &rows[k - 1];
        let mut row = vec![1u64; k + 1];
        for i in 1..k {
            row[i] = prev[i - 1] + prev[i];
        }
        rows.push(row);
    }
    Ok(rows)
}

/// `sum_i C(k, i) (-1)^i A_{n+i} >= 0` for all `n + k <= N`: the image of
/// `x^n (1 - x)^k` under the moment functional.
pub fn completely_monotone_check(seq: &MomentSequence, tol: &Tolerance) -> Result<CriterionReport> {
    seq.require_hermitian("completely_monotone_check")?;
    let big_n = seq.order();
    let binom = binomial_rows(big_n)?;
    let norms: Vec<f64> = seq.terms().iter().map(crate::opcore::op_norm).collect();
    let d = seq.dim();
    let mut jobs = Vec::new();
    for k in 0..=big_n {
        for n in 0..=big_n - k {
            let mut acc = ComplexMatrix::zeros(d, d);
            let mut scale = 0.0;
            for (i, &c) in binom[k].iter().enumerate() {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                acc += seq.term(n + i) * c64::new(sign * c as f64, 0.0);
                scale += c as f64 * norms[n + i];
            }
            jobs.push((k, n, acc, scale));
        }
    }
    let checks: Vec<Result<(usize, usize, PsdReport)>> = par::map(Backend::default(), &jobs, |(k, n, m, scale)| {
        psd_check(m, &tol.widened(*scale)).map(|r| (*k, *n, r))
    });
    let mut verdict = Verdict::Yes;
    let mut worst_margin = f64::INFINITY;
    let mut counts = VerdictCounts::default();
    let mut witness: Option<Witness> = None;
    let mut worst_no = f64::INFINITY;
    for c in checks {
        let (k, n, r) = c?;
        let v = Verdict::from_psd(r.verdict);
        counts.add(v);
        verdict = verdict.combine(v);
        worst_margin = worst_margin.min(r.min_eigenvalue);
        if v == Verdict::No && r.min_eigenvalue < worst_no {
            worst_no = r.min_eigenvalue;
            witness = Some(Witness::Difference {
                k,
                n,
                vector: pairs(r.witness.as_deref().unwrap_or_default()),
                value: r.min_eigenvalue,
            });
        }
    }
    Ok(CriterionReport {
        criterion: "completely_monotone".into(),
        satisfied: verdict,
        max_order_checked: big_n,
        worst_margin,
        witness,
        certificate: None,
        counts: Some(counts),
    })
}

/// Block Toeplitz matrix with `(l, k)` block `A_{k-l}` (`A_{-n} = A_n^*`).
pub fn block_toeplitz(seq: &MomentSequence) -> ComplexMatrix {
    let d = seq.dim();
    let m = seq.order() + 1;
    let mut t = ComplexMatrix::zeros(m * d, m * d);
    for l in 0..m {
        for k in 0..m {
            let blk = seq.signed_term(k as isize - l as isize);
            t.view_mut((l * d, k * d), (d, d)).copy_from(&blk);
        }
    }
    t
}

/// `Re sum_{l,k} conj(c_l) c_k <h, A_{k-l} h>`.
pub fn toeplitz_form_value(seq: &MomentSequence, c: &[c64], h: &[c64]) -> Result<f64> {
    if c.len() > seq.order() + 1 || h.len() != seq.dim() {
        return Err(DilationError::ShapeMismatch(format!(
            "coefficients {} (max {}), vector {} (dim {})",
            c.len(),
            seq.order() + 1,
            h.len(),
            seq.dim()
        )));
    }
    let gram = scalar_toeplitz(seq, h, c.len());
    let mut v = c64::new(0.0, 0.0);
    for l in 0..c.len() {
        for k in 0..c.len() {
            v += c[l].conj() * gram[(l, k)] * c[k];
        }
    }
    Ok(v.re)
}

/// `t_{lk} = <h, A_{k-l} h>` for `0 <= l, k < m`.
fn scalar_toeplitz(seq: &MomentSequence, h: &[c64], m: usize) -> ComplexMatrix {
    let hv = nalgebra::DVector::from_column_slice(h);
    let vals: Vec<c64> = (0..m).map(|n| hv.dotc(&(seq.term(n) * &hv))).collect();
    ComplexMatrix::from_fn(m, m, |l, k| if k >= l { vals[k - l] } else { vals[l - k].conj() })
}

/// Minimizing unit `c` for a fixed `h`: the bottom eigenvector of the
/// scalar Toeplitz matrix of `h`.
fn optimal_coefficients(seq: &MomentSequence, h: &[c64]) -> Vec<c64> {
    let t = scalar_toeplitz(seq, h, seq.order() + 1);
    let t = crate::opcore::hermitian_part(&t);
    let (_, vecs) = hermitian_eig(&t, &Tolerance::new(f64::MAX / 4.0, 0.0)).expect("hermitian by construction");
    vecs.column(0).iter().copied().collect()
}

fn normalized(v: Vec<c64>) -> Option<Vec<c64>> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    (n > 1e-12).then(|| v.into_iter().map(|z| z / n).collect())
}

/// Two tiers. Tier 1 certifies YES by PSD of the block Toeplitz matrix.
/// Otherwise Tier 2 searches for `(c, h)` with a negative scalar form:
/// `trials` random pairs, the optimal `c` for each random `h`, and `h` taken
/// from the block slices of the Tier 1 witness. A value below `-10 tau`
/// gives NO; nothing found gives BORDERLINE.
pub fn toeplitz_positivity_check(
    seq: &MomentSequence,
    trials: usize,
    rng_seed: u64,
    tol: &Tolerance,
) -> Result<CriterionReport> {
    if seq.order() < 1 {
        return Err(DilationError::InsufficientData { needed: 2, available: 1 });
    }
    let big_t = block_toeplitz(seq);
    let tier1 = psd_check(&big_t, tol)?;
    let mut report = CriterionReport {
        criterion: "toeplitz".into(),
        satisfied: Verdict::Yes,
        max_order_checked: seq.order(),
        worst_margin: tier1.min_eigenvalue,
        witness: None,
        certificate: None,
        counts: None,
    };
    if tier1.verdict == PsdVerdict::Psd {
        report.certificate = Some("block-Toeplitz".into());
        return Ok(report);
    }

    let d = seq.dim();
    let m = seq.order() + 1;
    let mut rng = random::rng(rng_seed);
    let mut candidates: Vec<(Option<Vec<c64>>, Vec<c64>)> = Vec::with_capacity(2 * trials + m);
    for _ in 0..trials {
        let c = random::unit_vector(&mut rng, m);
        let h = random::unit_vector(&mut rng, d);
        candidates.push((Some(c), h));
    }
    for _ in 0..trials {
        candidates.push((None, random::unit_vector(&mut rng, d)));
    }
    if let Some(w) = &tier1.witness {
        for l in 0..m {
            if let Some(h) = normalized(w[l * d..(l + 1) * d].to_vec()) {
                candidates.push((None, h));
            }
        }
    }
    let evaluated = par::map(Backend::default(), &candidates, |(c, h)| {
        let c = c.clone().unwrap_or_else(|| optimal_coefficients(seq, h));
        let value = toeplitz_form_value(seq, &c, h).expect("shapes fixed above");
        (value, c, h.clone())
    });
    let (value, c, h) = evaluated
        .into_iter()
        .reduce(|best, x| if x.0 < best.0 { x } else { best })
        .expect("at least one candidate");
    let tau = tol.tau(&big_t);
    report.worst_margin = value.min(tier1.min_eigenvalue);
    if value < -10.0 * tau {
        report.satisfied = Verdict::No;
        report.witness = Some(Witness::Coefficients { c: pairs(&c), h: pairs(&h), value });
    } else {
        report.satisfied = Verdict::Borderline;
        report.certificate = Some(format!("tier 2 found no violation in {} candidates", candidates.len()));
    }
    Ok(report)
}

/// Tail-certified positivity of `P_A(z) = S_A(z) + S_A(z)^* - I` on the polar
/// grid `radii x angles`. With `||A_n|| <= 1` the truncated tail is bounded by
/// `2 r^{N+1} / (1 - r)`; a point is YES when `lambda_min` clears that bound
/// and NO when it is below minus that bound.
pub fn poisson_check(
    seq: &MomentSequence,
    radii: &[f64],
    angles_per_radius: usize,
    tol: &Tolerance,
) -> Result<CriterionReport> {
    poisson_check_with(seq, radii, angles_per_radius, tol, Backend::default())
}

/// [`poisson_check`] on an explicit backend.
pub fn poisson_check_with(
    seq: &MomentSequence,
    radii: &[f64],
    angles_per_radius: usize,
    tol: &Tolerance,
    backend: Backend,
) -> Result<CriterionReport> {
    if !seq.is_contractive() {
        return Err(DilationError::TailBoundUnavailable);
    }
    if let Some(&r) = radii.iter().find(|&&r| !(0.0..1.0).contains(&r)) {
        return Err(DilationError::DiskViolation { modulus: r });
    }
    if angles_per_radius == 0 {
        return Err(DilationError::InvalidArgument("angles_per_radius must be positive".into()));
    }
    let big_n = seq.order();
    let mut grid = Vec::with_capacity(radii.len() * angles_per_radius);
    for &r in radii {
        for j in 0..angles_per_radius {
            grid.push((r, 2.0 * PI * j as f64 / angles_per_radius as f64));
        }
    }
    let d = seq.dim();
    let results = par::map(backend, &grid, |&(r, theta)| -> Result<(Verdict, f64, PsdReport, c64)> {
        let z = c64::from_polar(r, theta);
        let s = szego_partial_sum(seq, z, big_n)?;
        let p = &s + s.adjoint() - identity(d);
        let rep = psd_check(&p, tol)?;
        let bound = 2.0 * r.powi(big_n as i32 + 1) / (1.0 - r);
        let lam = rep.min_eigenvalue;
        let v = if lam >= bound - rep.tau {
            Verdict::Yes
        } else if lam < -bound - 10.0 * rep.tau {
            Verdict::No
        } else {
            Verdict::Borderline
        };
        Ok((v, lam - bound, rep, z))
    });
    let mut verdict = Verdict::Yes;
    let mut counts = VerdictCounts::default();
    let mut worst_margin = f64::INFINITY;
    let mut witness = None;
    let mut worst_no = f64::INFINITY;
    for res in results {
        let (v, margin, rep, z) = res?;
        counts.add(v);
        verdict = verdict.combine(v);
        worst_margin = worst_margin.min(margin);
        if v == Verdict::No && rep.min_eigenvalue < worst_no {
            worst_no = rep.min_eigenvalue;
            witness = Some(Witness::GridPoint {
                z: [z.re, z.im],
                vector: pairs(rep.witness.as_deref().unwrap_or_default()),
                value: rep.min_eigenvalue,
            });
        }
    }
    Ok(CriterionReport {
        criterion: "poisson".into(),
        satisfied: verdict,
        max_order_checked: big_n,
        worst_margin,
        witness,
        certificate: Some(format!("{} grid points, truncation K = N = {big_n}", grid.len())),
        counts: Some(counts),
    })
}
