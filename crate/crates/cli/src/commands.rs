use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use dilation_core::ca_class::{
    ca_isometric_v, ca_moments, ca_unitary_u, kernel_check, partial_isometry_r, zeta_check, DEFAULT_KERNEL_RADII,
};
use dilation_core::dilations::{
    adjoint_residuals, equivalence_by_moments, gns_selfadjoint, isometric_recursive, schaffer_isometry,
    schaffer_unitary, structure_defect, tridiagonal_recursive, verify_dilation_with, DilationKind, DilationResult,
};
use dilation_core::moments::{
    completely_monotone_check, hamburger_check, jacobi_matrix, jacobi_parameters, poisson_check,
    selfadjoint_contraction_check, toeplitz_positivity_check, CriterionReport, MomentSequence, Verdict,
    DEFAULT_POISSON_RADII,
};
use dilation_core::opcore::{corner_moments, op_norm};
use dilation_core::{ComplexMatrix, Tolerance};
use serde::Serialize;

use crate::input::{load, CliError, Document};
use crate::{CriterionName, DilateKind, KindName, Shared};

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub config: Config,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub criteria: Vec<CriterionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dilation: Option<DilationResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jacobi: Option<JacobiSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<Verification>,
    pub overall: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl Report {
    pub fn exit_code(&self) -> u8 {
        match self.overall {
            Verdict::Yes => 0,
            Verdict::No => 2,
            Verdict::Borderline => 3,
        }
    }
}

/// Echo of everything that determines the numbers in a report.
#[derive(Debug, Serialize)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    pub input_kind: &'static str,
    pub tolerance: Tolerance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    pub seed: u64,
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_radii: Option<Vec<f64>>,
    pub grid_angles: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub criteria: Vec<CriterionName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<DilateKind>,
}

#[derive(Debug, Serialize)]
pub struct JacobiSummary {
    pub levels: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub rank_terminated: bool,
    /// `max_n |(J^n)_00 - m_n|` over the orders the parameters determine.
    pub reconstruction_residual: f64,
    pub checked_orders: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Verification {
    pub orders: usize,
    pub residuals: Vec<f64>,
    pub bounds: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub adjoint_residuals: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<DilationKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equivalence_gap: Option<f64>,
    pub passed: bool,
}

struct Run {
    tol: Tolerance,
    start: Instant,
}

impl Run {
    fn new(shared: &Shared) -> Result<Self, CliError> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(shared.tol_abs) || !ok(shared.tol_rel) {
            return Err(CliError::Usage("tolerances must be finite and non-negative".into()));
        }
        Ok(Run { tol: Tolerance::new(shared.tol_abs, shared.tol_rel), start: Instant::now() })
    }

    fn input(&self, shared: &Shared) -> Result<(PathBuf, Document), CliError> {
        let path = shared.input.clone().ok_or_else(|| CliError::Usage("--input is required".into()))?;
        let doc = load(&path, &self.tol)?;
        Ok((path, doc))
    }

    fn report(&self, shared: &Shared, command: &'static str, config: Config, overall: Verdict) -> Report {
        let (timestamp, wall_time_ms) = if shared.no_timestamp {
            (None, None)
        } else {
            let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            (Some(now), Some(self.start.elapsed().as_secs_f64() * 1e3))
        };
        Report {
            command,
            config,
            criteria: Vec::new(),
            dilation: None,
            jacobi: None,
            verification: None,
            overall,
            timestamp,
            wall_time_ms,
        }
    }
}

fn config(shared: &Shared, input: Option<PathBuf>, doc: &Document, tol: Tolerance) -> Config {
    Config {
        input,
        input_kind: doc.describe(),
        tolerance: tol,
        levels: shared.levels,
        seed: shared.seed,
        trials: shared.trials,
        grid_radii: shared.grid_radii.clone(),
        grid_angles: shared.grid_angles,
        criteria: Vec::new(),
        kind: None,
    }
}

fn wrong_input(doc: &Document, wanted: &str) -> CliError {
    CliError::Usage(format!("expected {wanted}, got a {}", doc.describe()))
}

fn sequence(doc: &Document) -> Result<&MomentSequence, CliError> {
    match doc {
        Document::Sequence(s) => Ok(s),
        other => Err(wrong_input(other, "a moment sequence")),
    }
}

fn pair(doc: &Document) -> Result<(ComplexMatrix, ComplexMatrix), CliError> {
    match doc {
        Document::Instance(i) => Ok((i.a().clone(), i.t().clone())),
        Document::Pair { a, t } => Ok((a.clone(), t.clone())),
        other => Err(wrong_input(other, "an (A, T) pair or C_A instance")),
    }
}

pub fn check(shared: &Shared, criteria: &[CriterionName]) -> Result<Report, CliError> {
    let run = Run::new(shared)?;
    let (path, doc) = run.input(shared)?;
    let tol = run.tol;
    let mut reports = Vec::with_capacity(criteria.len());
    for &c in criteria {
        let r = match c {
            CriterionName::Hankel => hamburger_check(sequence(&doc)?, &tol)?,
            CriterionName::SelfadjointContraction => selfadjoint_contraction_check(sequence(&doc)?, &tol)?,
            CriterionName::Cm => completely_monotone_check(sequence(&doc)?, &tol)?,
            CriterionName::Toeplitz => toeplitz_positivity_check(sequence(&doc)?, shared.trials, shared.seed, &tol)?,
            CriterionName::Poisson => {
                let radii = shared.grid_radii.clone().unwrap_or_else(|| DEFAULT_POISSON_RADII.to_vec());
                poisson_check(sequence(&doc)?, &radii, shared.grid_angles, &tol)?
            }
            CriterionName::Zeta => {
                let (a, t) = pair(&doc)?;
                zeta_check(&a, &t, shared.levels.unwrap_or(4), shared.trials, shared.seed, &tol)?
            }
            CriterionName::Kernel => {
                let (a, t) = pair(&doc)?;
                let radii = shared.grid_radii.clone().unwrap_or_else(|| DEFAULT_KERNEL_RADII.to_vec());
                kernel_check(&a, &t, &radii, shared.grid_angles, &tol)?
            }
        };
        reports.push(r);
    }
    let overall = reports.iter().fold(Verdict::Yes, |v, r| v.combine(r.satisfied));
    let mut cfg = config(shared, Some(path), &doc, tol);
    cfg.criteria = criteria.to_vec();
    let mut report = run.report(shared, "check", cfg, overall);
    report.criteria = reports;
    Ok(report)
}

fn construct(doc: &Document, kind: DilateKind, levels: Option<usize>, tol: &Tolerance) -> Result<(DilationResult, MomentSequence), CliError> {
    let lv = |default: usize| levels.unwrap_or(default);
    let operator = |doc: &Document| match doc {
        Document::Operator(t) => Ok(t.clone()),
        Document::Pair { t, .. } => Ok(t.clone()),
        other => Err(wrong_input(other, "an operator {\"T\": ...}")),
    };
    let instance = |doc: &Document| match doc {
        Document::Instance(i) => Ok(i.as_ref().clone()),
        other => Err(wrong_input(other, "a C_A instance {\"A\", \"C\"}")),
    };
    Ok(match kind {
        DilateKind::Gns => {
            let seq = sequence(doc)?;
            (gns_selfadjoint(seq, lv(seq.order().saturating_sub(1) / 2), tol)?, seq.clone())
        }
        DilateKind::Tridiagonal => {
            let seq = sequence(doc)?;
            (tridiagonal_recursive(seq, lv(seq.order() / 2), tol)?.1, seq.clone())
        }
        DilateKind::Isometric => {
            let seq = sequence(doc)?;
            (isometric_recursive(seq, lv(seq.order().saturating_sub(1)), tol)?, seq.clone())
        }
        DilateKind::SchafferIsometry => {
            let t = operator(doc)?;
            let copies = lv(4);
            (schaffer_isometry(&t, copies, tol)?, MomentSequence::from_powers(&t, copies + 1)?)
        }
        DilateKind::SchafferUnitary => {
            let t = operator(doc)?;
            let k = lv(4);
            (schaffer_unitary(&t, k, k, tol)?, MomentSequence::from_powers(&t, k)?)
        }
        DilateKind::CaPartial => {
            let inst = instance(doc)?;
            let n = lv(4);
            (partial_isometry_r(&inst, n)?, ca_moments(&inst, n.max(1))?.seq)
        }
        DilateKind::CaIsometric => {
            let inst = instance(doc)?;
            let n = lv(4);
            (ca_isometric_v(&inst, n)?, ca_moments(&inst, n + 1)?.seq)
        }
        DilateKind::CaUnitary => {
            let inst = instance(doc)?;
            let n = lv(4);
            (ca_unitary_u(&inst, n, n)?, ca_moments(&inst, n.max(1))?.seq)
        }
    })
}

/// Recomputes residuals and structure from the operator alone, keeping the
/// constructor's certificates.
fn reverify(built: &DilationResult, seq: &MomentSequence, tol: &Tolerance) -> Result<DilationResult, CliError> {
    let mut r = verify_dilation_with(&built.operator, seq, built.guaranteed_orders, built.kind, &built.edges)?;
    if !built.adjoint_residuals.is_empty() {
        r.adjoint_residuals = adjoint_residuals(&built.operator, seq, built.adjoint_residuals.len() - 1)?;
    }
    r.certificates = built.certificates.clone();
    r.level_dims = built.level_dims.clone();
    r.rank_terminated = built.rank_terminated;
    if !r.passes(seq, tol) {
        return Err(CliError::Unverified(format!(
            "re-verification failed: max residual {:.3e}, structure defect {:.3e}",
            r.max_residual(),
            r.structure_defect
        )));
    }
    Ok(r)
}

pub fn dilate(shared: &Shared, kind: DilateKind) -> Result<Report, CliError> {
    let run = Run::new(shared)?;
    let (path, doc) = run.input(shared)?;
    let (built, seq) = construct(&doc, kind, shared.levels, &run.tol)?;
    let checked = reverify(&built, &seq, &run.tol)?;
    let mut cfg = config(shared, Some(path), &doc, run.tol);
    cfg.kind = Some(kind);
    let mut report = run.report(shared, "dilate", cfg, Verdict::Yes);
    report.dilation = Some(checked);
    Ok(report)
}

pub fn jacobi(shared: &Shared) -> Result<Report, CliError> {
    let run = Run::new(shared)?;
    let (path, doc) = run.input(shared)?;
    let seq = sequence(&doc)?;
    let levels = shared.levels.unwrap_or(seq.order().div_ceil(2));
    let p = jacobi_parameters(seq, levels, &run.tol)?;
    let m: Vec<f64> = seq.terms().iter().map(|t| t[(0, 0)].re).collect();
    let (residual, checked) = if p.a.is_empty() {
        (0.0, 0)
    } else {
        let j = jacobi_matrix(&p.a, &p.b)?;
        let top = if p.rank_terminated { seq.order() } else { (2 * p.a.len() - 1).min(seq.order()) };
        let corners = corner_moments(&j, 1, top)?;
        let r = corners.iter().zip(&m).map(|(c, m)| (c[(0, 0)].re - m).abs()).fold(0.0, f64::max);
        (r, top)
    };
    let note = p.rank_terminated.then(|| format!("rank termination: the measure has {} atoms", p.a.len()));
    let summary = JacobiSummary {
        levels,
        a: p.a,
        b: p.b,
        rank_terminated: p.rank_terminated,
        reconstruction_residual: residual,
        checked_orders: checked,
        note,
    };
    let overall = if residual <= run.tol.verify(m.iter().fold(1.0, |a: f64, x| a.max(x.abs()))) {
        Verdict::Yes
    } else {
        Verdict::No
    };
    let mut report = run.report(shared, "jacobi", config(shared, Some(path), &doc, run.tol), overall);
    report.jacobi = Some(summary);
    Ok(report)
}

fn kind_of(name: KindName) -> DilationKind {
    match name {
        KindName::SelfAdjoint => DilationKind::SelfAdjoint,
        KindName::Positive => DilationKind::Positive,
        KindName::Isometric => DilationKind::Isometric,
        KindName::Unitary => DilationKind::Unitary,
        KindName::Partial => DilationKind::Partial,
    }
}

fn load_operator(path: &Path, tol: &Tolerance) -> Result<(ComplexMatrix, Option<DilationResult>), CliError> {
    match load(path, tol)? {
        Document::Operator(m) => Ok((m, None)),
        Document::Dilation(r) => Ok((r.operator.clone(), Some(*r))),
        other => Err(wrong_input(&other, "an operator or saved dilation")),
    }
}

pub fn verify(
    shared: &Shared,
    operator: &Path,
    operator2: Option<&Path>,
    kind: Option<KindName>,
) -> Result<Report, CliError> {
    let run = Run::new(shared)?;
    let tol = run.tol;
    let (path, doc) = run.input(shared)?;
    let (op, saved) = load_operator(operator, &tol)?;
    let wanted = shared.levels.or(saved.as_ref().map(|s| s.guaranteed_orders));
    let seq = match &doc {
        Document::Sequence(s) => s.clone(),
        Document::Instance(i) => ca_moments(i, wanted.unwrap_or(4).max(1))?.seq,
        Document::Operator(t) => MomentSequence::from_powers(t, wanted.unwrap_or(4))?,
        other => return Err(wrong_input(other, "a sequence, C_A instance or operator")),
    };
    let d = seq.dim();
    if op.nrows() != op.ncols() || op.nrows() < d {
        return Err(CliError::Usage(format!(
            "operator is {}x{}, needs to be square of size at least {d}",
            op.nrows(),
            op.ncols()
        )));
    }
    let orders = wanted.unwrap_or(seq.order()).min(seq.order());
    let kind = kind.map(kind_of).or(saved.as_ref().map(|s| s.kind));
    let edges = saved.as_ref().map(|s| s.edges.clone()).unwrap_or_default();
    let vr = verify_dilation_with(&op, &seq, orders, kind.unwrap_or(DilationKind::SelfAdjoint), &edges)?;
    let bounds: Vec<f64> = seq.terms().iter().take(orders + 1).map(|a| tol.verify(op_norm(a))).collect();
    let mut passed = vr.residuals.iter().zip(&bounds).all(|(r, b)| r <= b);

    let adjoint = match &saved {
        Some(s) if !s.adjoint_residuals.is_empty() => {
            let n = (s.adjoint_residuals.len() - 1).min(seq.order());
            let a = adjoint_residuals(&op, &seq, n)?;
            passed &= a.iter().zip(&bounds).all(|(r, b)| r <= b);
            a
        }
        _ => Vec::new(),
    };
    let structure = kind.map(|k| structure_defect(&op, k, &edges));
    if let Some(s) = structure {
        passed &= s <= tol.verify(op_norm(&op));
    }
    let equivalence_gap = match operator2 {
        Some(p2) => {
            let (op2, _) = load_operator(p2, &tol)?;
            let gap = equivalence_by_moments(&op, &op2, d, orders, false)?;
            passed &= gap <= tol.verify(bounds.len() as f64);
            Some(gap)
        }
        None => None,
    };
    let verification = Verification {
        orders,
        residuals: vr.residuals,
        bounds,
        adjoint_residuals: adjoint,
        kind,
        structure_defect: structure,
        equivalence_gap,
        passed,
    };
    let overall = if passed { Verdict::Yes } else { Verdict::No };
    let mut report = run.report(shared, "verify", config(shared, Some(path), &doc, tol), overall);
    report.verification = Some(verification);
    Ok(report)
}

pub fn emit(report: &Report, output: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    match output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
