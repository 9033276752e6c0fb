//! Convergence studies, rate fits, bound audits and empirical information
//! complexity.
//!
//! The worst case over a unit ball is not computable, so every study measures
//! the error of one normalized test function. Reports say which function was
//! used.

use std::f64::consts::PI;
use std::io::Write;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compact::{kbar, safeguarded_rule, worstcase_bound, BoundVariant, Interval};
use crate::density::{CellPlan, Space};
use crate::error::{Error, Result};
use crate::jet::Smooth;
use crate::line::{CompositeRule, LineProblem};
use crate::oracle::{reference_integral_line_pieces, reference_integral_pieces, NormCache, TestFunction};

/// Absolute tolerance of the reference integrals used by the harness.
pub const ORACLE_TOL: f64 = 1e-13;

/// Largest budget probed by the complexity search.
pub const COMPLEXITY_LIMIT: usize = 1 << 20;

fn shared_cache() -> &'static NormCache {
    static CACHE: OnceLock<NormCache> = OnceLock::new();
    CACHE.get_or_init(NormCache::new)
}

/// One integration problem together with its proxy test function.
#[derive(Debug, Clone)]
pub enum ProblemSpec {
    Compact { omega: Interval, k: f64, s: usize, space: Space, function: TestFunction },
    Line { problem: LineProblem, function: TestFunction },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub domain: String,
    pub space: Space,
    pub s: usize,
    pub k: f64,
    pub function: String,
}

impl ProblemSpec {
    pub fn k(&self) -> f64 {
        match self {
            ProblemSpec::Compact { k, .. } => *k,
            ProblemSpec::Line { problem, .. } => problem.k,
        }
    }

    pub fn s(&self) -> usize {
        match self {
            ProblemSpec::Compact { s, .. } => *s,
            ProblemSpec::Line { problem, .. } => problem.s,
        }
    }

    pub fn space(&self) -> Space {
        match self {
            ProblemSpec::Compact { space, .. } => *space,
            ProblemSpec::Line { problem, .. } => problem.space,
        }
    }

    pub fn function(&self) -> &TestFunction {
        match self {
            ProblemSpec::Compact { function, .. } | ProblemSpec::Line { function, .. } => function,
        }
    }

    pub fn descriptor(&self) -> Descriptor {
        let domain = match self {
            ProblemSpec::Compact { omega, .. } => format!("[{}:{}]", omega.a, omega.b),
            ProblemSpec::Line { problem, .. } => {
                format!("{}(scale={})", problem.density.label(), problem.density.scale())
            }
        };
        Descriptor {
            domain,
            space: self.space(),
            s: self.s(),
            k: self.k(),
            function: self.function().label.clone(),
        }
    }

    /// Smallest `n` from which the rate fit starts: twice the safeguard
    /// threshold of the (largest) cell, and at least 8.
    pub fn rate_n_min(&self) -> Result<usize> {
        let kb = kbar(self.k());
        let threshold = match self {
            ProblemSpec::Compact { omega, .. } => (kb * omega.len() / PI).ceil() * 2.0,
            ProblemSpec::Line { problem, .. } => {
                let plan = problem.plan(0)?;
                let p_max = plan.cells.iter().map(|c| c.p).fold(0.0, f64::max);
                (2.0 * kb / PI).ceil() * 2.0 / p_max
            }
        };
        Ok(threshold.ceil().max(8.0) as usize)
    }

    pub fn check_membership(&self) -> Result<()> {
        let compact = matches!(self, ProblemSpec::Compact { .. });
        if self.function().is_member(self.space(), self.s(), compact) {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "{} is not in the {} class with s = {}",
                self.function(),
                self.space(),
                self.s()
            )))
        }
    }
}

/// Evaluates one problem at many budgets against a single reference value.
pub struct Evaluator {
    spec: ProblemSpec,
    reference: Complex64,
    norm: f64,
    plan: Option<CellPlan>,
}

impl Evaluator {
    /// `n_max` bounds the budgets that will be requested (line problems plan
    /// their cells once for it).
    pub fn new(spec: &ProblemSpec, n_max: usize) -> Result<Self> {
        spec.check_membership()?;
        Self::new_unchecked(spec, n_max)
    }

    /// Like [`Evaluator::new`] but accepts functions outside the class; the
    /// norm is then only meaningful on the integration window.
    pub fn new_unchecked(spec: &ProblemSpec, n_max: usize) -> Result<Self> {
        let cache = shared_cache();
        let f = spec.function();
        let breaks = f.breakpoints();
        match spec {
            ProblemSpec::Compact { omega, k, s, space, .. } => {
                let reference = reference_integral_pieces(|x| f.value(x), *k, *omega, &breaks, ORACLE_TOL)?.value;
                let norm = cache.norm(f, *omega, *s, *space)?;
                Ok(Self { spec: spec.clone(), reference, norm, plan: None })
            }
            ProblemSpec::Line { problem, .. } => {
                let reference = reference_integral_line_pieces(
                    |x| f.value(x),
                    problem.density.as_ref(),
                    problem.k,
                    ORACLE_TOL,
                    &breaks,
                )?
                .value;
                let plan = problem.plan(n_max)?;
                let (a, b) = plan.window();
                let norm = cache.norm(f, Interval::new(a, b)?, problem.s, problem.space)?;
                Ok(Self { spec: spec.clone(), reference, norm, plan: Some(plan) })
            }
        }
    }

    pub fn reference(&self) -> Complex64 {
        self.reference
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn plan(&self) -> Option<&CellPlan> {
        self.plan.as_ref()
    }

    /// `(value, error, per-unit bound, evaluations)` at budget `n`.
    pub fn at(&self, n: usize) -> Result<(Complex64, f64, f64, usize)> {
        let f = self.spec.function();
        match &self.spec {
            ProblemSpec::Compact { omega, k, s, space, .. } => {
                let rule = safeguarded_rule(*omega, n, *k);
                let value = rule.apply(|x| f.value(x))?;
                let bound = worstcase_bound(*omega, n, *s, *k, *space, BoundVariant::Safeguarded)?;
                Ok((value, (self.reference - value).norm(), bound, rule.len()))
            }
            ProblemSpec::Line { problem, .. } => {
                let plan = self.plan.as_ref().expect("line evaluator has a plan").with_budget(n)?;
                let rule = CompositeRule::from_plan(problem, plan);
                let value = rule.apply(|x| f.value(x))?;
                Ok((value, (self.reference - value).norm(), rule.error_bound(), rule.evaluation_count()))
            }
        }
    }

    pub fn error(&self, n: usize) -> Result<f64> {
        Ok(self.at(n)?.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: usize,
    pub measured_error: f64,
    /// Per-unit-norm bound; the error bound for this function is `bound * norm`.
    pub theoretical_bound: f64,
    pub eval_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub descriptor: Descriptor,
    pub norm: f64,
    pub rows: Vec<ReportRow>,
    pub fitted_rate: Option<f64>,
    pub rate_n_min: usize,
    pub bound_violations: usize,
}

/// Measures error, bound and evaluation count for each budget in `n_grid`.
pub fn convergence_study(spec: &ProblemSpec, n_grid: &[usize]) -> Result<ConvergenceReport> {
    if n_grid.is_empty() {
        return Err(Error::Domain("n_grid must not be empty".into()));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("n_grid must be strictly increasing".into()));
    }
    let n_max = *n_grid.last().unwrap();
    let eval = Evaluator::new(spec, n_max)?;
    let rows = n_grid
        .par_iter()
        .map(|&n| {
            let (_, err, bound, evals) = eval.at(n)?;
            Ok(ReportRow { n, measured_error: err, theoretical_bound: bound, eval_count: evals })
        })
        .collect::<Result<Vec<_>>>()?;
    let rate_n_min = spec.rate_n_min()?;
    let mut report = ConvergenceReport {
        descriptor: spec.descriptor(),
        norm: eval.norm,
        rows,
        fitted_rate: None,
        rate_n_min,
        bound_violations: 0,
    };
    report.fitted_rate = fit_rate(&report, rate_n_min).ok();
    report.bound_violations = audit_bounds(&report);
    Ok(report)
}

/// `{0, 1, 2, 4, ..., n_max}`.
pub fn dyadic_grid(n_max: usize) -> Vec<usize> {
    let mut grid = vec![0];
    let mut n = 1;
    while n <= n_max {
        grid.push(n);
        n *= 2;
    }
    grid
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InsufficientData("need at least two points".into()));
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("abscissae are all equal".into()));
    }
    Ok(sxy / sxx)
}

/// Slope of log error against log n over rows with `n >= n_min` and a
/// positive error; needs at least four such rows.
pub fn fit_rate(report: &ConvergenceReport, n_min: usize) -> Result<f64> {
    let pts: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter(|r| r.n >= n_min.max(1) && r.measured_error > 0.0 && r.measured_error.is_finite())
        .map(|r| (r.n as f64, r.measured_error))
        .collect();
    if pts.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} usable rows with n >= {n_min}, need 4",
            pts.len()
        )));
    }
    loglog_slope(&pts)
}

/// Rows whose error exceeds `bound * norm`.
pub fn audit_bounds(report: &ConvergenceReport) -> usize {
    report
        .rows
        .iter()
        .filter(|r| !(r.measured_error <= r.theoretical_bound * report.norm))
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Abs,
    Nor,
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "abs" => Ok(Criterion::Abs),
            "nor" => Ok(Criterion::Nor),
            other => Err(Error::Domain(format!("unknown criterion `{other}` (expected abs or nor)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityResult {
    pub n: usize,
    pub criterion: Criterion,
    pub eps: f64,
    pub target: f64,
    pub initial_error: f64,
    /// Some larger probed budget had a larger error than a smaller one.
    pub non_monotone: bool,
    pub probes: Vec<(usize, f64)>,
}

/// Doubling-then-bisection search for the smallest probed `n` whose error is
/// at most `eps` (absolute) or `eps * error(0)` (normalized).
pub fn search_complexity<F>(mut error: F, eps: f64, criterion: Criterion, limit: usize) -> Result<ComplexityResult>
where
    F: FnMut(usize) -> Result<f64>,
{
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let mut probes = Vec::new();
    let mut probe = |n: usize, probes: &mut Vec<(usize, f64)>| -> Result<f64> {
        let e = error(n)?;
        probes.push((n, e));
        Ok(e)
    };
    let e0 = probe(0, &mut probes)?;
    let target = match criterion {
        Criterion::Abs => eps,
        Criterion::Nor => eps * e0,
    };
    let finish = |n: usize, mut probes: Vec<(usize, f64)>| {
        probes.sort_by_key(|p| p.0);
        let non_monotone = probes.windows(2).any(|w| w[1].1 > w[0].1);
        ComplexityResult { n, criterion, eps, target, initial_error: e0, non_monotone, probes }
    };
    if e0 <= target {
        return Ok(finish(0, probes));
    }
    let mut lo = 0;
    let mut hi = 1;
    loop {
        if hi > limit {
            return Err(Error::Saturation { limit });
        }
        if probe(hi, &mut probes)? <= target {
            break;
        }
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if probe(mid, &mut probes)? <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(finish(hi, probes))
}

/// Empirical `n^abs` / `n^nor` for the problem's test function.
pub fn empirical_complexity(spec: &ProblemSpec, eps: f64, criterion: Criterion) -> Result<ComplexityResult> {
    let eval = Evaluator::new(spec, COMPLEXITY_LIMIT)?;
    search_complexity(|n| eval.error(n), eps, criterion, COMPLEXITY_LIMIT)
}

pub const CSV_HEADER: &str = "n,k,s,space,function,error,bound,evals,rate_fit";

/// Writes reports as CSV; `bound` is the error bound for the function
/// (per-unit bound times its oracle norm).
pub fn write_csv<W: Write>(reports: &[ConvergenceReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for rep in reports {
        let d = &rep.descriptor;
        let rate = rep.fitted_rate.map(|r| format!("{r:?}")).unwrap_or_default();
        for row in &rep.rows {
            writeln!(
                out,
                "{},{:?},{},{},{},{:?},{:?},{},{}",
                row.n,
                d.k,
                d.s,
                d.space,
                d.function,
                row.measured_error,
                row.theoretical_bound * rep.norm,
                row.eval_count,
                rate
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub descriptor: Descriptor,
    pub norm: f64,
    pub rows: usize,
    pub fitted_rate: Option<f64>,
    pub rate_n_min: usize,
    pub bound_violations: usize,
    pub proxy: String,
}

pub fn summarize(reports: &[ConvergenceReport]) -> Vec<ReportSummary> {
    reports
        .iter()
        .map(|r| ReportSummary {
            descriptor: r.descriptor.clone(),
            norm: r.norm,
            rows: r.rows.len(),
            fitted_rate: r.fitted_rate,
            rate_n_min: r.rate_n_min,
            bound_violations: r.bound_violations,
            proxy: format!("worst case proxied by test function {}", r.descriptor.function),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(errors: &[(usize, f64)], bound: f64) -> ConvergenceReport {
        ConvergenceReport {
            descriptor: Descriptor { domain: "x".into(), space: Space::Hs, s: 1, k: 0.0, function: "f".into() },
            norm: 1.0,
            rows: errors
                .iter()
                .map(|&(n, e)| ReportRow { n, measured_error: e, theoretical_bound: bound, eval_count: n })
                .collect(),
            fitted_rate: None,
            rate_n_min: 1,
            bound_violations: 0,
        }
    }

    #[test]
    fn slopes_of_power_laws() {
        let pts: Vec<(usize, f64)> = (3..12).map(|j| (1usize << j, ((1u64 << j) as f64).powi(-2))).collect();
        assert!((fit_rate(&synthetic(&pts, 1.0), 8).unwrap() + 2.0).abs() < 1e-10);
        let pts: Vec<(usize, f64)> = (3..12).map(|j| (1usize << j, 7.3 * ((1u64 << j) as f64).powi(-3))).collect();
        assert!((fit_rate(&synthetic(&pts, 1.0), 8).unwrap() + 3.0).abs() < 1e-10);
    }

    #[test]
    fn fit_needs_four_rows() {
        let pts = [(8, 1e-2), (16, 1e-3), (32, 1e-4)];
        assert!(matches!(fit_rate(&synthetic(&pts, 1.0), 8), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn audit_counts_violations() {
        let mut rep = synthetic(&[(1, 0.1), (2, 0.05), (4, 0.01)], 0.2);
        assert_eq!(audit_bounds(&rep), 0);
        rep.rows[1].measured_error = 0.5;
        assert_eq!(audit_bounds(&rep), 1);
    }

    #[test]
    fn complexity_definition() {
        let table = |n: usize| -> Result<f64> {
            Ok(match n {
                0 => 1.0,
                1 => 0.5,
                2 => 0.1,
                _ => 0.01,
            })
        };
        let r = search_complexity(table, 0.1, Criterion::Abs, 1 << 10).unwrap();
        assert_eq!(r.n, 2);
        assert!(!r.non_monotone);
        let r = search_complexity(table, 1.0, Criterion::Nor, 1 << 10).unwrap();
        assert_eq!(r.n, 0);
        let r = search_complexity(table, 2.0, Criterion::Abs, 1 << 10).unwrap();
        assert_eq!(r.n, 0);
    }

    #[test]
    fn complexity_bisects_to_minimum() {
        let r = search_complexity(|n| Ok(1.0 / (1.0 + n as f64)), 1.0 / 301.0, Criterion::Abs, 1 << 12).unwrap();
        assert_eq!(r.n, 300);
    }

    #[test]
    fn complexity_saturates() {
        let r = search_complexity(|_| Ok(1.0), 0.5, Criterion::Abs, 64);
        assert_eq!(r, Err(Error::Saturation { limit: 64 }));
    }

    #[test]
    fn complexity_flags_non_monotone() {
        let r = search_complexity(|n| Ok(if n == 2 { 0.9 } else { 1.0 / (1.0 + n as f64) }), 0.2, Criterion::Abs, 64)
            .unwrap();
        assert!(r.non_monotone);
    }

    #[test]
    fn grid_and_validation() {
        assert_eq!(dyadic_grid(8), vec![0, 1, 2, 4, 8]);
        let spec = ProblemSpec::Compact {
            omega: Interval::new(0.0, 1.0).unwrap(),
            k: 0.0,
            s: 1,
            space: Space::Hs,
            function: TestFunction::poly_bump_h(1, Interval::new(0.0, 1.0).unwrap()),
        };
        assert!(convergence_study(&spec, &[]).is_err());
        assert!(convergence_study(&spec, &[4, 2]).is_err());
        let rep = convergence_study(&spec, &[0]).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert!((rep.rows[0].measured_error - 1.0 / 6.0).abs() < 1e-13);
        assert_eq!(rep.rows[0].eval_count, 0);
    }

    #[test]
    fn non_member_rejected() {
        let spec = ProblemSpec::Compact {
            omega: Interval::new(0.0, 1.0).unwrap(),
            k: 0.0,
            s: 2,
            space: Space::Hs,
            function: TestFunction::poly_bump_h(1, Interval::new(0.0, 1.0).unwrap()),
        };
        assert!(matches!(convergence_study(&spec, &[0, 1]), Err(Error::Precondition(_))));
    }

    #[test]
    fn csv_layout() {
        let rep = synthetic(&[(1, 0.25), (2, 0.125)], 0.5);
        let mut buf = Vec::new();
        write_csv(&[rep], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "1,0.0,1,hs,f,0.25,0.5,1,");
        assert_eq!(lines.len(), 3);
    }
}
