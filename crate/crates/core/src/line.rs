//! Composite rule on the real line.
//!
//! The density is split as `rho = sum_m g_m rho`; cell `m` gets the node budget
//! `n_m = floor(p_m n)` and runs the safeguarded equispaced rule on
//! `Omega_m = [m - 1, m + 1]` applied to `f g_m rho`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::compact::{kbar, safeguarded_rule, Interval, QuadratureRule};
use crate::density::{allocation_weights, CellPlan, Density, Space};
use crate::error::{Error, Result};
use crate::partition::bump;

pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LineProblem {
    pub density: Arc<dyn Density>,
    pub k: f64,
    pub s: usize,
    pub space: Space,
    pub tail_tol: f64,
}

impl LineProblem {
    pub fn new(density: Arc<dyn Density>, k: f64, s: usize, space: Space) -> Result<Self> {
        if s == 0 {
            return Err(Error::Domain("smoothness s must be at least 1".into()));
        }
        if !k.is_finite() {
            return Err(Error::Domain(format!("frequency must be finite, got {k}")));
        }
        Ok(Self { density, k, s, space, tail_tol: DEFAULT_TAIL_TOL })
    }

    pub fn with_tail_tol(mut self, tail_tol: f64) -> Self {
        self.tail_tol = tail_tol;
        self
    }

    pub fn plan(&self, n: usize) -> Result<CellPlan> {
        allocation_weights(self.density.as_ref(), self.s, self.space, n, self.tail_tol)
    }
}

/// The planned composite rule `A_{n,P}`.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    pub problem: LineProblem,
    pub plan: CellPlan,
    pub cells: Vec<(i64, QuadratureRule)>,
}

impl CompositeRule {
    pub fn new(problem: &LineProblem, n: usize) -> Result<Self> {
        let plan = problem.plan(n)?;
        Ok(Self::from_plan(problem, plan))
    }

    /// Builds the per-cell rules from an existing plan (e.g. after
    /// [`CellPlan::with_budget`]).
    pub fn from_plan(problem: &LineProblem, plan: CellPlan) -> Self {
        let cells = plan
            .cells
            .iter()
            .map(|c| {
                let omega = Interval { a: c.m as f64 - 1.0, b: c.m as f64 + 1.0 };
                (c.m, safeguarded_rule(omega, c.n_m, problem.k))
            })
            .collect();
        Self { problem: problem.clone(), plan, cells }
    }

    pub fn evaluation_count(&self) -> usize {
        self.cells.iter().map(|(_, r)| r.len()).sum()
    }

    /// `sum_m A_{n_m}(f g_m rho)`; cells run in parallel, summed in cell order.
    pub fn apply<F, T>(&self, f: F) -> Result<Complex64>
    where
        F: Fn(f64) -> T + Sync,
        T: Into<Complex64>,
    {
        let rho = self.problem.density.as_ref();
        let parts: Vec<Result<Complex64>> = self
            .cells
            .par_iter()
            .map(|(m, rule)| {
                let shift = *m as f64;
                rule.apply(|x| f(x).into() * (bump(x - shift) * rho.value(x)))
            })
            .collect();
        parts.into_iter().try_fold(Complex64::new(0.0, 0.0), |acc, p| Ok(acc + p?))
    }

    pub fn error_bound(&self) -> f64 {
        line_bound_from_sum(self.problem.space, self.problem.s, self.problem.k, self.plan.n, self.plan.norm_sum)
    }
}

fn line_bound_from_sum(space: Space, s: usize, k: f64, n: usize, norm_sum: f64) -> f64 {
    let si = s as i32;
    let denom = (n as f64 + kbar(k)).powi(si);
    let two_pi_s = (2.0 * PI).powi(si);
    match space {
        Space::Hs => 4.0 * two_pi_s * norm_sum.powf(s as f64 + 0.5) / denom,
        Space::Cs => 2f64.powf(1.5) * two_pi_s * norm_sum.powi(si + 1) / denom,
    }
}

/// `A_{n,P}(f)` for the given problem.
pub fn integrate_line<F, T>(problem: &LineProblem, f: F, n: usize) -> Result<Complex64>
where
    F: Fn(f64) -> T + Sync,
    T: Into<Complex64>,
{
    CompositeRule::new(problem, n)?.apply(f)
}

/// Per-unit-norm error bound: `4 (2pi)^s rho_{C^s}^{s+1/2} / (n + kbar)^s` on
/// `H^s(R)`, `2^{3/2} (2pi)^s rho_{H^s}^{s+1} / (n + kbar)^s` on `C^s(R)`.
pub fn line_error_bound(problem: &LineProblem, n: usize) -> Result<f64> {
    let plan = problem.plan(n)?;
    Ok(line_bound_from_sum(problem.space, problem.s, problem.k, n, plan.norm_sum))
}

/// Exact number of integrand evaluations `integrate_line` performs.
pub fn evaluation_count(problem: &LineProblem, n: usize) -> Result<usize> {
    Ok(CompositeRule::new(problem, n)?.evaluation_count())
}
