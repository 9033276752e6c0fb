//! End-to-end studies through the harness.

use std::sync::Arc;

use oscint::compact::{initial_error_bound, worstcase_bound, BoundVariant, Interval};
use oscint::density::{gaussian_density, Space};
use oscint::harness::{
    convergence_study, dyadic_grid, empirical_complexity, fit_rate, Criterion, Evaluator, ProblemSpec,
};
use oscint::line::LineProblem;
use oscint::oracle::TestFunction;

fn iv(a: f64, b: f64) -> Interval {
    Interval::new(a, b).unwrap()
}

fn compact(omega: Interval, k: f64, s: usize, function: TestFunction) -> ProblemSpec {
    ProblemSpec::Compact { omega, k, s, space: Space::Hs, function }
}

#[test]
fn zero_budget_row() {
    let omega = iv(-1.0, 1.0);
    let spec = compact(omega, 3.0, 2, TestFunction::poly_bump_h(2, omega));
    let report = convergence_study(&spec, &[0]).unwrap();
    assert_eq!(report.rows.len(), 1);
    let eval = Evaluator::new(&spec, 0).unwrap();
    assert_eq!(report.rows[0].measured_error, eval.reference().norm());
    let bound = worstcase_bound(omega, 0, 2, 3.0, Space::Hs, BoundVariant::Safeguarded).unwrap();
    assert_eq!(report.rows[0].theoretical_bound, bound);
    assert!(bound >= initial_error_bound(omega, 2, 3.0, Space::Hs).unwrap());
    assert_eq!(report.bound_violations, 0);
}

// (x - a)^s (b - x)^s sits in a smaller class than its smoothness suggests:
// the equispaced sum sees only the boundary jumps of derivative s, and the
// measured error decays like n^-(s+1) for odd s and n^-(s+2) for even s.
#[test]
fn poly_bump_rates() {
    let omega = iv(0.0, 1.0);
    let spec = compact(omega, 0.0, 1, TestFunction::poly_bump_h(1, omega));
    let report = convergence_study(&spec, &dyadic_grid(4096)).unwrap();
    let rate = fit_rate(&report, 8).unwrap();
    assert!((rate + 2.0).abs() < 0.01, "{rate}");
    // x (1 - x) has the exact error 1 / (6 n^2)
    for row in report.rows.iter().filter(|r| r.n >= 2 && r.n <= 1024) {
        let exact = 1.0 / (6.0 * (row.n as f64).powi(2));
        assert!((row.measured_error - exact).abs() < 1e-13, "n = {}", row.n);
    }

    let omega = iv(-1.0, 1.0);
    let spec = compact(omega, 0.0, 2, TestFunction::poly_bump_h(2, omega));
    let grid: Vec<usize> = (3..=10).map(|p| 1 << p).collect();
    let report = convergence_study(&spec, &grid).unwrap();
    let rate = fit_rate(&report, 8).unwrap();
    assert!((rate + 4.0).abs() < 0.05, "{rate}");
    assert_eq!(report.bound_violations, 0);
}

#[test]
fn line_plateau_below_cell_threshold() {
    let rho = Arc::new(gaussian_density(1.0).unwrap());
    let problem = LineProblem::new(rho, 200.0, 2, Space::Cs).unwrap();
    let spec = ProblemSpec::Line { problem, function: TestFunction::constant() };
    let report = convergence_study(&spec, &[0, 16, 64, 256, 512, 1024, 2048]).unwrap();
    let plateau = report.rows[0].measured_error;
    for row in report.rows.iter().filter(|r| r.eval_count == 0) {
        assert_eq!(row.measured_error, plateau, "n = {}", row.n);
    }
    assert!(report.rows.iter().filter(|r| r.eval_count == 0).count() >= 4);
    assert_eq!(report.bound_violations, 0);
}

#[test]
fn normalized_complexity_trivial_when_eps_large() {
    let omega = iv(0.0, 1.0);
    let spec = compact(omega, 4.0, 1, TestFunction::poly_bump_h(1, omega));
    let r = empirical_complexity(&spec, 1.0, Criterion::Nor).unwrap();
    assert_eq!(r.n, 0);
    let r = empirical_complexity(&spec, 1e-6, Criterion::Abs).unwrap();
    assert!(r.n > 0 && r.probes.iter().any(|p| p.0 == r.n && p.1 <= 1e-6));
}

#[test]
fn line_matrix_sample_respects_bounds() {
    for sigma in [1.0, 2.0] {
        let rho = Arc::new(gaussian_density(sigma).unwrap());
        for (function, space) in [
            (TestFunction::runge(), Space::Hs),
            (TestFunction::gauss_sine(3.0), Space::Cs),
            (TestFunction::constant(), Space::Cs),
        ] {
            let problem = LineProblem::new(rho.clone(), 20.0, 2, space).unwrap();
            let spec = ProblemSpec::Line { problem, function };
            let report = convergence_study(&spec, &dyadic_grid(2048)).unwrap();
            assert_eq!(report.bound_violations, 0, "{:?}", report.descriptor);
        }
    }
}
