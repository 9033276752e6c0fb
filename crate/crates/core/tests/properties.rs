use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use oscint::compact::{safeguarded_rule, worstcase_bound, BoundVariant, Interval};
use oscint::density::{gaussian_density, Space};
use oscint::jet::Jet;
use oscint::line::{CompositeRule, LineProblem};
use oscint::partition::{bump, partition_residual};

fn jet_strategy(order: usize) -> impl Strategy<Value = Jet> {
    prop::collection::vec(-3.0..3.0f64, order + 1).prop_map(Jet::from_coeffs)
}

fn close(a: &Jet, b: &Jet, tol: f64) -> bool {
    a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

proptest! {
    #[test]
    fn jet_product_commutes(a in jet_strategy(4), b in jet_strategy(4)) {
        prop_assert!(close(&(&a * &b), &(&b * &a), 1e-14));
    }

    #[test]
    fn jet_product_associates(a in jet_strategy(3), b in jet_strategy(3), c in jet_strategy(3)) {
        prop_assert!(close(&(&(&a * &b) * &c), &(&a * &(&b * &c)), 1e-12));
    }

    #[test]
    fn jet_product_distributes(a in jet_strategy(3), b in jet_strategy(3), c in jet_strategy(3)) {
        prop_assert!(close(&(&a * &(&b + &c)), &(&(&a * &b) + &(&a * &c)), 1e-12));
    }

    #[test]
    fn reciprocal_inverts(a in jet_strategy(4)) {
        prop_assume!(a.value().abs() > 0.5);
        let one = a.mul_jet(&a.recip().unwrap());
        prop_assert!(close(&one, &Jet::constant(1.0, 4), 1e-10));
    }

    #[test]
    fn polynomial_derivatives(coeffs in prop::collection::vec(-1.0..1.0f64, 1..8), x in -2.0..2.0f64) {
        let order = 3;
        let t = Jet::variable(x, order);
        let jet = coeffs.iter().rev().fold(Jet::zero(order), |acc, &c| acc.mul_jet(&t).add_scalar(c));
        let d = jet.derivatives();
        for l in 0..=order {
            let exact: f64 = (l..coeffs.len())
                .map(|j| coeffs[j] * ((j - l + 1)..=j).map(|v| v as f64).product::<f64>() * x.powi((j - l) as i32))
                .sum();
            prop_assert!((d[l] - exact).abs() <= 1e-12 * exact.abs().max(1.0), "l = {}: {} vs {}", l, d[l], exact);
        }
    }

    #[test]
    fn partition_sums_to_one(x in -50.0..50.0f64) {
        prop_assert!(partition_residual(&[x]) <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&bump(x)));
    }

    #[test]
    fn compact_rule_within_budget(a in -5.0..5.0f64, len in 0.1..10.0f64, n in 0usize..2000, k in -300.0..300.0f64) {
        let omega = Interval::new(a, a + len).unwrap();
        let rule = safeguarded_rule(omega, n, k);
        prop_assert!(rule.len() <= n);
        prop_assert!(rule.nodes.iter().all(|x| *x > omega.a && *x < omega.b));
    }

    #[test]
    fn bound_decreases_in_n(n in 0usize..5000, s in 1usize..4, k in 0.0..100.0f64) {
        let omega = Interval::new(0.0, 1.0).unwrap();
        for space in [Space::Hs, Space::Cs] {
            let b0 = worstcase_bound(omega, n, s, k, space, BoundVariant::Safeguarded).unwrap();
            let b1 = worstcase_bound(omega, n + 1, s, k, space, BoundVariant::Safeguarded).unwrap();
            prop_assert!(b1 < b0);
        }
    }

    #[test]
    fn compact_rule_is_linear(n in 1usize..500, k in -50.0..50.0f64, alpha in -2.0..2.0f64) {
        let rule = safeguarded_rule(Interval::new(-1.0, 2.0).unwrap(), n, k);
        let f = |x: f64| x.cos();
        let g = |x: f64| x * x;
        let lhs = rule.apply(|x| alpha * f(x) + g(x)).unwrap();
        let rhs = rule.apply(f).unwrap() * alpha + rule.apply(g).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn composite_rule_within_budget(n in 0usize..4096, sigma in 0.5..3.0f64, s in 1usize..4, cs in any::<bool>()) {
        let space = if cs { Space::Cs } else { Space::Hs };
        let p = LineProblem::new(Arc::new(gaussian_density(sigma).unwrap()), 0.0, s, space).unwrap();
        let rule = CompositeRule::new(&p, n).unwrap();
        prop_assert!(rule.evaluation_count() <= n);
        prop_assert!(rule.plan.budget_sum() <= n);
    }

    #[test]
    fn composite_rule_is_linear(n in 0usize..2000, k in -30.0..30.0f64, alpha in -2.0..2.0f64) {
        let p = LineProblem::new(Arc::new(gaussian_density(1.0).unwrap()), k, 2, Space::Hs).unwrap();
        let rule = CompositeRule::new(&p, n).unwrap();
        let lhs = rule.apply(|x: f64| alpha * x.sin() + 1.0).unwrap();
        let rhs = rule.apply(|x: f64| x.sin()).unwrap() * alpha + rule.apply(|_| Complex64::new(1.0, 0.0)).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-13);
    }
}
