//! Smooth partition of unity on the real line.
//!
//! The bump is built from the smooth step
//! `phi(x) = h(x) / (h(x) + h(1 - x))` with `h(t) = exp(-1/t)` for `t > 0`
//! and `h(t) = 0` otherwise, as `g(x) = phi(x + 1) - phi(x)`. It is `C^inf`,
//! nonnegative, supported on `[-1, 1]`, and its integer shifts
//! `g_m(x) = g(x - m)` sum to one everywhere.

use std::sync::{OnceLock, RwLock};

use crate::jet::{Jet, JetError, Smooth};

fn h(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Taylor jet of `h` at `t`, flushed to zero where `exp(-1/t)` underflows.
fn h_jet(t: f64, order: usize) -> Jet {
    if t <= 0.0 || h(t) == 0.0 {
        return Jet::zero(order);
    }
    let var = Jet::variable(t, order);
    match var.recip().and_then(|r| (-r).exp()) {
        Ok(j) => j,
        // derivatives of exp(-1/t) are exp(-1/t) * poly(1/t); an overflow in the
        // intermediate powers only happens once the product itself is far below
        // the smallest normal number
        Err(_) => Jet::zero(order),
    }
}

/// Smooth step: 0 for `x <= 0`, 1 for `x >= 1`, strictly increasing between.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = h(x);
        a / (a + h(1.0 - x))
    }
}

/// Taylor jet of the smooth step at `x`.
pub fn smooth_step_jet(x: f64, order: usize) -> Jet {
    if x <= 0.0 {
        return Jet::zero(order);
    }
    if x >= 1.0 {
        return Jet::constant(1.0, order);
    }
    let left = h_jet(x, order);
    let right = h_jet(1.0 - x, order);
    // h(1 - x) expanded in x: odd Taylor coefficients flip sign
    let right = Jet::from_coeffs(
        right
            .coeffs()
            .iter()
            .enumerate()
            .map(|(l, c)| if l % 2 == 1 { -c } else { *c })
            .collect(),
    );
    let denom = &left + &right;
    // h(x) + h(1 - x) >= 2 exp(-2) on (0, 1)
    let inv = denom.recip().expect("smooth-step denominator is bounded away from zero");
    left.mul_jet(&inv)
}

/// The bump `g(x) = phi(x + 1) - phi(x)`; zero outside `(-1, 1)`.
pub fn bump(x: f64) -> f64 {
    if x <= -1.0 || x >= 1.0 {
        0.0
    } else if x <= 0.0 {
        smooth_step(x + 1.0)
    } else {
        1.0 - smooth_step(x)
    }
}

/// Taylor jet of the bump at `x`.
pub fn bump_taylor(x: f64, order: usize) -> Jet {
    if x <= -1.0 || x >= 1.0 {
        Jet::zero(order)
    } else if x <= 0.0 {
        smooth_step_jet(x + 1.0, order)
    } else {
        -smooth_step_jet(x, order).add_scalar(-1.0)
    }
}

/// `(g(x), g'(x), ..., g^(order)(x))`.
pub fn bump_jet(x: f64, order: usize) -> Vec<f64> {
    bump_taylor(x, order).derivatives()
}

/// `max |sum_m g(x - m) - 1|` over the given points.
pub fn partition_residual(points: &[f64]) -> f64 {
    points
        .iter()
        .map(|&x| {
            let lo = (x - 1.0).floor() as i64;
            let hi = (x + 1.0).ceil() as i64;
            let sum: f64 = (lo..=hi).map(|m| bump(x - m as f64)).sum();
            (sum - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// The bump as a [`Smooth`] function, optionally shifted to `g_m`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BumpFunction {
    pub shift: f64,
}

impl BumpFunction {
    pub fn shifted(m: i64) -> Self {
        Self { shift: m as f64 }
    }
}

impl Smooth for BumpFunction {
    fn jet(&self, x: f64, order: usize) -> Result<Jet, JetError> {
        Ok(bump_taylor(x - self.shift, order))
    }

    fn value(&self, x: f64) -> f64 {
        bump(x - self.shift)
    }
}

/// Grid estimate of `||g||_{C^s(R)}`, cached per order.
pub fn bump_cs_norm(s: usize) -> f64 {
    static CACHE: OnceLock<RwLock<Vec<Option<f64>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(Vec::new()));
    if let Some(Some(v)) = cache.read().unwrap().get(s) {
        return *v;
    }
    const GRID: usize = 8193;
    let mut sup = 0.0f64;
    for i in 0..GRID {
        let x = -1.0 + 2.0 * i as f64 / (GRID - 1) as f64;
        for d in bump_jet(x, s) {
            sup = sup.max(d.abs());
        }
    }
    let mut w = cache.write().unwrap();
    if w.len() <= s {
        w.resize(s + 1, None);
    }
    w[s] = Some(sup);
    sup
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_values() {
        assert_eq!(smooth_step(0.0), 0.0);
        assert_eq!(smooth_step(1.0), 1.0);
        assert_eq!(smooth_step(0.5), 0.5);
        assert_eq!(smooth_step(-3.0), 0.0);
        assert_eq!(smooth_step(7.0), 1.0);
        // strictly increasing until the step saturates in double precision
        let xs: Vec<f64> = (5..96).map(|i| i as f64 / 100.0).collect();
        assert!(xs.windows(2).all(|w| smooth_step(w[0]) < smooth_step(w[1])));
        assert!((1..100).all(|i| smooth_step(i as f64 / 100.0) <= smooth_step((i + 1) as f64 / 100.0)));
    }

    #[test]
    fn bump_values() {
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(-1.0), 0.0);
        assert_eq!(bump(0.5), 0.5);
        assert!((bump(0.3) + bump(-0.7) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bump_jets() {
        assert_eq!(bump_jet(2.0, 3), vec![0.0; 4]);
        assert_eq!(bump_jet(-1.0, 2), vec![0.0; 3]);
        let d = bump_jet(0.0, 1);
        assert_eq!(d, vec![1.0, 0.0]);
        // finite-difference check of g'(0) = 0
        let fd = (bump(1e-4) - bump(-1e-4)) / 2e-4;
        assert!(fd.abs() < 1e-10);
        assert_eq!(bump_jet(0.5, 0), vec![0.5]);
    }

    #[test]
    fn jets_match_finite_differences() {
        // five-point stencils
        let h = 1e-3;
        for &x in &[-0.8, -0.55, -0.3, -0.1, 0.2, 0.45, 0.7, 0.9] {
            let d = bump_jet(x, 2);
            let (m2, m1, p1, p2) = (bump(x - 2.0 * h), bump(x - h), bump(x + h), bump(x + 2.0 * h));
            let fd1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
            let fd2 = (-m2 + 16.0 * m1 - 30.0 * bump(x) + 16.0 * p1 - p2) / (12.0 * h * h);
            assert!((d[1] - fd1).abs() <= 1e-6 * d[1].abs().max(1e-3), "x = {x}");
            assert!((d[2] - fd2).abs() <= 1e-4 * d[2].abs().max(1e-1), "x = {x}");
        }
    }

    #[test]
    fn residual_examples() {
        assert!(partition_residual(&[0.5]) <= 1e-12);
        assert!(partition_residual(&[-3.2, 0.0, 7.9]) <= 1e-12);
        assert_eq!(partition_residual(&[]), 0.0);
    }

    #[test]
    fn near_support_edges_are_finite() {
        for &x in &[-1.0 + 1e-300, -1.0 + 1e-9, -1.0 + 1e-3, 1.0 - 1e-12, 1e-300] {
            let d = bump_jet(x, 6);
            assert!(d.iter().all(|v| v.is_finite()), "x = {x}: {d:?}");
        }
    }

    #[test]
    fn shifted_bump() {
        let g3 = BumpFunction::shifted(3);
        assert_eq!(g3.value(3.0), 1.0);
        assert_eq!(g3.value(2.5), bump(-0.5));
        assert_eq!(g3.jet(4.0, 2).unwrap().coeffs(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn cs_norm_grows_with_order() {
        assert!((bump_cs_norm(0) - 1.0).abs() < 1e-15);
        assert!(bump_cs_norm(1) >= 1.0);
        assert!(bump_cs_norm(3) >= bump_cs_norm(2));
    }
}
