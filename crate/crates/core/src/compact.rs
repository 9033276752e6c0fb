//! Equispaced rules on a bounded interval and their error bounds.
//!
//! `A_n` samples `f(x) e^{-ikx}` on the absolute lattice `c_n Z` with
//! `c_n = |Omega| / n`, dropping lattice points on the endpoints (integrands
//! vanish there). The safeguarded rule returns zero whenever
//! `n < kbar |Omega| / pi`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::Space;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Domain(format!("invalid interval [{a}, {b}]")));
        }
        Ok(Self { a, b })
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }
}

/// `max(1, |k|)`.
pub fn kbar(k: f64) -> f64 {
    k.abs().max(1.0)
}

/// `sqrt(1 + sum_{l=1}^s k^{2l})`.
pub fn nu_s(k: f64, s: usize) -> f64 {
    let k2 = k * k;
    let mut term = 1.0;
    let mut sum = 1.0;
    for _ in 0..s {
        term *= k2;
        sum += term;
    }
    sum.sqrt()
}

/// Nodes and complex weights of `A_n` (or the zero rule).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub interval: Interval,
    pub k: f64,
    pub n_budget: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<Complex64>,
    pub is_zero_rule: bool,
}

/// Relative tolerance for treating a lattice point as an endpoint.
const ENDPOINT_TOL: f64 = 1e-12;

/// `A_n^Omega`: lattice `c_n Z` inside the open interval, weights `c_n e^{-ikx}`.
pub fn build_rule(omega: Interval, n: usize, k: f64) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::Domain("A_n needs n >= 1".into()));
    }
    let len = omega.len();
    let c = len / n as f64;
    let tol = ENDPOINT_TOL * len;
    let j_lo = (omega.a / c).floor() as i64;
    let j_hi = (omega.b / c).ceil() as i64;
    let nodes: Vec<f64> = (j_lo..=j_hi)
        .map(|j| j as f64 * c)
        .filter(|&x| x > omega.a + tol && x < omega.b - tol)
        .collect();
    debug_assert!(nodes.len() <= n);
    let weights = nodes
        .iter()
        .map(|&x| Complex64::from_polar(c, -k * x))
        .collect();
    Ok(QuadratureRule { interval: omega, k, n_budget: n, nodes, weights, is_zero_rule: false })
}

/// Zero rule for `n < kbar |Omega| / pi`, otherwise `A_n^Omega`.
pub fn safeguarded_rule(omega: Interval, n: usize, k: f64) -> QuadratureRule {
    if (n as f64) < kbar(k) * omega.len() / PI {
        QuadratureRule::zero(omega, n, k)
    } else {
        build_rule(omega, n, k).expect("n >= 1 above the safeguard threshold")
    }
}

impl QuadratureRule {
    pub fn zero(interval: Interval, n_budget: usize, k: f64) -> Self {
        Self { interval, k, n_budget, nodes: Vec::new(), weights: Vec::new(), is_zero_rule: true }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_j w_j f(x_j)`; fails on the first non-finite sample.
    pub fn apply<F, T>(&self, f: F) -> Result<Complex64>
    where
        F: Fn(f64) -> T,
        T: Into<Complex64>,
    {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&x, w) in self.nodes.iter().zip(&self.weights) {
            let v: Complex64 = f(x).into();
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::Evaluation { x });
            }
            acc += w * v;
        }
        Ok(acc)
    }
}

/// Free-function form of [`QuadratureRule::apply`].
pub fn apply_rule<F, T>(rule: &QuadratureRule, f: F) -> Result<Complex64>
where
    F: Fn(f64) -> T,
    T: Into<Complex64>,
{
    rule.apply(f)
}

fn check_s(s: usize) -> Result<()> {
    if s == 0 {
        Err(Error::Domain("smoothness s must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Upper bound on the initial error: `|Omega|^{1/2} / nu_s(k)` on `H^s_0`,
/// `|Omega| / kbar^s` on `C^s_0`.
pub fn initial_error_bound(omega: Interval, s: usize, k: f64, space: Space) -> Result<f64> {
    check_s(s)?;
    Ok(match space {
        Space::Hs => omega.len().sqrt() / nu_s(k, s),
        Space::Cs => omega.len() / kbar(k).powi(s as i32),
    })
}

/// Which error bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundVariant {
    /// Valid for every `n >= 0` for the safeguarded rule.
    Safeguarded,
    /// `2 (2 pi)^{-s} |Omega|^{1/2} / (n/|Omega| - |k|/2pi)^s`, valid for
    /// `n >= (1 + |k|) |Omega| / 2pi`.
    Sharp,
}

/// Per-unit-norm worst-case error bound for the safeguarded rule.
///
/// `Safeguarded`: `2^{1-s} |Omega|^{1/2} / (n/|Omega| + kbar/2pi)^s` on `H^s_0`
/// and `2^{1-s/2} |Omega| / (n/|Omega| + kbar/2pi)^s` on `C^s_0`.
pub fn worstcase_bound(
    omega: Interval,
    n: usize,
    s: usize,
    k: f64,
    space: Space,
    variant: BoundVariant,
) -> Result<f64> {
    check_s(s)?;
    let len = omega.len();
    let si = s as i32;
    match variant {
        BoundVariant::Safeguarded => {
            let denom = (n as f64 / len + kbar(k) / (2.0 * PI)).powi(si);
            Ok(match space {
                Space::Hs => 2.0 / 2f64.powi(si) * len.sqrt() / denom,
                Space::Cs => 2.0 / 2f64.powf(s as f64 / 2.0) * len / denom,
            })
        }
        BoundVariant::Sharp => {
            let threshold = (1.0 + k.abs()) * len / (2.0 * PI);
            if (n as f64) < threshold {
                return Err(Error::Precondition(format!(
                    "sharp bound needs n >= {threshold:.3}, got n = {n}"
                )));
            }
            let base = 2.0 / (2.0 * PI).powi(si) * len.sqrt()
                / (n as f64 / len - k.abs() / (2.0 * PI)).powi(si);
            // ||f||_{H^s} <= sqrt((s + 1) |Omega|) ||f||_{C^s}
            Ok(match space {
                Space::Hs => base,
                Space::Cs => base * ((s as f64 + 1.0) * len).sqrt(),
            })
        }
    }
}

/// The `alpha`-family bound valid for `n >= (1+alpha)/(1-alpha) kbar |Omega| / 2pi`:
/// `2 (2 pi alpha)^{-s} |Omega|^{1/2} / (n/|Omega| + kbar/2pi)^s` on `H^s_0`,
/// `2 (sqrt(2) pi alpha)^{-s} |Omega| / (...)^s` on `C^s_0`.
pub fn alpha_bound(omega: Interval, n: usize, s: usize, k: f64, space: Space, alpha: f64) -> Result<f64> {
    check_s(s)?;
    if !(1.0 / 3.0..1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha must lie in [1/3, 1), got {alpha}")));
    }
    let len = omega.len();
    let threshold = (1.0 + alpha) / (1.0 - alpha) * kbar(k) * len / (2.0 * PI);
    if (n as f64) < threshold {
        return Err(Error::Precondition(format!(
            "alpha bound needs n >= {threshold:.3}, got n = {n}"
        )));
    }
    let si = s as i32;
    let denom = (n as f64 / len + kbar(k) / (2.0 * PI)).powi(si);
    Ok(match space {
        Space::Hs => 2.0 / (2.0 * PI * alpha).powi(si) * len.sqrt() / denom,
        Space::Cs => 2.0 / (2f64.sqrt() * PI * alpha).powi(si) * len / denom,
    })
}
