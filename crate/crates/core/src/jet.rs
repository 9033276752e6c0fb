//! Truncated Taylor arithmetic.
//!
//! A [`Jet`] of order `s` stores the Taylor coefficients `f^(l)(x0) / l!` for
//! `l = 0..=s`. Arithmetic on jets propagates all derivatives up to order `s`
//! through compositions of elementary functions, which is how every
//! derivative in this crate (bump, densities, test functions, norms) is
//! obtained.

use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("jet domain error: {0}")]
    Domain(String),

    #[error("jet overflow: non-finite Taylor coefficient")]
    Overflow,
}

/// Truncated Taylor expansion of a real function at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    coeffs: Vec<f64>,
}

impl Jet {
    /// The identity map expanded at `x0`: coefficients `(x0, 1, 0, ..., 0)`.
    pub fn variable(x0: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = x0;
        if order >= 1 {
            coeffs[1] = 1.0;
        }
        Self { coeffs }
    }

    pub fn constant(c: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = c;
        Self { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(0.0, order)
    }

    /// Builds a jet from raw Taylor coefficients.
    ///
    /// Panics if `coeffs` is empty.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least one coefficient");
        Self { coeffs }
    }

    /// Builds a jet from derivative values `(f, f', ..., f^(s))`.
    pub fn from_derivatives(derivs: &[f64]) -> Self {
        let mut fact = 1.0;
        let coeffs = derivs
            .iter()
            .enumerate()
            .map(|(l, d)| {
                if l > 0 {
                    fact *= l as f64;
                }
                d / fact
            })
            .collect();
        Self::from_coeffs(coeffs)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// `f^(l)(x0)`, i.e. `coeffs[l] * l!`.
    pub fn derivative(&self, l: usize) -> f64 {
        let fact: f64 = (1..=l).map(|i| i as f64).product();
        self.coeffs[l] * fact
    }

    /// All derivatives `(f, f', ..., f^(order))`.
    pub fn derivatives(&self) -> Vec<f64> {
        let mut fact = 1.0;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(l, c)| {
                if l > 0 {
                    fact *= l as f64;
                }
                c * fact
            })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    fn check_order(&self, other: &Jet) {
        assert_eq!(
            self.order(),
            other.order(),
            "jet order mismatch: {} vs {}",
            self.order(),
            other.order()
        );
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn add_scalar(&self, c: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    /// Cauchy product truncated to the common order (Leibniz rule).
    pub fn mul_jet(&self, other: &Jet) -> Jet {
        self.check_order(other);
        let n = self.coeffs.len();
        let mut coeffs = vec![0.0; n];
        for (i, ai) in self.coeffs.iter().enumerate() {
            if *ai == 0.0 {
                continue;
            }
            for (j, bj) in other.coeffs[..n - i].iter().enumerate() {
                coeffs[i + j] += ai * bj;
            }
        }
        Jet { coeffs }
    }

    pub fn powi(&self, p: u32) -> Jet {
        let mut out = Jet::constant(1.0, self.order());
        for _ in 0..p {
            out = out.mul_jet(self);
        }
        out
    }

    /// `exp` of the jet via `e' = e a'`.
    pub fn exp(&self) -> Result<Jet, JetError> {
        let a = &self.coeffs;
        let n = a.len();
        let mut e = vec![0.0; n];
        e[0] = a[0].exp();
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        let out = Jet { coeffs: e };
        if out.is_finite() {
            Ok(out)
        } else {
            Err(JetError::Overflow)
        }
    }

    /// `1 / a` via `a r = 1`.
    pub fn recip(&self) -> Result<Jet, JetError> {
        let a = &self.coeffs;
        if a[0] == 0.0 {
            return Err(JetError::Domain(
                "reciprocal of a jet with zero constant term".into(),
            ));
        }
        let n = a.len();
        let inv = 1.0 / a[0];
        let mut r = vec![0.0; n];
        r[0] = inv;
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| a[j] * r[k - j]).sum();
            r[k] = -inv * s;
        }
        let out = Jet { coeffs: r };
        if out.is_finite() {
            Ok(out)
        } else {
            Err(JetError::Overflow)
        }
    }

    pub fn div_jet(&self, other: &Jet) -> Result<Jet, JetError> {
        Ok(self.mul_jet(&other.recip()?))
    }

    /// `(sin a, cos a)` computed together.
    pub fn sin_cos(&self) -> (Jet, Jet) {
        let a = &self.coeffs;
        let n = a.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        (s[0], c[0]) = a[0].sin_cos();
        for k in 1..n {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=k {
                let w = j as f64 * a[j];
                ss += w * c[k - j];
                cc -= w * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = cc / k as f64;
        }
        (Jet { coeffs: s }, Jet { coeffs: c })
    }

    pub fn sin(&self) -> Jet {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Jet {
        self.sin_cos().1
    }
}

impl Add<&Jet> for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.check_order(rhs);
        Jet {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub<&Jet> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.check_order(rhs);
        Jet {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<&Jet> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_jet(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// A real function that can be expanded into a jet at any point.
pub trait Smooth: Send + Sync {
    fn jet(&self, x: f64, order: usize) -> Result<Jet, JetError>;

    fn value(&self, x: f64) -> f64 {
        self.jet(x, 0).map(|j| j.value()).unwrap_or(f64::NAN)
    }
}

/// Adapts a closure on jets into a [`Smooth`] function.
pub struct JetMap<F>(pub F);

impl<F> Smooth for JetMap<F>
where
    F: Fn(&Jet) -> Result<Jet, JetError> + Send + Sync,
{
    fn jet(&self, x: f64, order: usize) -> Result<Jet, JetError> {
        (self.0)(&Jet::variable(x, order))
    }
}

impl<T: Smooth + ?Sized> Smooth for &T {
    fn jet(&self, x: f64, order: usize) -> Result<Jet, JetError> {
        (**self).jet(x, order)
    }

    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }
}

impl<T: Smooth + ?Sized> Smooth for std::sync::Arc<T> {
    fn jet(&self, x: f64, order: usize) -> Result<Jet, JetError> {
        (**self).jet(x, order)
    }

    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }
}

/// `(f(x), f'(x), ..., f^(order)(x))`.
pub fn derivatives<F: Smooth + ?Sized>(f: &F, x: f64, order: usize) -> Result<Vec<f64>, JetError> {
    Ok(f.jet(x, order)?.derivatives())
}
