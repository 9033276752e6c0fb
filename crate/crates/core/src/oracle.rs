//! Ground truth: reference integrals, Poisson-summation residuals, oracle
//! norms and the library of test functions.
//!
//! Reference integrals use composite Gauss–Legendre panels short enough to
//! resolve `e^{-ikx}` (at most a quarter period over `2`), refined by panel
//! halving until two consecutive estimates agree.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::RwLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::compact::{kbar, Interval};
use crate::density::{Density, Space};
use crate::error::{Error, Result};
use crate::gauss::GaussLegendre;
use crate::jet::{Jet, JetError, Smooth};
use crate::partition::{bump, bump_taylor};

const MAX_PANELS: usize = 1 << 22;
const MIN_TOL: f64 = 1e-13;

/// Reference value with its a-posteriori error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub value: Complex64,
    pub error_estimate: f64,
    pub panels: usize,
}

fn panel_sum<F: Fn(f64) -> f64>(f: &F, k: f64, a: f64, b: f64, panels: usize) -> (Complex64, f64) {
    let rule = GaussLegendre::g24();
    let h = (b - a) / panels as f64;
    let mut total = Complex64::new(0.0, 0.0);
    let mut mag = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let hi = if p + 1 == panels { b } else { lo + h };
        let mut part = Complex64::new(0.0, 0.0);
        rule.for_each_on(lo, hi, |x, w| {
            let v = w * f(x);
            mag += v.abs();
            part += Complex64::from_polar(v, -k * x);
        });
        total += part;
    }
    (total, mag)
}

fn refine<F: Fn(f64) -> f64>(f: &F, k: f64, a: f64, b: f64, tol: f64) -> Result<Reference> {
    let len = b - a;
    let max_panel = (len / 8.0).min(PI / (4.0 * kbar(k)));
    let mut panels = (len / max_panel).ceil().max(1.0) as usize;
    let (mut coarse, _) = panel_sum(f, k, a, b, panels);
    loop {
        let (fine, mag) = panel_sum(f, k, a, b, 2 * panels);
        if !(fine.re.is_finite() && fine.im.is_finite()) {
            return Err(Error::Evaluation { x: f64::NAN });
        }
        let diff = (fine - coarse).norm();
        // summation roundoff is a floor no refinement can beat
        let floor = 16.0 * f64::EPSILON * mag;
        if diff <= tol.max(floor) {
            return Ok(Reference { value: fine, error_estimate: diff, panels: 2 * panels });
        }
        panels *= 2;
        if panels > MAX_PANELS {
            return Err(Error::Accuracy { requested: tol, achieved: diff });
        }
        coarse = fine;
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol >= MIN_TOL && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("oracle tolerance must be >= {MIN_TOL:e}, got {tol}")))
    }
}

/// `int_Omega f(x) e^{-ikx} dx` with breakpoints (kinks of `f`) honoured.
pub fn reference_integral_pieces<F>(f: F, k: f64, omega: Interval, breakpoints: &[f64], tol: f64) -> Result<Reference>
where
    F: Fn(f64) -> f64,
{
    check_tol(tol)?;
    let mut cuts: Vec<f64> = vec![omega.a, omega.b];
    cuts.extend(breakpoints.iter().copied().filter(|x| *x > omega.a && *x < omega.b));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let pieces = cuts.len() - 1;
    let mut value = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut panels = 0;
    for w in cuts.windows(2) {
        let r = refine(&f, k, w[0], w[1], tol / pieces as f64)?;
        value += r.value;
        err += r.error_estimate;
        panels += r.panels;
    }
    Ok(Reference { value, error_estimate: err, panels })
}

/// `I_k(f) = int_Omega f(x) e^{-ikx} dx`.
pub fn reference_integral<F>(f: F, k: f64, omega: Interval, tol: f64) -> Result<Complex64>
where
    F: Fn(f64) -> f64,
{
    Ok(reference_integral_pieces(f, k, omega, &[], tol)?.value)
}

/// Half-width of the window outside which the weighted tail is below `tol / 2`
/// (assuming `|f(x)| <= 1 + x^2` there).
pub fn certified_window(density: &dyn Density, tol: f64) -> Result<i64> {
    for w in 1..100_000i64 {
        match density.tail_mass(w as f64) {
            Some(t) if t <= 0.5 * tol => return Ok(w),
            Some(_) => continue,
            None => break,
        }
    }
    Err(Error::Configuration(format!("{} has no certified tail", density.label())))
}

/// `I_k^rho(f) = int_R f(x) e^{-ikx} rho(x) dx` over unit sub-intervals of the
/// certified window; the tail majorant is folded into the error estimate.
pub fn reference_integral_line_pieces<F>(
    f: F,
    density: &dyn Density,
    k: f64,
    tol: f64,
    breakpoints: &[f64],
) -> Result<Reference>
where
    F: Fn(f64) -> f64,
{
    check_tol(tol)?;
    let w = certified_window(density, tol)?;
    let tail = density.tail_mass(w as f64).unwrap_or(f64::INFINITY);
    let mut value = Complex64::new(0.0, 0.0);
    let mut err = tail;
    let mut panels = 0;
    let per = 0.5 * tol / (2 * w) as f64;
    let g = |x: f64| f(x) * density.value(x);
    for j in -w..w {
        let iv = Interval { a: j as f64, b: j as f64 + 1.0 };
        let r = reference_integral_pieces(g, k, iv, breakpoints, per.max(MIN_TOL))?;
        value += r.value;
        err += r.error_estimate;
        panels += r.panels;
    }
    Ok(Reference { value, error_estimate: err, panels })
}

pub fn reference_integral_line<F>(f: F, density: &dyn Density, k: f64, tol: f64) -> Result<Complex64>
where
    F: Fn(f64) -> f64,
{
    Ok(reference_integral_line_pieces(f, density, k, tol, &[])?.value)
}

/// Both sides of `c sum_{x in cZ} f(x) e^{-ikx} = sum_{z in Z} Ff(z/c + k/2pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonCheck {
    pub lattice_sum: Complex64,
    pub transform_sum: Complex64,
    pub residual: f64,
}

pub fn poisson_check<F, G, T, U>(f: F, fourier_f: G, c: f64, k: f64, trunc: usize) -> Result<PoissonCheck>
where
    F: Fn(f64) -> T,
    G: Fn(f64) -> U,
    T: Into<Complex64>,
    U: Into<Complex64>,
{
    if c == 0.0 || !c.is_finite() {
        return Err(Error::Domain(format!("lattice spacing must be nonzero, got {c}")));
    }
    let t = trunc as i64;
    let lattice_sum = (-t..=t)
        .map(|j| {
            let x = c * j as f64;
            f(x).into() * Complex64::from_polar(c, -k * x)
        })
        .sum::<Complex64>();
    let transform_sum = (-t..=t)
        .map(|z| fourier_f(z as f64 / c + k / (2.0 * PI)).into())
        .sum::<Complex64>();
    Ok(PoissonCheck { lattice_sum, transform_sum, residual: (lattice_sum - transform_sum).norm() })
}

/// `|LHS - RHS|` of the Poisson summation identity, both truncated at `trunc`.
pub fn poisson_residual<F, G, T, U>(f: F, fourier_f: G, c: f64, k: f64, trunc: usize) -> f64
where
    F: Fn(f64) -> T,
    G: Fn(f64) -> U,
    T: Into<Complex64>,
    U: Into<Complex64>,
{
    poisson_check(f, fourier_f, c, k, trunc).map(|p| p.residual).unwrap_or(f64::NAN)
}

/// Gaussian family `e^{-pi x^2 / a^2}` and its transform `a e^{-pi a^2 z^2}`.
pub fn gaussian_pair(a: f64) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
    (
        move |x: f64| (-PI * x * x / (a * a)).exp(),
        move |z: f64| a * (-PI * a * a * z * z).exp(),
    )
}

fn sobolev_sum(f: &dyn Smooth, omega: Interval, s: usize, panels: usize) -> std::result::Result<f64, JetError> {
    let mut failure = None;
    let v = GaussLegendre::g32().composite(omega.a, omega.b, panels, |x| match f.jet(x, s) {
        Ok(j) => j.derivatives().iter().map(|d| d * d).sum(),
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `||f||_{H^s(Omega)}` by panel quadrature, refined until two resolutions
/// agree to `1e-9` relative.
pub fn norm_hs_oracle(f: &dyn Smooth, omega: Interval, s: usize) -> Result<f64> {
    Ok(sobolev_square(f, omega, s)?.sqrt())
}

/// [`norm_hs_oracle`] with the window split at `breakpoints`, where
/// derivatives of `f` up to order `s` may jump.
pub fn norm_hs_oracle_pieces(f: &dyn Smooth, omega: Interval, s: usize, breakpoints: &[f64]) -> Result<f64> {
    let mut cuts: Vec<f64> = vec![omega.a, omega.b];
    cuts.extend(breakpoints.iter().copied().filter(|x| *x > omega.a && *x < omega.b));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += sobolev_square(f, Interval { a: w[0], b: w[1] }, s)?;
    }
    Ok(total.sqrt())
}

fn sobolev_square(f: &dyn Smooth, omega: Interval, s: usize) -> Result<f64> {
    let mut panels = 16;
    let mut coarse = sobolev_sum(f, omega, s, panels)?;
    loop {
        panels *= 2;
        let fine = sobolev_sum(f, omega, s, panels)?;
        if (fine - coarse).abs() <= 1e-9 * fine.abs() || fine == 0.0 {
            return Ok(fine);
        }
        if panels >= 1 << 14 {
            return Err(Error::Accuracy { requested: 1e-9, achieved: (fine - coarse).abs() / fine });
        }
        coarse = fine;
    }
}

/// Grid points per unit length for sup norms.
pub const CS_DENSITY: f64 = 8192.0;

/// `||f||_{C^s(Omega)}` as a max over jets on a uniform grid.
pub fn norm_cs_oracle(f: &dyn Smooth, omega: Interval, s: usize) -> Result<f64> {
    let intervals = (CS_DENSITY * omega.len()).ceil().max(1.0) as usize;
    let mut sup = 0.0f64;
    for i in 0..=intervals {
        let x = omega.a + omega.len() * i as f64 / intervals as f64;
        for d in f.jet(x, s)?.derivatives() {
            sup = sup.max(d.abs());
        }
    }
    Ok(sup)
}

pub fn norm_oracle(f: &dyn Smooth, omega: Interval, s: usize, space: Space) -> Result<f64> {
    match space {
        Space::Hs => norm_hs_oracle(f, omega, s),
        Space::Cs => norm_cs_oracle(f, omega, s),
    }
}

/// Function classes a test function can belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Membership {
    Hs0,
    Cs0,
    HsLine,
    CsLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TestKind {
    /// `(x - a)^p (b - x)^p` on `[a, b]`, zero outside
    PolyBump { power: u32, omega: Interval },
    /// partition bump mapped onto `[a, b]`
    ScaledBump { omega: Interval },
    /// `sin(freq x) e^{-x^2/4}`
    GaussSine { freq: f64 },
    Constant,
    /// `1 / (1 + x^2)`
    Runge,
}

/// Library function with jet access and class membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub label: String,
    pub kind: TestKind,
}

/// Parameters for [`testfn`]; unused fields are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FnParams {
    pub s: usize,
    pub omega: Interval,
    pub freq: f64,
}

impl Default for FnParams {
    fn default() -> Self {
        Self { s: 1, omega: Interval { a: 0.0, b: 1.0 }, freq: 3.0 }
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

/// Looks up a library function by label.
///
/// Labels: `poly_bump_h`, `poly_bump_c`, `scaled_bump`, `gauss_sine`,
/// `constant`, `runge`.
pub fn testfn(label: &str, params: FnParams) -> Result<TestFunction> {
    let FnParams { s, omega, freq } = params;
    let om = format!("{}:{}", fmt_num(omega.a), fmt_num(omega.b));
    let (label, kind) = match label {
        "poly_bump_h" => (format!("poly_bump_h({s};{om})"), TestKind::PolyBump { power: s as u32, omega }),
        "poly_bump_c" => (format!("poly_bump_c({s};{om})"), TestKind::PolyBump { power: s as u32 + 1, omega }),
        "scaled_bump" => (format!("scaled_bump({om})"), TestKind::ScaledBump { omega }),
        "gauss_sine" => (format!("gauss_sine({})", fmt_num(freq)), TestKind::GaussSine { freq }),
        "constant" => ("constant".to_string(), TestKind::Constant),
        "runge" => ("runge".to_string(), TestKind::Runge),
        other => return Err(Error::UnknownFunction(other.to_string())),
    };
    Ok(TestFunction { label, kind })
}

pub const LIBRARY: [&str; 6] = ["poly_bump_h", "poly_bump_c", "scaled_bump", "gauss_sine", "constant", "runge"];

impl TestFunction {
    pub fn poly_bump_h(s: usize, omega: Interval) -> Self {
        testfn("poly_bump_h", FnParams { s, omega, ..Default::default() }).unwrap()
    }

    pub fn poly_bump_c(s: usize, omega: Interval) -> Self {
        testfn("poly_bump_c", FnParams { s, omega, ..Default::default() }).unwrap()
    }

    pub fn scaled_bump(omega: Interval) -> Self {
        testfn("scaled_bump", FnParams { omega, ..Default::default() }).unwrap()
    }

    pub fn gauss_sine(freq: f64) -> Self {
        testfn("gauss_sine", FnParams { freq, ..Default::default() }).unwrap()
    }

    pub fn constant() -> Self {
        testfn("constant", FnParams::default()).unwrap()
    }

    pub fn runge() -> Self {
        testfn("runge", FnParams::default()).unwrap()
    }

    /// Compact support, if any.
    pub fn support(&self) -> Option<Interval> {
        match self.kind {
            TestKind::PolyBump { omega, .. } | TestKind::ScaledBump { omega } => Some(omega),
            _ => None,
        }
    }

    /// Points where the function is not analytic.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            TestKind::PolyBump { omega, .. } => vec![omega.a, omega.b],
            TestKind::ScaledBump { omega } => vec![omega.a, omega.mid(), omega.b],
            _ => Vec::new(),
        }
    }

    /// Classes containing the function for smoothness `s`.
    pub fn membership(&self, s: usize) -> Vec<Membership> {
        use Membership::*;
        match self.kind {
            // derivatives below `power` vanish at both ends
            TestKind::PolyBump { power, .. } => {
                let p = power as usize;
                let mut v = Vec::new();
                if s <= p {
                    v.extend([Hs0, HsLine]);
                }
                if s < p {
                    v.extend([Cs0, CsLine]);
                }
                v
            }
            TestKind::ScaledBump { .. } => vec![Hs0, Cs0, HsLine, CsLine],
            TestKind::GaussSine { .. } | TestKind::Runge => vec![HsLine, CsLine],
            TestKind::Constant => vec![CsLine],
        }
    }

    pub fn is_member(&self, space: Space, s: usize, compact: bool) -> bool {
        let want = match (space, compact) {
            (Space::Hs, true) => Membership::Hs0,
            (Space::Cs, true) => Membership::Cs0,
            (Space::Hs, false) => Membership::HsLine,
            (Space::Cs, false) => Membership::CsLine,
        };
        self.membership(s).contains(&want)
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl Smooth for TestFunction {
    fn jet(&self, x: f64, order: usize) -> std::result::Result<Jet, JetError> {
        Ok(match self.kind {
            TestKind::PolyBump { power, omega } => {
                if x <= omega.a || x >= omega.b {
                    Jet::zero(order)
                } else {
                    let t = Jet::variable(x, order);
                    let left = t.add_scalar(-omega.a);
                    let right = (-&t).add_scalar(omega.b);
                    left.powi(power).mul_jet(&right.powi(power))
                }
            }
            TestKind::ScaledBump { omega } => {
                let half = 0.5 * omega.len();
                let u = bump_taylor((x - omega.mid()) / half, order);
                let mut scale = 1.0;
                Jet::from_coeffs(
                    u.coeffs()
                        .iter()
                        .map(|c| {
                            let v = c * scale;
                            scale /= half;
                            v
                        })
                        .collect(),
                )
            }
            TestKind::GaussSine { freq } => {
                let t = Jet::variable(x, order);
                let envelope = (&t * &t).scale(-0.25).exp()?;
                t.scale(freq).sin().mul_jet(&envelope)
            }
            TestKind::Constant => Jet::constant(1.0, order),
            TestKind::Runge => {
                let t = Jet::variable(x, order);
                (&t * &t).add_scalar(1.0).recip()?
            }
        })
    }

    fn value(&self, x: f64) -> f64 {
        match self.kind {
            TestKind::PolyBump { power, omega } => {
                if x <= omega.a || x >= omega.b {
                    0.0
                } else {
                    ((x - omega.a) * (omega.b - x)).powi(power as i32)
                }
            }
            TestKind::ScaledBump { omega } => bump((x - omega.mid()) / (0.5 * omega.len())),
            TestKind::GaussSine { freq } => (freq * x).sin() * (-0.25 * x * x).exp(),
            TestKind::Constant => 1.0,
            TestKind::Runge => 1.0 / (1.0 + x * x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct NormKey {
    label: String,
    a: u64,
    b: u64,
    s: usize,
    space: Space,
}

/// Oracle norms cached per `(function, Omega, s, space)`.
#[derive(Debug, Default)]
pub struct NormCache {
    inner: RwLock<HashMap<NormKey, f64>>,
}

impl NormCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn norm(&self, f: &TestFunction, omega: Interval, s: usize, space: Space) -> Result<f64> {
        let key = NormKey { label: f.label.clone(), a: omega.a.to_bits(), b: omega.b.to_bits(), s, space };
        if let Some(v) = self.inner.read().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = match space {
            Space::Hs => norm_hs_oracle_pieces(f, omega, s, &f.breakpoints())?,
            Space::Cs => norm_cs_oracle(f, omega, s)?,
        };
        self.inner.write().unwrap().insert(key, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.inner.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
