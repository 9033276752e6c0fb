//! Densities, their per-cell pieces `rho_m = g_m * rho` and the allocation
//! of a node budget across cells.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::GaussLegendre;
use crate::jet::{Jet, JetError, Smooth};
use crate::partition::{bump_cs_norm, bump_taylor};

/// Function class of the integrands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    /// Sobolev space `H^s`
    Hs,
    /// `C^s` with the max-sup norm
    Cs,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Space::Hs => "hs",
            Space::Cs => "cs",
        })
    }
}

impl FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hs" | "h" => Ok(Space::Hs),
            "cs" | "c" => Ok(Space::Cs),
            other => Err(Error::Domain(format!("unknown space `{other}` (expected hs or cs)"))),
        }
    }
}

/// A nonnegative integrable weight with jet access.
///
/// `cs_majorant` and `tail_mass` are the certified tail information used to
/// truncate the cell sum and the reference window. A density that returns
/// `None` cannot be planned.
pub trait Density: Smooth + fmt::Debug {
    fn label(&self) -> String;

    /// Characteristic length, used to size windows.
    fn scale(&self) -> f64;

    /// Upper bound on `||rho||_{C^s(Omega_m)}`.
    fn cs_majorant(&self, m: i64, s: usize) -> Option<f64>;

    /// Upper bound on `int_{|x| > w} (1 + x^2) rho(x) dx`.
    fn tail_mass(&self, w: f64) -> Option<f64>;
}

/// Normal density with mean zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    sigma: f64,
}

pub fn gaussian_density(sigma: f64) -> Result<Gaussian> {
    Gaussian::new(sigma)
}

impl Gaussian {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn norm_const(&self) -> f64 {
        1.0 / (2.0 * std::f64::consts::PI * self.sigma * self.sigma).sqrt()
    }
}

impl Smooth for Gaussian {
    fn jet(&self, x: f64, order: usize) -> std::result::Result<Jet, JetError> {
        let t = Jet::variable(x, order).scale(1.0 / self.sigma);
        let e = (&t * &t).scale(-0.5).exp()?;
        Ok(e.scale(self.norm_const()))
    }

    fn value(&self, x: f64) -> f64 {
        let t = x / self.sigma;
        self.norm_const() * (-0.5 * t * t).exp()
    }
}

impl Density for Gaussian {
    fn label(&self) -> String {
        "gaussian".into()
    }

    fn scale(&self) -> f64 {
        self.sigma
    }

    fn cs_majorant(&self, m: i64, s: usize) -> Option<f64> {
        Some(cramer_bound(self.sigma, s, m))
    }

    fn tail_mass(&self, w: f64) -> Option<f64> {
        // P(|X| > w) <= 2 phi(z)/z (Mills ratio) and
        // E[X^2; |X| > w] = sigma^2 (2 z phi(z) + P(|X| > w))
        let w = w.max(self.sigma);
        let z = w / self.sigma;
        let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let s2 = self.sigma * self.sigma;
        Some((1.0 + s2) * 2.0 * phi / z + 2.0 * s2 * z * phi)
    }
}

/// Cramer-type bound `(2 pi)^{-1/4} sigma^{-1} sqrt(s!) exp(-(mbar - 1)^2 / (4 sigma^2))`
/// on `||rho||_{C^s(Omega_m)}` for the Gaussian, `mbar = max(1, |m|)`.
pub fn cramer_bound(sigma: f64, s: usize, m: i64) -> f64 {
    let mbar = (m.unsigned_abs() as f64).max(1.0);
    let fact: f64 = (1..=s).map(|i| i as f64).product();
    (2.0 * std::f64::consts::PI).powf(-0.25) / sigma
        * fact.sqrt()
        * (-(mbar - 1.0).powi(2) / (4.0 * sigma * sigma)).exp()
}

/// Uniform grid size for sup-norm estimates on a cell.
pub const CS_GRID: usize = 2049;
/// Gauss–Legendre panels per cell for `H^s` norms.
pub const HS_PANELS: usize = 16;

fn piece_derivatives(model: &dyn Density, m: i64, x: f64, s: usize) -> Vec<f64> {
    let g = bump_taylor(x - m as f64, s);
    if g.coeffs().iter().all(|c| *c == 0.0) {
        return vec![0.0; s + 1];
    }
    match model.jet(x, s) {
        Ok(r) => g.mul_jet(&r).derivatives(),
        Err(_) => vec![f64::NAN; s + 1],
    }
}

/// Grid estimate of `||g_m rho||_{C^s(Omega_m)}` on `CS_GRID` points.
pub fn cell_norm_cs(model: &dyn Density, m: i64, s: usize) -> f64 {
    let a = m as f64 - 1.0;
    let mut sup = 0.0f64;
    for i in 0..CS_GRID {
        let x = a + 2.0 * i as f64 / (CS_GRID - 1) as f64;
        for d in piece_derivatives(model, m, x, s) {
            sup = sup.max(d.abs());
        }
    }
    sup
}

/// `||g_m rho||_{H^s(Omega_m)}` by composite 32-point Gauss–Legendre.
pub fn cell_norm_hs(model: &dyn Density, m: i64, s: usize) -> f64 {
    let a = m as f64 - 1.0;
    GaussLegendre::g32()
        .composite(a, a + 2.0, HS_PANELS, |x| {
            piece_derivatives(model, m, x, s).iter().map(|d| d * d).sum()
        })
        .sqrt()
}

/// Grid estimate of `||rho||_{C^s([a, b])}` for the density alone.
pub fn density_cs_norm(model: &dyn Density, a: f64, b: f64, s: usize) -> f64 {
    let mut sup = 0.0f64;
    for i in 0..CS_GRID {
        let x = a + (b - a) * i as f64 / (CS_GRID - 1) as f64;
        if let Ok(j) = model.jet(x, s) {
            for d in j.derivatives() {
                sup = sup.max(d.abs());
            }
        }
    }
    sup
}

/// One planned cell `Omega_m = [m - 1, m + 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub m: i64,
    pub cell_norm: f64,
    pub p: f64,
    pub n_m: usize,
}

/// Truncated cell decomposition with budget allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellPlan {
    pub space: Space,
    pub s: usize,
    pub n: usize,
    pub tail_tol: f64,
    pub cells: Vec<Cell>,
    /// `rho_{C^s}` (for `H^s` integrands) or `rho_{H^s}` (for `C^s`), including
    /// the certified tail majorant.
    pub norm_sum: f64,
    pub tail_bound: f64,
    /// Largest `n` for which every excluded cell still gets `floor(p_m n) = 0`.
    pub budget_limit: f64,
}

/// Exponent applied to cell norms: `1/(s + 1/2)` for `H^s`, `1/(s + 1)` for `C^s`.
pub fn allocation_exponent(space: Space, s: usize) -> f64 {
    match space {
        Space::Hs => 1.0 / (s as f64 + 0.5),
        Space::Cs => 1.0 / (s as f64 + 1.0),
    }
}

fn cell_norm(model: &dyn Density, space: Space, m: i64, s: usize) -> f64 {
    match space {
        Space::Hs => cell_norm_cs(model, m, s),
        Space::Cs => cell_norm_hs(model, m, s),
    }
}

/// Majorant of the allocation norm of cell `m`, via the product-norm bound
/// `||g_m rho||_{C^s} <= 2^s ||g||_{C^s} ||rho||_{C^s(Omega_m)}` and
/// `||u||_{H^s(Omega_m)} <= sqrt(2 (s + 1)) ||u||_{C^s(Omega_m)}`.
fn cell_norm_majorant(model: &dyn Density, space: Space, m: i64, s: usize) -> Option<f64> {
    let cs = 2f64.powi(s as i32) * bump_cs_norm(s) * model.cs_majorant(m, s)?;
    Some(match space {
        Space::Hs => cs,
        Space::Cs => (2.0 * (s as f64 + 1.0)).sqrt() * cs,
    })
}

const MAX_CELLS: i64 = 10_000;

/// Sum of `majorant^q` over `|m| > radius`, with a remainder bound.
fn tail_sum(model: &dyn Density, space: Space, s: usize, q: f64, radius: i64) -> Option<f64> {
    let mut total = 0.0;
    let mut prev = f64::INFINITY;
    for j in radius + 1..radius + 1 + MAX_CELLS {
        let term = cell_norm_majorant(model, space, j, s)?.powf(q)
            + cell_norm_majorant(model, space, -j, s)?.powf(q);
        total += term;
        let ratio = term / prev;
        prev = term;
        if term == 0.0 {
            return Some(total);
        }
        if ratio <= 0.5 && term <= 1e-17 * total {
            // remaining terms decay at least geometrically
            return Some(total + term);
        }
    }
    None
}

/// Plans the cells and node budgets `n_m = floor(p_m n)`.
///
/// Cells are kept for `|m| <= M` with the smallest `M` such that the
/// majorized tail of the norm sum is below `tail_tol` times the kept part and
/// every excluded cell would receive `floor(p_m n) = 0`. Weights are not
/// renormalized after truncation.
pub fn allocation_weights(
    model: &dyn Density,
    s: usize,
    space: Space,
    n: usize,
    tail_tol: f64,
) -> Result<CellPlan> {
    if !(tail_tol > 0.0 && tail_tol <= 1e-3) {
        return Err(Error::Domain(format!("tail_tol must lie in (0, 1e-3], got {tail_tol}")));
    }
    if s == 0 {
        return Err(Error::Domain("smoothness s must be at least 1".into()));
    }
    let q = allocation_exponent(space, s);
    let uncertified = || Error::Configuration(format!("tail of {} cell norms cannot be certified", model.label()));

    let mut norms: Vec<(i64, f64)> = Vec::new();
    let mut kept = 0.0;
    for radius in 0..MAX_CELLS {
        let new_cells: Vec<i64> = if radius == 0 { vec![0] } else { vec![-radius, radius] };
        for m in new_cells {
            let v = cell_norm(model, space, m, s);
            kept += v.powf(q);
            norms.push((m, v));
        }
        let tail = tail_sum(model, space, s, q, radius).ok_or_else(uncertified)?;
        if !tail.is_finite() || !kept.is_finite() {
            return Err(uncertified());
        }
        if tail >= tail_tol * kept {
            continue;
        }
        let norm_sum = kept + tail;
        let first_excluded = cell_norm_majorant(model, space, radius + 1, s)
            .zip(cell_norm_majorant(model, space, -(radius + 1), s))
            .map(|(a, b)| a.max(b))
            .ok_or_else(uncertified)?;
        let p_excluded = first_excluded.powf(q) / norm_sum;
        if p_excluded * n as f64 >= 1.0 {
            continue;
        }
        norms.sort_by_key(|(m, _)| *m);
        let cells = norms
            .into_iter()
            .filter(|(_, v)| *v > 0.0)
            .map(|(m, v)| {
                let p = v.powf(q) / norm_sum;
                Cell { m, cell_norm: v, p, n_m: (p * n as f64).floor() as usize }
            })
            .collect();
        return Ok(CellPlan {
            space,
            s,
            n,
            tail_tol,
            cells,
            norm_sum,
            tail_bound: tail,
            budget_limit: 1.0 / p_excluded,
        });
    }
    Err(uncertified())
}

impl CellPlan {
    /// Same cells and weights with a different budget.
    pub fn with_budget(&self, n: usize) -> Result<CellPlan> {
        if n as f64 >= self.budget_limit {
            return Err(Error::Configuration(format!(
                "budget {n} exceeds the certified limit {:.0} of this plan",
                self.budget_limit
            )));
        }
        let mut plan = self.clone();
        plan.n = n;
        for c in &mut plan.cells {
            c.n_m = (c.p * n as f64).floor() as usize;
        }
        Ok(plan)
    }

    pub fn p_sum(&self) -> f64 {
        self.cells.iter().map(|c| c.p).sum()
    }

    pub fn budget_sum(&self) -> usize {
        self.cells.iter().map(|c| c.n_m).sum()
    }

    /// Smallest interval covering all planned cells.
    pub fn window(&self) -> (f64, f64) {
        let lo = self.cells.iter().map(|c| c.m).min().unwrap_or(0);
        let hi = self.cells.iter().map(|c| c.m).max().unwrap_or(0);
        (lo as f64 - 1.0, hi as f64 + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RHO0: f64 = 0.398_942_280_401_432_7;

    #[test]
    fn gaussian_values() {
        let g = gaussian_density(1.0).unwrap();
        assert!((g.value(0.0) - RHO0).abs() < 1e-15);
        let d = g.jet(0.0, 2).unwrap().derivatives();
        assert!(d[1].abs() < 1e-16);
        assert!((d[2] + RHO0).abs() < 1e-15);
        assert!(gaussian_density(0.0).is_err());
        assert!(gaussian_density(-1.0).is_err());
    }

    #[test]
    fn gaussian_normalized() {
        let g = gaussian_density(2.0).unwrap();
        let total = GaussLegendre::g32().composite(-40.0, 40.0, 80, |x| g.value(x));
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cramer_values() {
        let c0 = (2.0 * std::f64::consts::PI).powf(-0.25);
        assert!((cramer_bound(1.0, 0, 1) - 0.631_618_7).abs() < 1e-7);
        assert_eq!(cramer_bound(1.0, 0, 0), cramer_bound(1.0, 0, 1));
        let v = cramer_bound(1.0, 2, 3);
        assert!((v - c0 * 2f64.sqrt() * (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.328_606_0).abs() < 1e-6);
    }

    #[test]
    fn central_cell_sup() {
        let g = gaussian_density(1.0).unwrap();
        assert!((cell_norm_cs(&g, 0, 0) - RHO0).abs() < 1e-15);
    }

    #[test]
    fn cell_norms_symmetric() {
        let g = gaussian_density(1.0).unwrap();
        for m in 1..4 {
            for s in 1..3 {
                let (a, b) = (cell_norm_cs(&g, m, s), cell_norm_cs(&g, -m, s));
                assert!((a - b).abs() <= 1e-10 * a.max(1e-300));
                let (a, b) = (cell_norm_hs(&g, m, s), cell_norm_hs(&g, -m, s));
                assert!((a - b).abs() <= 1e-10 * a.max(1e-300));
            }
        }
    }

    #[test]
    fn far_cell_below_cramer() {
        let g = gaussian_density(1.0).unwrap();
        assert!(cell_norm_cs(&g, 12, 1) <= cramer_bound(1.0, 1, 12) * 2.0 * bump_cs_norm(1));
        assert!(density_cs_norm(&g, 11.0, 13.0, 1) <= cramer_bound(1.0, 1, 12));
    }

    #[test]
    fn plan_with_zero_budget() {
        let g = gaussian_density(1.0).unwrap();
        let plan = allocation_weights(&g, 2, Space::Hs, 0, 1e-10).unwrap();
        assert!(plan.cells.iter().all(|c| c.n_m == 0));
        assert!(plan.p_sum() >= 1.0 - 1e-10 && plan.p_sum() <= 1.0);
    }

    #[test]
    fn plan_budget_and_symmetry() {
        let g = gaussian_density(1.0).unwrap();
        for space in [Space::Hs, Space::Cs] {
            let plan = allocation_weights(&g, 2, space, 100, 1e-10).unwrap();
            assert!(plan.budget_sum() <= 100);
            for c in &plan.cells {
                assert!((0.0..=1.0).contains(&c.p));
                assert_eq!(c.n_m, (c.p * 100.0).floor() as usize);
                let mirror = plan.cells.iter().find(|d| d.m == -c.m).unwrap();
                assert!((c.p - mirror.p).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn rebudget_respects_limit() {
        let g = gaussian_density(1.0).unwrap();
        let plan = allocation_weights(&g, 1, Space::Hs, 4096, 1e-10).unwrap();
        let small = plan.with_budget(64).unwrap();
        assert!(small.budget_sum() <= 64);
        assert!(plan.with_budget(usize::MAX / 2).is_err());
    }

    #[test]
    fn rejects_bad_tolerance() {
        let g = gaussian_density(1.0).unwrap();
        assert!(allocation_weights(&g, 2, Space::Hs, 10, 0.0).is_err());
        assert!(allocation_weights(&g, 2, Space::Hs, 10, 0.1).is_err());
    }

    #[test]
    fn unplannable_density() {
        #[derive(Debug)]
        struct Cauchy;
        impl Smooth for Cauchy {
            fn jet(&self, x: f64, order: usize) -> std::result::Result<Jet, JetError> {
                let t = Jet::variable(x, order);
                (&t * &t).add_scalar(1.0).recip().map(|j| j.scale(1.0 / std::f64::consts::PI))
            }
        }
        impl Density for Cauchy {
            fn label(&self) -> String {
                "cauchy".into()
            }
            fn scale(&self) -> f64 {
                1.0
            }
            fn cs_majorant(&self, _: i64, _: usize) -> Option<f64> {
                None
            }
            fn tail_mass(&self, _: f64) -> Option<f64> {
                None
            }
        }
        assert!(matches!(
            allocation_weights(&Cauchy, 2, Space::Hs, 10, 1e-10),
            Err(Error::Configuration(_))
        ));
    }
}
