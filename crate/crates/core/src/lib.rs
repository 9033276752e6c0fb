//! Quadrature for oscillatory integrals `int f(x) e^{-ikx} rho(x) dx`.
//!
//! * [`compact`]: equispaced rules on a bounded interval for integrands
//!   vanishing at the endpoints, with explicit worst-case error bounds.
//! * [`line`]: the real-line composite rule built on a smooth partition of
//!   unity ([`partition`]) and a budget allocation across cells ([`density`]).
//! * [`oracle`]: independent reference integrals and norms.
//! * [`harness`]: convergence studies, bound audits, empirical complexity.

pub mod cli;
pub mod compact;
pub mod density;
pub mod error;
pub mod gauss;
pub mod harness;
pub mod jet;
pub mod line;
pub mod oracle;
pub mod partition;

pub use compact::{Interval, QuadratureRule};
pub use density::{CellPlan, Density, Gaussian, Space};
pub use error::{Error, Result};
pub use jet::{Jet, Smooth};
pub use line::{CompositeRule, LineProblem};
pub use oracle::TestFunction;
