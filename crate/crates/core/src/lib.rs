//! Numerical hyperelliptic function theory for genus one and two.
//!
//! The crate evaluates the period matrices of a curve `y² = f(x)` (monic, odd
//! degree), the Riemann theta function with characteristics, the Kleinian
//! sigma function and its ℘ hierarchy, the Abel map, and the division
//! polynomial analogues ψₙ. Every classical identity between these objects is
//! exposed as a residual check so that a harness can report how well it holds
//! in double precision.
//!
//! The pipeline, bottom up:
//!
//! - [`curve`]: curve model, branch points, sheet tracking.
//! - [`periods`]: homology basis and period matrices by quadrature.
//! - [`theta`]: theta series with argument reduction and analytic derivatives.
//! - [`sigma`]: the sigma function, ℘-jets, γ calibration, addition formulas.
//! - [`identities`]: the data-driven registry of differential identities.
//! - [`abel`]: Abel map, curve embedding, Jacobi inversion, lattice reduction.
//! - [`psi`]: ψ sequences, their recursion relations and the intermediate ξ identities.
//! - [`report`] and [`suite`]: residual records and the verification suites.

pub mod abel;
pub mod curve;
mod error;
pub mod identities;
pub mod linalg;
pub mod logval;
pub mod multi;
pub mod periods;
pub mod psi;
pub mod quadrature;
pub mod report;
pub mod sigma;
pub mod suite;
pub mod theta;

pub use num_complex::Complex64;

pub use abel::{DivisorPair, JacPoint};
pub use curve::{BranchData, Curve, CurvePoint};
pub use error::{Error, Result};
pub use periods::{HomologyBasis, PeriodData};
pub use report::{ResidualReport, Verdict};
pub use suite::{Suite, SuiteConfig};
pub use sigma::{SigmaContext, WpJet};
pub use theta::{Characteristic, ThetaConfig};
