//! Linear instability onset for monotonic viscous boundary-layer profiles.
//!
//! The crate computes eigenvalues of the Orr--Sommerfeld operator in the
//! small-viscosity regime `alpha = alpha0 * nu^{1/4}`, builds the associated
//! direct and adjoint eigenmodes as two-scale functions (a slow boundary-layer
//! part plus a fast critical-layer part), and assembles the cubic Landau
//! coefficient that decides whether the weakly nonlinear bifurcation is
//! subcritical or supercritical.
//!
//! Layering, bottom up:
//! - [`dd`]: double-double arithmetic used to sum ill-conditioned series.
//! - [`specfun`]: complex Airy functions, their iterated primitives, the
//!   Tietjens function, and the real Gamma function.
//! - [`profiles`]: the background shear profiles (exponential and Blasius).
//! - [`funcrep`]: the two-scale function representation (series about the
//!   critical point, outer grid, critical-layer grid, exponential tail) and
//!   quadrature over it.
//! - [`rayleigh`]: series inversion of the Rayleigh operator about the
//!   critical point and the slow mode pair.
//! - [`critical_layer`]: Airy-layer solves (scalar Airy and modified Airy
//!   Green functions) producing the fast content.
//! - [`orr_sommerfeld`]: the full operator application and the six-step
//!   `solve_os` inversion.
//! - [`spectrum`]: dispersion relation, eigenvalue search, and construction
//!   of the linear and adjoint modes.
//! - [`nonlinear`]: quadratic interactions, second harmonic, and the Landau
//!   coefficient.
//! - [`cli`]: command-line front end used by the `oscoeff` binary.

pub mod cli;
pub mod critical_layer;
pub mod dd;
pub mod error;
pub mod funcrep;
pub mod nonlinear;
pub mod orr_sommerfeld;
pub mod profiles;
pub mod rayleigh;
pub mod specfun;
pub mod spectrum;

pub use error::{Error, Result};

/// `nu^{1/4}` for the production viscosity `nu = 1e-30`; handy in tests.
pub const NU_QUARTER_1E30: f64 = 3.162_277_660_168_379_4e-8;
