//! Numerical tools for Brown measures of free-probability models.
//!
//! The crate computes lifetime functions and their level-set domains for
//! additive and multiplicative deformations of a normal operator, the
//! push-forward maps that carry those domains to the general models, the
//! radii of R-diagonal annuli, and a finite-N random-matrix oracle used to
//! check every computed region.

pub mod cli;
pub mod continuation;
pub mod error;
pub mod hj_additive;
pub mod hj_multiplicative;
pub mod measure;
pub mod model;
pub mod ode;
pub mod quadrature;
pub mod rdiagonal;
pub mod region;
pub mod rmt;

pub use error::{Error, Result};
pub use measure::{SpectralMeasure, SupportKind};
pub use model::{Membership, ModelParams, SpectralVerdict};

/// Complex numbers used throughout.
pub type C64 = num_complex::Complex64;
