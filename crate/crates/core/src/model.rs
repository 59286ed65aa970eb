//! Model parameters and the verdict types shared by the domain computations.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::C64;

/// Default relative width of the band where a lifetime counts as equal to `t`.
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

/// Time `t > 0` and deformation parameter `γ` with `|γ| ≤ t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelParams {
    t: f64,
    gamma: C64,
}

impl ModelParams {
    pub fn new(t: f64, gamma: C64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidArgument(format!("t = {t} must be a positive number")));
        }
        if !(gamma.re.is_finite() && gamma.im.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma = {gamma} is not finite")));
        }
        // allow rounding noise in |γ| = t
        if gamma.norm() > t * (1.0 + 1e-12) {
            return Err(Error::BadGamma { gamma_abs: gamma.norm(), t });
        }
        Ok(ModelParams { t, gamma })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn gamma(&self) -> C64 {
        self.gamma
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Membership {
    Inside,
    Boundary,
    Outside,
}

/// Classify a lifetime value against `t`: inside the domain when `T < t`.
pub fn classify_lifetime(lifetime: f64, t: f64, rel_tol: f64) -> Membership {
    let band = rel_tol * t.abs();
    if lifetime < t - band {
        Membership::Inside
    } else if lifetime > t + band {
        Membership::Outside
    } else {
        Membership::Boundary
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SpectralVerdict {
    OutsideSpectrum,
    /// The origin is outside the closed domain; it is in the spectrum iff
    /// the initial law has an atom there.
    ZeroAtomCase(bool),
    Undetermined,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_bound_enforced() {
        assert!(ModelParams::new(1.0, C64::new(0.6, 0.8)).is_ok());
        assert!(matches!(ModelParams::new(1.0, C64::new(1.0, 0.1)), Err(Error::BadGamma { .. })));
        assert!(ModelParams::new(0.0, C64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn lifetime_classification() {
        assert_eq!(classify_lifetime(1.0, 2.0, DEFAULT_MEMBERSHIP_TOL), Membership::Inside);
        assert_eq!(classify_lifetime(1.0, 1.0, DEFAULT_MEMBERSHIP_TOL), Membership::Boundary);
        assert_eq!(classify_lifetime(1.8, 1.0, DEFAULT_MEMBERSHIP_TOL), Membership::Outside);
        assert_eq!(classify_lifetime(f64::INFINITY, 1.0, DEFAULT_MEMBERSHIP_TOL), Membership::Outside);
    }
}
