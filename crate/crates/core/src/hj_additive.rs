//! Additive Hamilton–Jacobi machinery for `x + c_t` and `x + g_{t,γ}`.
//!
//! Along a characteristic the closed forms `ε(t) = ε₀(1 − t p₀)²` and
//! `p(t) = p₀ / (1 − t p₀)` hold, with `p₀ = ∫ 1/(|ξ−λ|²+ε₀) dμ_x`. These follow
//! from `H = −ε p²` with the standard sign convention `ε' = ∂H/∂p`,
//! `p' = −∂H/∂ε`. The lifetime `T(λ)` is the `ε₀ → 0` limit of the blow-up
//! time `1/p₀`, and `Σ_t = {T < t}`.

use serde::Serialize;

use crate::continuation::{exterior_preimage, PathStarts};
use crate::error::{Error, Result};
use crate::measure::SpectralMeasure;
use crate::model::{classify_lifetime, Membership, ModelParams, SpectralVerdict, DEFAULT_MEMBERSHIP_TOL};
use crate::region::{map_boundary, Boundary};
use crate::C64;

/// Boundary points may sit this far (relatively) inside `Σ_t` before
/// [`e_region`] rejects them as malformed.
const BOUNDARY_SLACK: f64 = 1e-2;
const NEWTON_MAX_ITERS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HamiltonState {
    pub epsilon: f64,
    pub p_epsilon: f64,
    pub elapsed: f64,
}

/// State at time `t` of the characteristic starting at `(ε₀, p₀)`.
pub fn flow_additive(epsilon0: f64, p0: f64, t: f64) -> Result<HamiltonState> {
    if !(epsilon0 >= 0.0 && p0 >= 0.0 && t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "flow needs epsilon0 >= 0, p0 >= 0, t >= 0 (got {epsilon0}, {p0}, {t})"
        )));
    }
    let shrink = 1.0 - t * p0;
    if shrink <= 0.0 {
        return Err(Error::LifetimeExceeded { t, lifetime: 1.0 / p0 });
    }
    Ok(HamiltonState {
        epsilon: epsilon0 * shrink * shrink,
        p_epsilon: p0 / shrink,
        elapsed: t,
    })
}

/// Blow-up time `t_*(λ, ε₀) = 1/p₀` of the characteristic through `(λ, ε₀)`.
pub fn characteristic_lifetime(mu: &SpectralMeasure, lambda: C64, epsilon0: f64) -> Result<f64> {
    let p0 = mu.reg_resolvent(lambda, epsilon0)?;
    Ok(if p0 == 0.0 { f64::INFINITY } else { 1.0 / p0 })
}

/// `T(λ) = 1 / ∫|ξ−λ|⁻² dμ_x`, zero when the integral diverges.
pub fn lifetime_additive(mu: &SpectralMeasure, lambda: C64) -> f64 {
    let p = mu.neg2_trace(lambda);
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

pub fn sigma_additive_membership(mu: &SpectralMeasure, lambda: C64, t: f64) -> Membership {
    sigma_additive_membership_tol(mu, lambda, t, DEFAULT_MEMBERSHIP_TOL)
}

pub fn sigma_additive_membership_tol(mu: &SpectralMeasure, lambda: C64, t: f64, rel_tol: f64) -> Membership {
    classify_lifetime(lifetime_additive(mu, lambda), t, rel_tol)
}

/// One-sided test: `λ` is outside the spectrum of `x + c_t` when it is off
/// the spectrum of `x` and `T(λ) > t`.
pub fn spectral_test_additive(
    mu: &SpectralMeasure,
    sigma_x_distance: impl Fn(C64) -> f64,
    lambda: C64,
    t: f64,
) -> SpectralVerdict {
    if sigma_x_distance(lambda) > 0.0 && lifetime_additive(mu, lambda) > t {
        SpectralVerdict::OutsideSpectrum
    } else {
        SpectralVerdict::Undetermined
    }
}

/// Spectral test in the image plane of `Φ_{t,γ}`: `z` is outside the
/// spectrum of `x + g_{t,γ}` when it has a preimage under `Φ_{t,γ}` outside
/// `Σ̄_t` and off the support of `μ_x`. Reduces to [`spectral_test_additive`]
/// at `γ = 0`.
pub fn spectral_test_additive_deformed(mu: &SpectralMeasure, params: &ModelParams, z: C64) -> SpectralVerdict {
    let t = params.t();
    let gamma = params.gamma();
    if gamma == C64::new(0.0, 0.0) {
        return spectral_test_additive(mu, |w| mu.support_distance(w), z, t);
    }
    let guard = mu.guard_band();
    let exterior = |l: C64| mu.support_distance(l) > guard && sigma_additive_membership(mu, l, t) == Membership::Outside;
    let map = |l: C64| -> Result<(C64, C64)> { Ok((l + gamma * mu.cauchy_transform(l)?, 1.0 + gamma * mu.cauchy_derivative(l)?)) };
    let starts = PathStarts {
        far_radius: 10.0 * (z.norm().max(mu.support_radius()).max(1.0) + gamma.norm()),
        scale_at_infinity: C64::new(1.0, 0.0),
        near_origin: None,
    };
    match exterior_preimage(&map, z, starts, exterior) {
        Ok(Some(_)) => SpectralVerdict::OutsideSpectrum,
        Ok(None) => SpectralVerdict::Undetermined,
        Err(e) => {
            log::warn!("{e}; verdict left undetermined");
            SpectralVerdict::Undetermined
        }
    }
}

/// `ε₀ ↦ ε₀(1 − t p(ε₀))²` together with `p(ε₀)` and the derivative in `ε₀`.
fn epsilon_at_time(mu: &SpectralMeasure, lambda: C64, t: f64, e0: f64) -> Result<(f64, f64, f64)> {
    let p = mu.reg_resolvent(lambda, e0)?;
    let q = -mu.reg_resolvent_derivative(lambda, e0);
    let s = 1.0 - t * p;
    let g = e0 * s * s;
    let dg = s * s + 2.0 * e0 * t * s * q;
    Ok((g, p, dg))
}

/// Half-width `δ` of the range of `ε` below zero on which `ε₀ ↦ ε(t)` stays
/// invertible, found by bisection on `ε₀ < 0`.
pub fn extension_radius(mu: &SpectralMeasure, lambda: C64, t: f64) -> Result<f64> {
    let admissible = |e0: f64| match epsilon_at_time(mu, lambda, t, e0) {
        Ok((_, p, dg)) => 1.0 - t * p > 0.0 && dg > 0.0,
        Err(_) => false,
    };
    if !admissible(0.0) {
        return Err(Error::InsideDomain { point: lambda });
    }
    let d = mu.support_distance(lambda);
    let mut bad = -d * d;
    let mut good = 0.0;
    let floor = bad * (1.0 - 1e-9);
    if admissible(floor) {
        good = floor;
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (bad + good);
            if admissible(mid) {
                good = mid;
            } else {
                bad = mid;
            }
            if (good - bad).abs() <= 1e-15 * d * d {
                break;
            }
        }
    }
    let (g, _, _) = epsilon_at_time(mu, lambda, t, good)?;
    Ok(-g)
}

/// Extended `∂S/∂ε(t, λ, ε)` for `ε` in `(−δ, ∞)`: invert `ε₀ ↦ ε(t)` by
/// Newton and return `p(ε₀) / (1 − t p(ε₀))`.
pub fn analytic_extension_trace(mu: &SpectralMeasure, lambda: C64, t: f64, eps_samples: &[f64]) -> Result<Vec<f64>> {
    let verdict = spectral_test_additive(mu, |z| mu.support_distance(z), lambda, t);
    if verdict != SpectralVerdict::OutsideSpectrum {
        return Err(Error::InsideDomain { point: lambda });
    }
    let delta = extension_radius(mu, lambda, t)?;
    eps_samples
        .iter()
        .map(|&eps| {
            if eps <= -delta {
                return Err(Error::ExtensionRange { epsilon: eps, delta });
            }
            let e0 = invert_epsilon(mu, lambda, t, eps)?;
            let p = mu.reg_resolvent(lambda, e0)?;
            Ok(p / (1.0 - t * p))
        })
        .collect()
}

fn invert_epsilon(mu: &SpectralMeasure, lambda: C64, t: f64, eps: f64) -> Result<f64> {
    let failed = Error::InversionFailed { epsilon: eps };
    let tol = 1e-15 * eps.abs().max(1e-3);
    let mut e0 = eps;
    let (mut g, _, mut dg) = match epsilon_at_time(mu, lambda, t, e0) {
        Ok(v) => v,
        Err(_) => return Err(failed),
    };
    for _ in 0..NEWTON_MAX_ITERS {
        let r = g - eps;
        if r.abs() <= tol {
            return Ok(e0);
        }
        if !(dg > 0.0) {
            return Err(failed);
        }
        let mut step = r / dg;
        // damp steps that leave the admissible range
        let mut accepted = None;
        for _ in 0..60 {
            let cand = e0 - step;
            if let Ok((g2, p2, dg2)) = epsilon_at_time(mu, lambda, t, cand) {
                if 1.0 - t * p2 > 0.0 && dg2 > 0.0 {
                    accepted = Some((cand, g2, dg2));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((cand, g2, dg2)) = accepted else {
            return Err(failed);
        };
        let moved = (cand - e0).abs();
        e0 = cand;
        g = g2;
        dg = dg2;
        if moved <= 1e-17 * e0.abs().max(1e-3) {
            return Ok(e0);
        }
    }
    if (g - eps).abs() <= 1e3 * tol {
        Ok(e0)
    } else {
        Err(failed)
    }
}

/// `∂S/∂ε(t, λ, ε)` for `ε > 0` at any `λ`: the characteristic through `λ`
/// that reaches height `ε` at time `t` starts from the `ε₀` with
/// `ε₀(1 − t p(ε₀))² = ε` and `t p(ε₀) < 1`; the value is `p/(1 − t p)`.
pub fn predicted_dsde(mu: &SpectralMeasure, lambda: C64, t: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must be positive")));
    }
    let p = |e0: f64| mu.reg_resolvent(lambda, e0).unwrap_or(f64::INFINITY);
    let alive = |e0: f64| t * p(e0) < 1.0;
    // smallest admissible ε₀; p(ε₀) ≤ 1/ε₀ makes 2t admissible
    let mut lo = 0.0;
    if !alive(0.0) {
        let mut hi = 2.0 * t;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if alive(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo = hi;
    }
    let g = |e0: f64| {
        let s = 1.0 - t * p(e0);
        e0 * s * s
    };
    let mut hi = (2.0 * lo).max(epsilon).max(1e-300);
    while g(hi) < epsilon {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    let e0 = 0.5 * (lo + hi);
    let pv = p(e0);
    Ok(pv / (1.0 - t * pv))
}

fn require_exterior(mu: &SpectralMeasure, params: &ModelParams, lambda: C64) -> Result<()> {
    let outside = mu.support_distance(lambda) > 0.0
        && sigma_additive_membership(mu, lambda, params.t()) == Membership::Outside;
    if outside {
        Ok(())
    } else {
        Err(Error::InsideDomain { point: lambda })
    }
}

/// `Φ_{t,γ}(λ) = λ + γ G_x(λ)` for `λ` strictly outside `Σ̄_t`.
pub fn phi_map(mu: &SpectralMeasure, params: &ModelParams, lambda: C64) -> Result<C64> {
    require_exterior(mu, params, lambda)?;
    phi_exterior_formula(mu, params.gamma(), lambda)
}

/// `Φ` and `Φ'` at an exterior point.
pub fn phi_map_with_derivative(mu: &SpectralMeasure, params: &ModelParams, lambda: C64) -> Result<(C64, C64)> {
    require_exterior(mu, params, lambda)?;
    let g = mu.cauchy_transform(lambda)?;
    let dg = mu.cauchy_derivative(lambda)?;
    Ok((lambda + params.gamma() * g, 1.0 + params.gamma() * dg))
}

/// The exterior formula without the domain check, for limits onto `∂Σ_t`.
pub fn phi_exterior_formula(mu: &SpectralMeasure, gamma: C64, lambda: C64) -> Result<C64> {
    if gamma == C64::new(0.0, 0.0) {
        return Ok(lambda);
    }
    Ok(lambda + gamma * mu.cauchy_transform(lambda).map_err(|_| Error::InsideDomain { point: lambda })?)
}

/// Image `Φ_{t,γ}(∂Σ_t)`, the boundary of `E_{t,γ}`.
pub fn e_region(mu: &SpectralMeasure, params: &ModelParams, boundary: &Boundary) -> Result<Boundary> {
    let t = params.t();
    map_boundary(boundary, |lambda| {
        if lifetime_additive(mu, lambda) < t * (1.0 - BOUNDARY_SLACK) {
            return Err(Error::InsideDomain { point: lambda });
        }
        phi_exterior_formula(mu, params.gamma(), lambda)
    })
}

/// Five-point Laplacian of `1/T` at `λ` and `∫|ξ−λ|⁻⁴ dμ_x`.
pub fn laplacian_identity_check(mu: &SpectralMeasure, lambda: C64, h: f64) -> (f64, f64) {
    let inv_t = |z: C64| mu.neg2_trace(z);
    let c = inv_t(lambda);
    let sum = inv_t(lambda + h) + inv_t(lambda - h) + inv_t(lambda + C64::new(0.0, h)) + inv_t(lambda - C64::new(0.0, h));
    ((sum - 4.0 * c) / (h * h), mu.neg4_trace(lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::SupportKind;
    use crate::region::Polyline;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn bernoulli() -> SpectralMeasure {
        SpectralMeasure::uniform_atoms(SupportKind::RealLine, &[c(-1.0, 0.0), c(1.0, 0.0)]).unwrap()
    }

    fn delta0() -> SpectralMeasure {
        SpectralMeasure::point_mass(SupportKind::RealLine, c(0.0, 0.0)).unwrap()
    }

    #[test]
    fn flow_examples() {
        let s = flow_additive(1.0, 1e-300, 5.0).unwrap();
        assert!((s.epsilon - 1.0).abs() < 1e-12 && s.p_epsilon < 1e-290);
        let s = flow_additive(1.0, 1.0, 0.5).unwrap();
        assert_eq!((s.epsilon, s.p_epsilon), (0.25, 2.0));
        let s = flow_additive(4.0, 0.5, 1.0).unwrap();
        assert_eq!((s.epsilon, s.p_epsilon), (1.0, 1.0));
        assert!((s.epsilon.sqrt() * s.p_epsilon - 1.0).abs() < 1e-15);
        assert!(matches!(flow_additive(1.0, 1.0, 1.0), Err(Error::LifetimeExceeded { .. })));
    }

    #[test]
    fn lifetime_examples() {
        let b = bernoulli();
        assert_eq!(lifetime_additive(&b, c(0.0, 0.0)), 1.0);
        assert!((lifetime_additive(&b, c(2.0, 0.0)) - 1.8).abs() < 1e-15);
        assert_eq!(lifetime_additive(&b, c(1.0, 0.0)), 0.0);
        let d = delta0();
        for z in [c(0.3, 0.4), c(-2.0, 1.0), c(0.0, 3.0)] {
            assert!((lifetime_additive(&d, z) - z.norm_sqr()).abs() < 1e-14);
        }
    }

    #[test]
    fn membership_examples() {
        let b = bernoulli();
        assert_eq!(sigma_additive_membership(&b, c(0.0, 0.0), 2.0), Membership::Inside);
        assert_eq!(sigma_additive_membership(&b, c(0.0, 0.0), 1.0), Membership::Boundary);
        assert_eq!(sigma_additive_membership(&b, c(2.0, 0.0), 1.0), Membership::Outside);
    }

    #[test]
    fn spectral_test_examples() {
        let b = bernoulli();
        let dist = |z: C64| b.support_distance(z);
        assert_eq!(spectral_test_additive(&b, dist, c(3.0, 0.0), 1.0), SpectralVerdict::OutsideSpectrum);
        assert!((lifetime_additive(&b, c(3.0, 0.0)) - 6.4).abs() < 1e-13);
        assert_eq!(spectral_test_additive(&b, dist, c(1.0, 0.0), 0.01), SpectralVerdict::Undetermined);
        assert_eq!(spectral_test_additive(&b, dist, c(0.0, 0.0), 2.0), SpectralVerdict::Undetermined);
    }

    #[test]
    fn extension_examples() {
        let v = analytic_extension_trace(&delta0(), c(2.0, 0.0), 1.0, &[0.0]).unwrap();
        assert!((v[0] - 1.0 / 3.0).abs() < 1e-14);
        let v = analytic_extension_trace(&bernoulli(), c(3.0, 0.0), 1.0, &[0.0]).unwrap();
        assert!((v[0] - 5.0 / 27.0).abs() < 1e-14);
        let eps = [-2e-3, -1e-3, 0.0, 1e-3, 2e-3];
        let v = analytic_extension_trace(&delta0(), c(2.0, 0.0), 1.0, &eps).unwrap();
        // ∂S/∂ε decreases in ε on both sides of 0
        assert!(v.windows(2).all(|w| w[0] > w[1]), "{v:?}");
    }

    #[test]
    fn extension_matches_flow_for_positive_epsilon() {
        let b = bernoulli();
        let lambda = c(2.0, 0.5);
        let eps0 = 0.3;
        let p0 = b.reg_resolvent(lambda, eps0).unwrap();
        let s = flow_additive(eps0, p0, 1.0).unwrap();
        let v = analytic_extension_trace(&b, lambda, 1.0, &[s.epsilon]).unwrap();
        assert!((v[0] - s.p_epsilon).abs() < 1e-12 * s.p_epsilon);
    }

    #[test]
    fn extension_refuses_points_in_sigma() {
        assert!(matches!(
            analytic_extension_trace(&bernoulli(), c(0.0, 0.0), 2.0, &[0.0]),
            Err(Error::InsideDomain { .. })
        ));
    }

    #[test]
    fn predicted_dsde_matches_extension_and_flow() {
        let b = bernoulli();
        let lambda = c(3.0, 0.0);
        let ext = analytic_extension_trace(&b, lambda, 1.0, &[1e-3]).unwrap()[0];
        assert!((predicted_dsde(&b, lambda, 1.0, 1e-3).unwrap() - ext).abs() < 1e-10);
        // inside Σ_t at the origin, x = 0: p(ε₀) = 1/ε₀, ε = ε₀ − 2t + t²/ε₀
        let d0 = delta0();
        let t: f64 = 1.0;
        let eps: f64 = 0.01;
        let e0 = 0.5 * (eps + 2.0 * t + ((eps + 2.0 * t).powi(2) - 4.0 * t * t).sqrt());
        let want = (1.0 / e0) / (1.0 - t / e0);
        assert!((predicted_dsde(&d0, c(0.0, 0.0), t, eps).unwrap() - want).abs() < 1e-9 * want);
    }

    #[test]
    fn deformed_test_inverts_phi() {
        let b = bernoulli();
        let p = ModelParams::new(1.0, c(0.5, 0.0)).unwrap();
        let z = phi_map(&b, &p, c(0.0, 2.0)).unwrap();
        assert_eq!(spectral_test_additive_deformed(&b, &p, z), SpectralVerdict::OutsideSpectrum);
        // the image of the origin region: Φ(Σ_t) is not reached from outside
        assert_eq!(spectral_test_additive_deformed(&b, &p, c(0.0, 0.0)), SpectralVerdict::Undetermined);
        let p0 = ModelParams::new(1.0, c(0.0, 0.0)).unwrap();
        assert_eq!(spectral_test_additive_deformed(&b, &p0, c(3.0, 0.0)), SpectralVerdict::OutsideSpectrum);
    }

    #[test]
    fn phi_examples() {
        let p = ModelParams::new(1.0, c(1.0, 0.0)).unwrap();
        assert!((phi_map(&delta0(), &p, c(2.0, 0.0)).unwrap() - c(2.5, 0.0)).norm() < 1e-15);
        let z = phi_map(&bernoulli(), &p, c(0.0, 2.0)).unwrap();
        assert!((z - c(0.0, 1.6)).norm() < 1e-14);
        let p0 = ModelParams::new(1.0, c(0.0, 0.0)).unwrap();
        assert_eq!(phi_map(&bernoulli(), &p0, c(0.0, 2.0)).unwrap(), c(0.0, 2.0));
        assert!(matches!(phi_map(&bernoulli(), &p, c(0.9, 0.0)), Err(Error::InsideDomain { .. })));
    }

    fn unit_circle(n: usize) -> Boundary {
        let points = (0..n)
            .map(|k| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect();
        Boundary {
            polylines: vec![Polyline { points, closed: true }],
            level: 1.0,
        }
    }

    #[test]
    fn e_region_examples() {
        let b = unit_circle(64);
        let same = e_region(&delta0(), &ModelParams::new(1.0, c(0.0, 0.0)).unwrap(), &b).unwrap();
        assert_eq!(same.polylines[0].points, b.polylines[0].points);
        let seg = e_region(&delta0(), &ModelParams::new(1.0, c(1.0, 0.0)).unwrap(), &b).unwrap();
        for z in &seg.polylines[0].points {
            assert!(z.im.abs() < 1e-12 && z.re.abs() <= 2.0 + 1e-12);
        }
        let ell = e_region(&delta0(), &ModelParams::new(1.0, c(0.5, 0.0)).unwrap(), &b).unwrap();
        for z in &ell.polylines[0].points {
            let r = (z.re / 1.5).powi(2) + (z.im / 0.5).powi(2);
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_of_inverse_lifetime() {
        let (lhs, rhs) = laplacian_identity_check(&delta0(), c(2.0, 0.0), 1e-3);
        assert!((lhs - 0.25).abs() < 1e-6 && (rhs - 1.0 / 16.0).abs() < 1e-15);
        let (lhs, rhs) = laplacian_identity_check(&delta0(), c(1.0, 1.0), 1e-3);
        assert!((lhs - 1.0).abs() < 1e-5 && (rhs - 0.25).abs() < 1e-15);
    }
}
