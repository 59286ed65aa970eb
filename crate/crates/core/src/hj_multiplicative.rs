//! Multiplicative models: `u b_t`, `u b_{t,γ}` with `u` unitary and
//! `x b_t`, `x b_{t,γ}` with `x ≥ 0`.
//!
//! The lifetime functions are closed forms in `p̃₀ = ∫|ξ−λ|⁻²` (and
//! `p̃₂ = ∫ξ²|ξ−λ|⁻²` in the positive case). The Hamilton flow of the
//! regularized log potential is integrated numerically with the Hamiltonian
//! `H = −ε p_ε (1 + (|λ|²−ε) p_ε − x p_x − y p_y)` and the standard
//! equations `q' = ∂H/∂p`, `p' = −∂H/∂q`; with this sign the `ε₀ → 0` blow-up
//! time of `p_ε` reproduces the closed-form lifetime.

use std::f64::consts::PI;

use serde::Serialize;

use crate::continuation::{exterior_preimage, PathStarts};
use crate::error::{Error, Result};
use crate::measure::{Singularity, SpectralMeasure, SupportKind};
use crate::model::{classify_lifetime, Membership, ModelParams, SpectralVerdict, DEFAULT_MEMBERSHIP_TOL};
use crate::ode::{self, Outcome, Tolerances};
use crate::region::{evaluate_grid, extract_levelset_refined, map_boundary, Boundary, Bounds};
use crate::C64;

/// Switch to the series form of `log(r)/(r − 1)` below this `|r − 1|`.
const SERIES_SWITCH: f64 = 1e-8;
/// Radius of the disk around the origin excluded from positive-case grids.
pub const ORIGIN_EXCLUSION: f64 = 1e-6;
const BOUNDARY_SLACK: f64 = 1e-2;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// `log(r)/(r − 1)`, continued by `1 − u/2 + u²/3` (`u = r − 1`) near `r = 1`.
pub fn log_ratio(r: f64) -> f64 {
    let u = r - 1.0;
    if u.abs() < SERIES_SWITCH {
        1.0 - u / 2.0 + u * u / 3.0
    } else {
        r.ln() / u
    }
}

/// `p̃(λ) = ∫ 1/|λ−ξ|² dμ_u(ξ)` over the unit circle.
pub fn p_tilde_unitary(mu: &SpectralMeasure, lambda: C64) -> Result<f64> {
    mu.require_kind(SupportKind::UnitCircle)?;
    Ok(mu.neg2_trace(lambda))
}

/// `T(λ) = log(|λ|²)/(|λ|²−1) / p̃(λ)`; `+∞` at the origin, `0` where `p̃ = ∞`.
pub fn lifetime_mult_unitary(mu: &SpectralMeasure, lambda: C64) -> Result<f64> {
    let p = p_tilde_unitary(mu, lambda)?;
    if lambda == zero() {
        return Ok(f64::INFINITY);
    }
    if p.is_infinite() {
        return Ok(0.0);
    }
    Ok(log_ratio(lambda.norm_sqr()) / p)
}

/// `(p̃₀, p̃₂)` of a law on the nonnegative half-line.
pub fn p0_p2_positive(mu: &SpectralMeasure, lambda: C64) -> Result<(f64, f64)> {
    mu.require_kind(SupportKind::NonnegativeHalfLine)?;
    let p0 = mu.neg2_trace(lambda);
    let p2 = mu.integrate_kernel(
        lambda,
        |xi| {
            let d = (xi - lambda).norm_sqr();
            if d == 0.0 {
                // only reachable at λ = ξ; the origin contributes nothing to p̃₂
                if xi == zero() {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                xi.norm_sqr() / d
            }
        },
        Singularity::NonIntegrable,
    );
    Ok((p0, p2))
}

/// Positive-case lifetime `log(|λ|²p̃₀/p̃₂)/(|λ|²p̃₀ − p̃₂)`, continued by `1/p̃₂`
/// where the two terms agree to relative `1e-8`.
pub fn lifetime_mult_positive(mu: &SpectralMeasure, lambda: C64) -> Result<f64> {
    if lambda == zero() {
        return Err(Error::OriginExcluded);
    }
    let (p0, p2) = p0_p2_positive(mu, lambda)?;
    if p0.is_infinite() {
        return Ok(0.0);
    }
    if p2 == 0.0 {
        return Ok(f64::INFINITY);
    }
    let a = lambda.norm_sqr() * p0;
    Ok(log_ratio(a / p2) / p2)
}

fn unitary_exterior(mu: &SpectralMeasure, t: f64, lambda: C64) -> bool {
    match lifetime_mult_unitary(mu, lambda) {
        Ok(v) => classify_lifetime(v, t, DEFAULT_MEMBERSHIP_TOL) == Membership::Outside,
        Err(_) => false,
    }
}

fn positive_exterior(mu: &SpectralMeasure, t: f64, lambda: C64) -> bool {
    match lifetime_mult_positive(mu, lambda) {
        Ok(v) => classify_lifetime(v, t, DEFAULT_MEMBERSHIP_TOL) == Membership::Outside,
        Err(_) => false,
    }
}

/// `λ ↦ λ exp(γ J(λ))` and its derivative `exp(γJ)(1 + γ λ J')`.
pub fn exponential_map_with_derivative(mu: &SpectralMeasure, gamma: C64, lambda: C64) -> Result<(C64, C64)> {
    let j = mu.herglotz(lambda)?;
    let e = (gamma * j).exp();
    if lambda == zero() {
        return Ok((zero(), e));
    }
    let dj = mu.herglotz_derivative(lambda)?;
    Ok((lambda * e, e * (1.0 + gamma * lambda * dj)))
}

fn exponential_formula(mu: &SpectralMeasure, gamma: C64, lambda: C64) -> Result<C64> {
    if gamma == zero() {
        return Ok(lambda);
    }
    let j = mu.herglotz(lambda).map_err(|_| Error::InsideDomain { point: lambda })?;
    Ok(lambda * (gamma * j).exp())
}

/// `Ψ_{t,γ}(λ) = λ exp(γ J_u(λ))` for `λ` strictly outside `Σ̄_t`.
pub fn psi_map(mu: &SpectralMeasure, params: &ModelParams, lambda: C64) -> Result<C64> {
    mu.require_kind(SupportKind::UnitCircle)?;
    if !unitary_exterior(mu, params.t(), lambda) {
        return Err(Error::InsideDomain { point: lambda });
    }
    exponential_formula(mu, params.gamma(), lambda)
}

/// Image `Ψ_{t,γ}(∂Σ_t)` of a unitary-case boundary, evaluated by the exterior formula.
pub fn psi_boundary(mu: &SpectralMeasure, params: &ModelParams, boundary: &Boundary) -> Result<Boundary> {
    mu.require_kind(SupportKind::UnitCircle)?;
    let t = params.t();
    map_boundary(boundary, |lambda| {
        if lifetime_mult_unitary(mu, lambda)? < t * (1.0 - BOUNDARY_SLACK) {
            return Err(Error::InsideDomain { point: lambda });
        }
        exponential_formula(mu, params.gamma(), lambda)
    })
}

/// `f_γ(λ) = λ exp(γ J_x(λ))` for `λ ≠ 0` strictly outside the positive-case `Σ̄_t`.
pub fn f_gamma_map(mu: &SpectralMeasure, gamma: C64, t: f64, lambda: C64) -> Result<C64> {
    mu.require_kind(SupportKind::NonnegativeHalfLine)?;
    if lambda == zero() {
        return Err(Error::OriginExcluded);
    }
    if !positive_exterior(mu, t, lambda) {
        return Err(Error::InsideDomain { point: lambda });
    }
    exponential_formula(mu, gamma, lambda)
}

/// Image `f_γ(∂Σ_t)` of a positive-case boundary.
pub fn f_gamma_boundary(mu: &SpectralMeasure, params: &ModelParams, boundary: &Boundary) -> Result<Boundary> {
    mu.require_kind(SupportKind::NonnegativeHalfLine)?;
    let t = params.t();
    map_boundary(boundary, |lambda| {
        if lifetime_mult_positive(mu, lambda)? < t * (1.0 - BOUNDARY_SLACK) {
            return Err(Error::InsideDomain { point: lambda });
        }
        exponential_formula(mu, params.gamma(), lambda)
    })
}

/// `½∫ (2 + cos(θ−φ))/(1 − cos(θ−φ))² dμ_u(e^{iφ})`, the second θ-derivative of `1/T` on the circle.
pub fn curvature_check_circle(mu: &SpectralMeasure, theta: f64) -> Result<f64> {
    mu.require_kind(SupportKind::UnitCircle)?;
    let w = C64::from_polar(1.0, theta);
    let v = 0.5
        * mu.integrate_kernel(
            w,
            |xi| {
                let c = (xi.conj() * w).re;
                (2.0 + c) / ((1.0 - c) * (1.0 - c))
            },
            Singularity::NonIntegrable,
        );
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::EvaluationOnSupport { point: w })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HamiltonStateMult {
    pub lambda: C64,
    pub epsilon: f64,
    /// `p_x + i p_y`.
    pub p_lambda: C64,
    pub p_epsilon: f64,
    pub elapsed: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Blow-up is declared once `|p_ε|` exceeds `1/blowup_tol`.
    pub blowup_tol: f64,
    pub max_steps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            rtol: 1e-10,
            atol: 1e-14,
            blowup_tol: 1e-10,
            max_steps: 2_000_000,
        }
    }
}

/// Initial state: `p_ε = ∫ 1/(|ξ−λ|²+ε₀)`, `p_x + i p_y = ∫ 2(λ−ξ)/(|ξ−λ|²+ε₀)`.
pub fn initial_state_mult(mu: &SpectralMeasure, lambda0: C64, epsilon0: f64) -> Result<HamiltonStateMult> {
    mu.require_kind(SupportKind::UnitCircle)?;
    if !(epsilon0 > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon0 = {epsilon0} must be positive")));
    }
    let p_epsilon = mu.reg_resolvent(lambda0, epsilon0)?;
    let denom = |xi: C64| (xi - lambda0).norm_sqr() + epsilon0;
    let px = mu.integrate_kernel(lambda0, |xi| 2.0 * (lambda0.re - xi.re) / denom(xi), Singularity::Integrable);
    let py = mu.integrate_kernel(lambda0, |xi| 2.0 * (lambda0.im - xi.im) / denom(xi), Singularity::Integrable);
    Ok(HamiltonStateMult {
        lambda: lambda0,
        epsilon: epsilon0,
        p_lambda: C64::new(px, py),
        p_epsilon,
        elapsed: 0.0,
    })
}

fn hamilton_rhs(s: &[f64; 6]) -> [f64; 6] {
    let [x, y, e, px, py, p] = *s;
    let r2 = x * x + y * y;
    let a = x * px + y * py;
    [
        e * p * x,
        e * p * y,
        -e - 2.0 * e * (r2 - e) * p + e * a,
        2.0 * e * x * p * p - e * p * px,
        2.0 * e * y * p * p - e * p * py,
        p + (r2 - 2.0 * e) * p * p - p * a,
    ]
}

fn run_flow(mu: &SpectralMeasure, lambda0: C64, epsilon0: f64, t: f64, opts: FlowOptions) -> Result<Outcome<6>> {
    let s0 = initial_state_mult(mu, lambda0, epsilon0)?;
    let y0 = [s0.lambda.re, s0.lambda.im, s0.epsilon, s0.p_lambda.re, s0.p_lambda.im, s0.p_epsilon];
    let limit = 1.0 / opts.blowup_tol;
    let tol = Tolerances {
        rtol: opts.rtol,
        atol: opts.atol,
        max_steps: opts.max_steps,
    };
    Ok(ode::integrate(hamilton_rhs, y0, t, tol, |y| y[5].abs() > limit || !y[5].is_finite()))
}

/// State at time `t` of the characteristic through `(λ₀, ε₀)`.
pub fn hamilton_flow_mult(
    mu: &SpectralMeasure,
    lambda0: C64,
    epsilon0: f64,
    t: f64,
    opts: FlowOptions,
) -> Result<HamiltonStateMult> {
    match run_flow(mu, lambda0, epsilon0, t, opts)? {
        Outcome::Completed(y) => Ok(HamiltonStateMult {
            lambda: C64::new(y[0], y[1]),
            epsilon: y[2],
            p_lambda: C64::new(y[3], y[4]),
            p_epsilon: y[5],
            elapsed: t,
        }),
        Outcome::Stopped { time, .. } => Err(Error::BlowUp { time }),
        Outcome::Stalled { time, .. } => {
            log::warn!("Hamilton flow from {lambda0} stalled at t = {time}");
            Err(Error::BlowUp { time })
        }
    }
}

/// Time at which `|p_ε|` crosses `1/blowup_tol`, or `+∞` if it stays bounded up to `t_max`.
pub fn blow_up_time_mult(mu: &SpectralMeasure, lambda0: C64, epsilon0: f64, t_max: f64, opts: FlowOptions) -> Result<f64> {
    match run_flow(mu, lambda0, epsilon0, t_max, opts)? {
        Outcome::Completed(_) => Ok(f64::INFINITY),
        Outcome::Stopped { time, .. } | Outcome::Stalled { time, .. } => Ok(time),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DMembership {
    InsideD,
    OutsideD,
}

/// Preimage of `z` under `λ ↦ λ exp(γJ(λ))` in the exterior set. The map is
/// `≈ λ e^{−γ/2}` at infinity.
fn exponential_preimage<E>(mu: &SpectralMeasure, gamma: C64, z: C64, exterior: E) -> Result<Option<C64>>
where
    E: Fn(C64) -> bool,
{
    let map = |l: C64| exponential_map_with_derivative(mu, gamma, l);
    let starts = PathStarts {
        far_radius: 10.0 * z.norm().max(mu.support_radius()).max(1.0) * (0.5 * gamma.norm()).exp(),
        scale_at_infinity: (-0.5 * gamma).exp(),
        near_origin: Some(C64::from_polar(ORIGIN_EXCLUSION * mu.support_radius().max(1.0), z.arg())),
    };
    exterior_preimage(&map, z, starts, exterior)
}

/// Whether `z` lies in `D_{t,γ}`, the complement of `f_γ((Σ̄_t)^c)`.
pub fn d_region_membership(mu: &SpectralMeasure, params: &ModelParams, z: C64) -> Result<DMembership> {
    mu.require_kind(SupportKind::NonnegativeHalfLine)?;
    if z == zero() {
        return Err(Error::OriginExcluded);
    }
    let t = params.t();
    if params.gamma() == zero() {
        return Ok(if positive_exterior(mu, t, z) { DMembership::OutsideD } else { DMembership::InsideD });
    }
    let guard = mu.guard_band();
    let exterior = |l: C64| l != zero() && mu.support_distance(l) > guard && positive_exterior(mu, t, l);
    Ok(match exponential_preimage(mu, params.gamma(), z, exterior)? {
        Some(_) => DMembership::OutsideD,
        None => DMembership::InsideD,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MultKind {
    Unitary,
    Positive,
}

/// Whether the origin lies outside the closed positive-case `Σ_t`, judged on
/// a small circle around it.
fn origin_outside_positive(mu: &SpectralMeasure, t: f64) -> bool {
    let r0 = ORIGIN_EXCLUSION * mu.support_radius().max(1.0);
    (0..8).all(|k| positive_exterior(mu, t, C64::from_polar(r0, 2.0 * PI * (k as f64 + 0.5) / 8.0)))
}

pub fn spectral_test_mult(kind: MultKind, mu: &SpectralMeasure, z: C64, params: &ModelParams) -> Result<SpectralVerdict> {
    let t = params.t();
    let gamma = params.gamma();
    match kind {
        MultKind::Unitary => {
            mu.require_kind(SupportKind::UnitCircle)?;
            // u and b_{t,γ} are both invertible
            if z == zero() {
                return Ok(SpectralVerdict::OutsideSpectrum);
            }
            let lambda = if gamma == zero() {
                Some(z)
            } else {
                let guard = mu.guard_band();
                let exterior = |l: C64| mu.support_distance(l) > guard && unitary_exterior(mu, t, l);
                match exponential_preimage(mu, gamma, z, exterior) {
                    Ok(l) => l,
                    Err(e) => {
                        log::warn!("{e}; verdict left undetermined");
                        None
                    }
                }
            };
            Ok(match lambda {
                Some(l) if unitary_exterior(mu, t, l) => SpectralVerdict::OutsideSpectrum,
                _ => SpectralVerdict::Undetermined,
            })
        }
        MultKind::Positive => {
            mu.require_kind(SupportKind::NonnegativeHalfLine)?;
            if z == zero() {
                return Ok(if origin_outside_positive(mu, t) {
                    SpectralVerdict::ZeroAtomCase(mu.atom_mass_at(zero()) > 0.0)
                } else {
                    SpectralVerdict::Undetermined
                });
            }
            let lambda = if gamma == zero() {
                Some(z)
            } else {
                let guard = mu.guard_band();
                let exterior = |l: C64| l != zero() && mu.support_distance(l) > guard && positive_exterior(mu, t, l);
                match exponential_preimage(mu, gamma, z, exterior) {
                    Ok(l) => l,
                    Err(e) => {
                        log::warn!("{e}; treating the point as inside D");
                        None
                    }
                }
            };
            Ok(match lambda {
                Some(l) if mu.support_distance(l) > 0.0 && positive_exterior(mu, t, l) => SpectralVerdict::OutsideSpectrum,
                _ => SpectralVerdict::Undetermined,
            })
        }
    }
}

/// `∂Σ_t` in the positive case from a log-polar grid `(log r, θ)` on
/// `ORIGIN_EXCLUSION·scale ≤ r ≤ r_max`; crossings refined by bisection.
pub fn positive_sigma_boundary(mu: &SpectralMeasure, t: f64, r_max: f64, n_radial: usize, n_angular: usize) -> Result<Boundary> {
    mu.require_kind(SupportKind::NonnegativeHalfLine)?;
    let r_min = ORIGIN_EXCLUSION * mu.support_radius().max(1.0);
    if !(r_max > r_min) {
        return Err(Error::InvalidArgument(format!("r_max = {r_max} must exceed {r_min}")));
    }
    let dtheta = 2.0 * PI / n_angular as f64;
    // one extra angular row repeats the first, so contours close across θ = π
    let bounds = Bounds::new(r_min.ln(), r_max.ln(), -PI, PI + dtheta)?;
    let lifetime = |w: C64| {
        let lambda = C64::new(w.re, w.im).exp();
        lifetime_mult_positive(mu, lambda).unwrap_or(f64::INFINITY)
    };
    let grid = evaluate_grid(|w| lifetime(w), bounds, n_radial, n_angular + 1)?;
    let logpolar = extract_levelset_refined(&grid, t, lifetime, 1e-10);
    let mut b = map_boundary(&logpolar, |w| Ok(w.exp()))?;
    for poly in &mut b.polylines {
        if !poly.closed && poly.points.len() > 2 {
            let (first, last) = (poly.points[0], poly.points[poly.points.len() - 1]);
            if (first - last).norm() <= 1e-9 * first.norm().max(1e-300) {
                poly.points.pop();
                poly.closed = true;
            }
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn delta1() -> SpectralMeasure {
        SpectralMeasure::point_mass(SupportKind::UnitCircle, c(1.0, 0.0)).unwrap()
    }

    fn pos(points: &[f64]) -> SpectralMeasure {
        let pts: Vec<C64> = points.iter().map(|&x| c(x, 0.0)).collect();
        SpectralMeasure::uniform_atoms(SupportKind::NonnegativeHalfLine, &pts).unwrap()
    }

    #[test]
    fn p_tilde_examples() {
        assert!((p_tilde_unitary(&delta1(), c(-1.0, 0.0)).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(p_tilde_unitary(&delta1(), c(0.0, 0.0)).unwrap(), 1.0);
        let roots = SpectralMeasure::uniform_atoms(
            SupportKind::UnitCircle,
            &[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)],
        )
        .unwrap();
        assert!((p_tilde_unitary(&roots, c(0.0, 0.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(p_tilde_unitary(&pos(&[1.0]), c(0.0, 0.0)), Err(Error::WrongSupportKind { .. })));
    }

    #[test]
    fn unitary_lifetime_examples() {
        let d = delta1();
        assert!((lifetime_mult_unitary(&d, c(-1.0, 0.0)).unwrap() - 4.0).abs() < 1e-14);
        assert_eq!(lifetime_mult_unitary(&d, c(1.0, 0.0)).unwrap(), 0.0);
        assert!(lifetime_mult_unitary(&d, c(1.0 + 1e-9, 1e-9)).unwrap() < 1e-8);
        assert_eq!(lifetime_mult_unitary(&d, c(0.0, 0.0)).unwrap(), f64::INFINITY);
        // series branch: log(r)/(r−1) → 1
        let near = C64::from_polar(1.0 + 1e-10, 2.0);
        let u = near.norm_sqr() - 1.0;
        let exact = u.ln_1p() / u / p_tilde_unitary(&d, near).unwrap();
        assert!((lifetime_mult_unitary(&d, near).unwrap() - exact).abs() < 1e-10);
    }

    #[test]
    fn log_ratio_is_continuous_across_switch() {
        for r in [1.0 - 2e-8, 1.0 - 5e-9, 1.0, 1.0 + 5e-9, 1.0 + 2e-8] {
            let exact = if r == 1.0 { 1.0 } else { (r as f64).ln() / (r - 1.0) };
            assert!((log_ratio(r) - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn psi_examples() {
        let d = delta1();
        let p0 = ModelParams::new(0.3, c(0.0, 0.0)).unwrap();
        assert_eq!(psi_map(&d, &p0, c(2.0, 1.0)).unwrap(), c(2.0, 1.0));
        let p = ModelParams::new(3.9, c(0.3, 3.8)).unwrap();
        assert!((psi_map(&d, &p, c(-1.0, 0.0)).unwrap() - c(-1.0, 0.0)).norm() < 1e-15);
        let p = ModelParams::new(0.3, c(0.3, 0.0)).unwrap();
        let v = psi_map(&d, &p, c(2.0, 0.0)).unwrap();
        assert!((v - c(2.0 * (-0.45f64).exp(), 0.0)).norm() < 1e-14);
        assert!((v.re - 1.27526).abs() < 1e-5);
        assert!(matches!(psi_map(&d, &p, c(1.05, 0.0)), Err(Error::InsideDomain { .. })));
    }

    #[test]
    fn curvature_examples() {
        let d = delta1();
        assert!((curvature_check_circle(&d, PI).unwrap() - 0.125).abs() < 1e-15);
        assert!((curvature_check_circle(&d, PI / 2.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(curvature_check_circle(&d, 0.0).is_err());
    }

    #[test]
    fn positive_examples() {
        assert_eq!(p0_p2_positive(&pos(&[1.0]), c(2.0, 0.0)).unwrap(), (1.0, 1.0));
        let (p0, p2) = p0_p2_positive(&pos(&[1.0, 2.0]), c(4.0, 0.0)).unwrap();
        assert!((p0 - 13.0 / 72.0).abs() < 1e-15 && (p2 - 5.0 / 9.0).abs() < 1e-15);
        assert!((lifetime_mult_positive(&pos(&[1.0]), c(-1.0, 0.0)).unwrap() - 4.0).abs() < 1e-14);
        assert!(matches!(lifetime_mult_positive(&pos(&[1.0]), c(0.0, 0.0)), Err(Error::OriginExcluded)));
        assert_eq!(lifetime_mult_positive(&pos(&[1.0, 2.0]), c(2.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn positive_lifetime_limit_branch() {
        // for δ₁, |λ|²p̃₀ = p̃₂ exactly on |λ| = 1
        let m = pos(&[1.0]);
        let l = C64::from_polar(1.0, 2.0);
        let (_, p2) = p0_p2_positive(&m, l).unwrap();
        assert!((lifetime_mult_positive(&m, l).unwrap() - 1.0 / p2).abs() < 1e-12);
    }

    #[test]
    fn f_gamma_examples() {
        let m = pos(&[1.0, 2.0]);
        let l = c(10.0, 0.0);
        assert_eq!(f_gamma_map(&m, c(0.0, 0.0), 1.0, l).unwrap(), l);
        let j: f64 = 0.5 * (0.5 * (11.0 / -9.0) + 0.5 * (12.0 / -8.0));
        let v = f_gamma_map(&m, c(1.0, 0.0), 1.0, l).unwrap();
        assert!((v - l * j.exp()).norm() < 1e-12);
        // δ₁ on the half-line agrees with Ψ for u = 1
        let p = ModelParams::new(0.3, c(0.3, 0.0)).unwrap();
        let a = f_gamma_map(&pos(&[1.0]), p.gamma(), p.t(), c(2.0, 0.5)).unwrap();
        let b = psi_map(&delta1(), &p, c(2.0, 0.5)).unwrap();
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn d_membership_far_and_gamma_zero() {
        let m = pos(&[1.0]);
        let p = ModelParams::new(2.0, c(2.0, 0.0)).unwrap();
        assert_eq!(d_region_membership(&m, &p, c(10.0, 3.0)).unwrap(), DMembership::OutsideD);
        let p0 = ModelParams::new(1.0, c(0.0, 0.0)).unwrap();
        assert_eq!(d_region_membership(&m, &p0, c(1.0, 0.1)).unwrap(), DMembership::InsideD);
        assert_eq!(d_region_membership(&m, &p0, c(3.0, 0.0)).unwrap(), DMembership::OutsideD);
    }

    #[test]
    fn spectral_test_examples() {
        let d = delta1();
        let p = ModelParams::new(3.0, c(0.0, 0.0)).unwrap();
        assert_eq!(spectral_test_mult(MultKind::Unitary, &d, c(-1.0, 0.0), &p).unwrap(), SpectralVerdict::OutsideSpectrum);
        assert_eq!(spectral_test_mult(MultKind::Unitary, &d, c(0.0, 0.0), &p).unwrap(), SpectralVerdict::OutsideSpectrum);
        let m = pos(&[0.0, 2.0]);
        let p = ModelParams::new(1.0, c(0.0, 0.0)).unwrap();
        assert_eq!(spectral_test_mult(MultKind::Positive, &m, c(0.0, 0.0), &p).unwrap(), SpectralVerdict::ZeroAtomCase(true));
    }

    #[test]
    fn flow_initial_momentum_matches_resolvent() {
        let d = delta1();
        let s = initial_state_mult(&d, c(-1.0, 0.0), 1e-6).unwrap();
        assert!((s.p_epsilon - 1.0 / (4.0 + 1e-6)).abs() < 1e-15);
        let blow = blow_up_time_mult(&d, c(-1.0, 0.0), 1e-6, 100.0, FlowOptions::default()).unwrap();
        assert!((3.9..=4.1).contains(&blow), "{blow}");
    }

    #[test]
    fn flow_nearly_frozen_far_away() {
        let d = delta1();
        let s = hamilton_flow_mult(&d, c(50.0, 0.0), 10.0, 1e-3, FlowOptions::default()).unwrap();
        assert!((s.epsilon - 10.0).abs() / 10.0 < 2e-3, "{}", s.epsilon);
    }
}
