//! R-diagonal elements `u h`: annulus radii, free convolution with a
//! semicircular law via the subordination map `H_t(z) = z + t G_μ̃(z)`, and
//! the inner radius of the Brown support of `u h + c_t`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{SpectralMeasure, SupportKind};
use crate::C64;

const VT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnnulusSpec {
    pub inner_radius: f64,
    pub outer_radius: f64,
}

/// `‖h⁻¹‖₂² = ∫ ξ⁻² dμ_h`, possibly `+∞`.
fn inverse_second_moment(mu_h: &SpectralMeasure) -> f64 {
    mu_h.neg2_trace(C64::new(0.0, 0.0))
}

/// Inner radius `(∫ξ⁻²)^{−1/2}` (zero if divergent) and outer radius `(∫ξ²)^{1/2}`.
pub fn hl_radii(mu_h: &SpectralMeasure) -> Result<AnnulusSpec> {
    mu_h.require_kind(SupportKind::NonnegativeHalfLine)?;
    let m = inverse_second_moment(mu_h);
    Ok(AnnulusSpec {
        inner_radius: if m.is_infinite() { 0.0 } else { m.sqrt().recip() },
        outer_radius: mu_h.second_moment().sqrt(),
    })
}

/// Smallest `y ≥ 0` with `∫ dμ̃(ξ)/((x−ξ)²+y²) ≤ 1/t`, by bisection.
pub fn vt(mu_sym: &SpectralMeasure, t: f64, x: f64) -> f64 {
    let z = C64::new(x, 0.0);
    let integral = |y: f64| mu_sym.reg_resolvent(z, y * y).unwrap_or(f64::INFINITY);
    let bound = 1.0 / t;
    if integral(0.0) <= bound {
        return 0.0;
    }
    let diam = 2.0 * mu_sym.support_radius();
    let (mut lo, mut hi) = (0.0, t.sqrt() * (1.0 + diam));
    while hi - lo > VT_TOL {
        let mid = 0.5 * (lo + hi);
        if integral(mid) <= bound {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `H_t(z) = z + t G_μ̃(z)` on `Ω_t = {Im z > v_t(Re z)}`.
pub fn biane_ht(mu_sym: &SpectralMeasure, t: f64, z: C64) -> Result<C64> {
    if !(z.im > vt(mu_sym, t, z.re)) {
        return Err(Error::OutsideOmega { point: z });
    }
    Ok(z + t * mu_sym.cauchy_transform(z)?)
}

/// `√(‖h⁻¹‖₂⁻² − t)`, the inner radius of the Brown support of `u h + c_t`.
pub fn circ_inner_radius(mu_h: &SpectralMeasure, t: f64) -> Result<f64> {
    mu_h.require_kind(SupportKind::NonnegativeHalfLine)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t = {t} must be nonnegative")));
    }
    let m = inverse_second_moment(mu_h);
    let t_max = if m.is_infinite() { 0.0 } else { 1.0 / m };
    if t > t_max {
        return Err(Error::TMaxExceeded { t, t_max });
    }
    Ok((t_max - t).max(0.0).sqrt())
}

/// The same radius through the subordination relation at `z = iε`:
/// `‖(x+c_t)⁻¹‖₂² ≈ G_μ̃(iε)/(−H_t(iε))`.
pub fn inner_radius_via_subordination(mu_h: &SpectralMeasure, t: f64, epsilon: f64) -> Result<f64> {
    let sym = mu_h.symmetrize()?;
    let z = C64::new(0.0, epsilon);
    let h = biane_ht(&sym, t, z)?;
    let g = sym.cauchy_transform(z)?;
    let inv_norm2 = (g / -h).re;
    if !(inv_norm2 > 0.0) {
        return Err(Error::TMaxExceeded { t, t_max: f64::NAN });
    }
    Ok(inv_norm2.sqrt().recip())
}

/// `−Im G(x+iy)/π`, clipped at zero.
pub fn stieltjes_density<G>(g: &G, x: f64, y: f64) -> Result<f64>
where
    G: Fn(C64) -> Result<C64>,
{
    Ok((-g(C64::new(x, y))?.im / std::f64::consts::PI).max(0.0))
}

/// Density `−Im G(x+iy)/π` sampled on `x_grid` (trapezoid weights).
pub fn stieltjes_invert<G>(g: G, x_grid: &[f64], y: f64) -> Result<SpectralMeasure>
where
    G: Fn(C64) -> Result<C64>,
{
    if !(y > 0.0) {
        return Err(Error::InvalidArgument(format!("y = {y} must be positive")));
    }
    let n = x_grid.len();
    if n < 2 {
        return Err(Error::InvalidArgument("x grid needs at least two points".into()));
    }
    let values = x_grid.iter().map(|&x| stieltjes_density(&g, x, y)).collect::<Result<Vec<f64>>>()?;
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let left = if i > 0 { x_grid[i] - x_grid[i - 1] } else { 0.0 };
            let right = if i + 1 < n { x_grid[i + 1] - x_grid[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect();
    SpectralMeasure::from_weighted_samples(SupportKind::RealLine, x_grid.to_vec(), values, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn half(points: &[f64]) -> SpectralMeasure {
        let pts: Vec<C64> = points.iter().map(|&x| c(x, 0.0)).collect();
        SpectralMeasure::uniform_atoms(SupportKind::NonnegativeHalfLine, &pts).unwrap()
    }

    fn cubic() -> SpectralMeasure {
        SpectralMeasure::density_interval(SupportKind::NonnegativeHalfLine, 0.0, 1.0, |x| 3.0 * x * x, 2048).unwrap()
    }

    #[test]
    fn radii_examples() {
        assert_eq!(hl_radii(&half(&[1.0])).unwrap(), AnnulusSpec { inner_radius: 1.0, outer_radius: 1.0 });
        let r = hl_radii(&half(&[1.0, 2.0])).unwrap();
        assert!((r.inner_radius - 1.6f64.sqrt()).abs() < 1e-14);
        assert!((r.outer_radius - 2.5f64.sqrt()).abs() < 1e-14);
        let r = hl_radii(&cubic()).unwrap();
        assert!((r.inner_radius - 1.0 / 3f64.sqrt()).abs() < 1e-10);
        assert!((r.outer_radius - 0.6f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn vt_examples() {
        let sym = half(&[1.0]).symmetrize().unwrap();
        let v = vt(&sym, 3.0, 0.0);
        // ∫ = 1/(1+y²) ≤ 1/3 ⇔ y ≥ √2
        assert!((v - 2f64.sqrt()).abs() < 1e-9);
        assert_eq!(vt(&sym, 0.01, 10.0), 0.0);
        assert!(vt(&sym, 1e-8, 0.5) == 0.0);
    }

    #[test]
    fn ht_examples() {
        let d0 = SpectralMeasure::point_mass(SupportKind::RealLine, c(0.0, 0.0)).unwrap();
        let h = biane_ht(&d0, 0.5, c(0.0, 1.0)).unwrap();
        assert!((h - c(0.0, 0.5)).norm() < 1e-15);
        let sym = half(&[1.0]).symmetrize().unwrap();
        let h = biane_ht(&sym, 1.0, c(0.0, 2.0)).unwrap();
        assert!((h - c(0.0, 1.6)).norm() < 1e-14);
        assert!(matches!(biane_ht(&sym, 3.0, c(0.0, 1.0)), Err(Error::OutsideOmega { .. })));
    }

    #[test]
    fn inner_radius_examples() {
        let m = half(&[1.0, 2.0]);
        assert!((circ_inner_radius(&m, 0.0).unwrap() - 1.6f64.sqrt()).abs() < 1e-14);
        assert!(circ_inner_radius(&m, 1.6).unwrap() < 1e-7);
        assert!(matches!(circ_inner_radius(&m, 1.7), Err(Error::TMaxExceeded { .. })));
        let v = circ_inner_radius(&cubic(), 0.1).unwrap();
        assert!((v - (1.0 / 3.0 - 0.1f64).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn subordination_route_agrees_with_formula() {
        let m = half(&[1.0, 2.0]);
        for t in [0.1, 0.5, 1.0] {
            let a = circ_inner_radius(&m, t).unwrap();
            let b = inner_radius_via_subordination(&m, t, 1e-6).unwrap();
            assert!((a - b).abs() < 1e-6, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn stieltjes_density_vanishes_where_g_is_real() {
        // G(z) = 1/(z−5) is real on the real axis away from 5
        let g = |z: C64| Ok((z - 5.0).inv());
        for x in [-1.0, 0.0, 2.0] {
            assert_eq!(stieltjes_density(&g, x, 0.0).unwrap(), 0.0);
            assert!(stieltjes_density(&g, x, 1e-3).unwrap() < 1e-4);
        }
    }

    #[test]
    fn stieltjes_recovers_two_atoms() {
        let b = SpectralMeasure::uniform_atoms(SupportKind::RealLine, &[c(-1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let grid: Vec<f64> = (0..=40_000).map(|i| -2.0 + i as f64 * 1e-4).collect();
        let m = stieltjes_invert(|z| b.cauchy_transform(z), &grid, 1e-3).unwrap();
        assert!((m.cdf(0.0) - 0.5).abs() < 1e-2);
    }
}
