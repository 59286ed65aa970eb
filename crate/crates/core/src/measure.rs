//! Compactly supported probability measures and their integral transforms.
//!
//! Atomic measures are evaluated by direct finite sums. Densities live on a
//! fixed quadrature grid (Gauss–Legendre on intervals, trapezoid on the
//! circle); close to the support the grid sum is replaced by adaptive
//! quadrature of the piecewise-linear interpolant, or refused for the
//! transforms that would be silently inaccurate there.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, integrate_split};
use crate::C64;

pub const DEFAULT_DENSITY_NODES: usize = 2048;

/// The guard band is this many node spacings wide.
const GUARD_SPACINGS: f64 = 10.0;
const ADAPTIVE_TOL: f64 = 1e-13;
/// Relative density below which a point of the support counts as a zero of the density.
const VANISHING_DENSITY: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupportKind {
    #[serde(rename = "real")]
    RealLine,
    #[serde(rename = "nonneg")]
    NonnegativeHalfLine,
    #[serde(rename = "circle")]
    UnitCircle,
    #[serde(rename = "complex")]
    ComplexPlane,
}

impl fmt::Display for SupportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SupportKind::RealLine => "the real line",
            SupportKind::NonnegativeHalfLine => "the nonnegative half-line",
            SupportKind::UnitCircle => "the unit circle",
            SupportKind::ComplexPlane => "the complex plane",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub position: C64,
    pub weight: f64,
}

/// One connected piece of a density: an interval of the real line, or the
/// whole circle parametrized by angle on `[0, 2π)`.
#[derive(Clone, Debug)]
pub struct DensityPiece {
    lo: f64,
    hi: f64,
    periodic: bool,
    params: Vec<f64>,
    values: Vec<f64>,
    points: Vec<C64>,
    masses: Vec<f64>,
    spacing: f64,
    max_value: f64,
}

impl DensityPiece {
    fn new(lo: f64, hi: f64, periodic: bool, params: Vec<f64>, values: Vec<f64>, weights: &[f64]) -> Self {
        let points = params
            .iter()
            .map(|&u| if periodic { C64::from_polar(1.0, u) } else { C64::new(u, 0.0) })
            .collect();
        let masses = values.iter().zip(weights).map(|(v, w)| v * w).collect();
        let mut spacing = params.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max);
        if let (Some(first), Some(last)) = (params.first(), params.last()) {
            if periodic {
                spacing = spacing.max(first + 2.0 * PI - last);
            } else {
                spacing = spacing.max(first - lo).max(hi - last);
            }
        }
        let max_value = values.iter().cloned().fold(0.0, f64::max);
        DensityPiece {
            lo,
            hi,
            periodic,
            params,
            values,
            points,
            masses,
            spacing,
            max_value,
        }
    }

    fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
        for m in &mut self.masses {
            *m *= factor;
        }
        self.max_value *= factor;
    }

    fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    fn position(&self, u: f64) -> C64 {
        if self.periodic {
            C64::from_polar(1.0, u)
        } else {
            C64::new(u, 0.0)
        }
    }

    /// Parameter of the support point nearest to `z` and the distance to it.
    fn nearest(&self, z: C64) -> (f64, f64) {
        if self.periodic {
            let r = z.norm();
            let s = if r == 0.0 { 0.0 } else { z.arg().rem_euclid(2.0 * PI) };
            (s, (r - 1.0).abs())
        } else {
            let s = z.re.clamp(self.lo, self.hi);
            (s, (z - C64::new(s, 0.0)).norm())
        }
    }

    fn guard(&self) -> f64 {
        GUARD_SPACINGS * self.spacing
    }

    /// Piecewise-linear interpolant of the density; zero outside the piece.
    pub fn density_at(&self, u: f64) -> f64 {
        let n = self.params.len();
        if n == 0 {
            return 0.0;
        }
        if n == 1 {
            return self.values[0];
        }
        if self.periodic {
            let u = u.rem_euclid(2.0 * PI);
            let i = self.params.partition_point(|&p| p <= u);
            let (a, fa, b, fb) = if i == 0 {
                (self.params[n - 1] - 2.0 * PI, self.values[n - 1], self.params[0], self.values[0])
            } else if i == n {
                (self.params[n - 1], self.values[n - 1], self.params[0] + 2.0 * PI, self.values[0])
            } else {
                (self.params[i - 1], self.values[i - 1], self.params[i], self.values[i])
            };
            return fa + (fb - fa) * (u - a) / (b - a);
        }
        if u < self.lo || u > self.hi {
            return 0.0;
        }
        let i = self.params.partition_point(|&p| p <= u).clamp(1, n - 1);
        let (a, b) = (self.params[i - 1], self.params[i]);
        let (fa, fb) = (self.values[i - 1], self.values[i]);
        (fa + (fb - fa) * (u - a) / (b - a)).max(0.0)
    }

    /// Adaptive integral of `density · kernel(position)` with a breakpoint at `s`.
    fn adaptive<K: Fn(C64) -> f64>(&self, kernel: &K, s: f64) -> f64 {
        let g = |u: f64| {
            let f = self.density_at(u);
            if f == 0.0 {
                0.0
            } else {
                f * kernel(self.position(u))
            }
        };
        if self.periodic {
            integrate_split(g, s - PI, s + PI, s, ADAPTIVE_TOL)
        } else {
            integrate_split(g, self.lo, self.hi, s, ADAPTIVE_TOL)
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.params.iter().cloned().zip(self.values.iter().cloned())
    }
}

#[derive(Clone, Debug)]
pub enum Representation {
    Atomic(Vec<Atom>),
    Density(Vec<DensityPiece>),
}

/// Whether a kernel's singularity at the evaluation point is integrable
/// against a density that does not vanish there.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Singularity {
    Integrable,
    NonIntegrable,
}

#[derive(Clone, Debug)]
pub struct SpectralMeasure {
    support: SupportKind,
    repr: Representation,
}

fn check_position(kind: SupportKind, z: C64) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidMeasure(format!("non-finite atom position {z}")));
    }
    let ok = match kind {
        SupportKind::RealLine => z.im == 0.0,
        SupportKind::NonnegativeHalfLine => z.im == 0.0 && z.re >= 0.0,
        SupportKind::UnitCircle => (z.norm() - 1.0).abs() <= 1e-12,
        SupportKind::ComplexPlane => true,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidMeasure(format!("atom {z} does not lie on {kind}")))
    }
}

fn normalization_factor(total: f64) -> Result<f64> {
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::InvalidMeasure(format!("total mass {total} is not a positive number")));
    }
    if (total - 1.0).abs() > 1e-9 {
        log::warn!("measure has total mass {total}; renormalizing to 1");
    }
    Ok(1.0 / total)
}

impl SpectralMeasure {
    /// Weighted atoms; weights are renormalized to sum to one.
    pub fn atomic(kind: SupportKind, atoms: impl IntoIterator<Item = (C64, f64)>) -> Result<Self> {
        let mut out = Vec::new();
        for (z, w) in atoms {
            check_position(kind, z)?;
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidMeasure(format!("atom weight {w} is not a nonnegative number")));
            }
            if w > 0.0 {
                out.push(Atom { position: z, weight: w });
            }
        }
        let factor = normalization_factor(out.iter().map(|a| a.weight).sum())?;
        if factor != 1.0 {
            for a in &mut out {
                a.weight *= factor;
            }
        }
        Ok(SpectralMeasure {
            support: kind,
            repr: Representation::Atomic(out),
        })
    }

    pub fn point_mass(kind: SupportKind, z: C64) -> Result<Self> {
        Self::atomic(kind, [(z, 1.0)])
    }

    /// Equal-weight atoms at the given points.
    pub fn uniform_atoms(kind: SupportKind, points: &[C64]) -> Result<Self> {
        Self::atomic(kind, points.iter().map(|&z| (z, 1.0)))
    }

    /// Density `f` on `[lo, hi]`, sampled at `nodes` Gauss–Legendre nodes.
    pub fn density_interval(
        kind: SupportKind,
        lo: f64,
        hi: f64,
        f: impl Fn(f64) -> f64,
        nodes: usize,
    ) -> Result<Self> {
        if !matches!(kind, SupportKind::RealLine | SupportKind::NonnegativeHalfLine) {
            return Err(Error::InvalidMeasure(format!("interval densities cannot live on {kind}")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidMeasure(format!("bad interval [{lo}, {hi}]")));
        }
        if kind == SupportKind::NonnegativeHalfLine && lo < 0.0 {
            return Err(Error::InvalidMeasure(format!("interval [{lo}, {hi}] is not inside [0, inf)")));
        }
        let (x, w) = gauss_legendre(nodes.max(2), lo, hi);
        let values: Vec<f64> = x.iter().map(|&u| f(u)).collect();
        Self::from_pieces(kind, vec![DensityPiece::new(lo, hi, false, x, validate(values)?, &w)])
    }

    /// Density `f(θ)` with respect to `dθ` on the unit circle, trapezoid rule.
    pub fn density_circle(f: impl Fn(f64) -> f64, nodes: usize) -> Result<Self> {
        let n = nodes.max(3);
        let h = 2.0 * PI / n as f64;
        let x: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * h).collect();
        let values: Vec<f64> = x.iter().map(|&u| f(u)).collect();
        let w = vec![h; n];
        Self::from_pieces(
            SupportKind::UnitCircle,
            vec![DensityPiece::new(0.0, 2.0 * PI, true, x, validate(values)?, &w)],
        )
    }

    pub fn uniform_circle(nodes: usize) -> Result<Self> {
        Self::density_circle(|_| 1.0 / (2.0 * PI), nodes)
    }

    /// Density known only at weighted sample points (positions increasing)
    /// on a real interval. Used for recovered densities.
    pub fn from_weighted_samples(kind: SupportKind, params: Vec<f64>, values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if params.len() < 2 || params.len() != values.len() || params.len() != weights.len() {
            return Err(Error::InvalidMeasure("sample arrays must have equal length >= 2".into()));
        }
        if !params.windows(2).all(|p| p[0] < p[1]) {
            return Err(Error::InvalidMeasure("sample positions must be strictly increasing".into()));
        }
        if !matches!(kind, SupportKind::RealLine | SupportKind::NonnegativeHalfLine) {
            return Err(Error::InvalidMeasure(format!("sampled densities cannot live on {kind}")));
        }
        let lo = params[0];
        let hi = params[params.len() - 1];
        let values = validate(values)?;
        Self::from_pieces(kind, vec![DensityPiece::new(lo, hi, false, params, values, &weights)])
    }

    /// Piecewise-linear interpolant of `(x, f(x))` samples, resampled on the quadrature grid.
    /// On the circle `x` is the angle.
    pub fn from_grid(kind: SupportKind, grid: &[(f64, f64)], nodes: usize) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::InvalidMeasure("a density grid needs at least two samples".into()));
        }
        let mut g: Vec<(f64, f64)> = grid.to_vec();
        if g.iter().any(|(x, f)| !x.is_finite() || !f.is_finite()) {
            return Err(Error::InvalidMeasure("density grid has non-finite entries".into()));
        }
        g.sort_by(|a, b| a.0.total_cmp(&b.0));
        if !g.windows(2).all(|p| p[0].0 < p[1].0) {
            return Err(Error::InvalidMeasure("density grid has repeated abscissae".into()));
        }
        let xs: Vec<f64> = g.iter().map(|p| p.0).collect();
        let fs: Vec<f64> = g.iter().map(|p| p.1).collect();
        let interp = move |u: f64| -> f64 {
            let n = xs.len();
            let i = xs.partition_point(|&p| p <= u).clamp(1, n - 1);
            let (a, b) = (xs[i - 1], xs[i]);
            fs[i - 1] + (fs[i] - fs[i - 1]) * (u - a) / (b - a)
        };
        match kind {
            SupportKind::UnitCircle => {
                let (a, b) = (g[0].0, g[g.len() - 1].0);
                let (fa, fb) = (g[0].1, g[g.len() - 1].1);
                let period_gap = a + 2.0 * PI - b;
                if period_gap < 0.0 {
                    return Err(Error::InvalidMeasure("circle grid spans more than one period".into()));
                }
                Self::density_circle(
                    |theta| {
                        let u = theta.rem_euclid(2.0 * PI);
                        let u = if u < a { u + 2.0 * PI } else { u };
                        if u <= b {
                            interp(u)
                        } else if period_gap > 0.0 {
                            fb + (fa - fb) * (u - b) / period_gap
                        } else {
                            fb
                        }
                    },
                    nodes,
                )
            }
            SupportKind::RealLine | SupportKind::NonnegativeHalfLine => {
                let (lo, hi) = (g[0].0, g[g.len() - 1].0);
                Self::density_interval(kind, lo, hi, interp, nodes)
            }
            SupportKind::ComplexPlane => Err(Error::InvalidMeasure("densities on the complex plane are not supported".into())),
        }
    }

    fn from_pieces(kind: SupportKind, mut pieces: Vec<DensityPiece>) -> Result<Self> {
        let factor = normalization_factor(pieces.iter().map(|p| p.total()).sum())?;
        if factor != 1.0 {
            for p in &mut pieces {
                p.scale(factor);
            }
        }
        Ok(SpectralMeasure {
            support: kind,
            repr: Representation::Density(pieces),
        })
    }

    pub fn support_kind(&self) -> SupportKind {
        self.support
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn atoms(&self) -> Option<&[Atom]> {
        match &self.repr {
            Representation::Atomic(a) => Some(a),
            Representation::Density(_) => None,
        }
    }

    pub fn require_kind(&self, kind: SupportKind) -> Result<()> {
        if self.support == kind {
            Ok(())
        } else {
            Err(Error::WrongSupportKind {
                expected: kind,
                found: self.support,
            })
        }
    }

    /// Point masses of the discrete representation: atoms, or quadrature nodes times weights.
    pub fn masses(&self) -> Vec<(C64, f64)> {
        match &self.repr {
            Representation::Atomic(a) => a.iter().map(|a| (a.position, a.weight)).collect(),
            Representation::Density(ps) => ps
                .iter()
                .flat_map(|p| p.points.iter().cloned().zip(p.masses.iter().cloned()))
                .collect(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match &self.repr {
            Representation::Atomic(a) => a.iter().map(|a| a.weight).sum(),
            Representation::Density(ps) => ps.iter().map(|p| p.total()).sum(),
        }
    }

    /// Mass of the atom at `z` (zero for densities and non-atoms).
    pub fn atom_mass_at(&self, z: C64) -> f64 {
        match &self.repr {
            Representation::Atomic(a) => a.iter().filter(|a| a.position == z).map(|a| a.weight).sum(),
            Representation::Density(_) => 0.0,
        }
    }

    /// Distance from `z` to the support: nearest atom, or the hull of each density piece.
    pub fn support_distance(&self, z: C64) -> f64 {
        match &self.repr {
            Representation::Atomic(a) => a.iter().map(|a| (a.position - z).norm()).fold(f64::INFINITY, f64::min),
            Representation::Density(ps) => ps.iter().map(|p| p.nearest(z).1).fold(f64::INFINITY, f64::min),
        }
    }

    /// Largest modulus of a support point.
    pub fn support_radius(&self) -> f64 {
        match &self.repr {
            Representation::Atomic(a) => a.iter().map(|a| a.position.norm()).fold(0.0, f64::max),
            Representation::Density(ps) => ps
                .iter()
                .map(|p| if p.periodic { 1.0 } else { p.lo.abs().max(p.hi.abs()) })
                .fold(0.0, f64::max),
        }
    }

    /// Width of the band around a density's support where grid sums are not trusted.
    pub fn guard_band(&self) -> f64 {
        match &self.repr {
            Representation::Atomic(_) => 0.0,
            Representation::Density(ps) => ps.iter().map(|p| p.guard()).fold(0.0, f64::max),
        }
    }

    fn check_off_support(&self, z: C64) -> Result<()> {
        let on = match &self.repr {
            Representation::Atomic(a) => a
                .iter()
                .any(|a| (a.position - z).norm() <= 4.0 * f64::EPSILON * (1.0 + a.position.norm())),
            Representation::Density(ps) => ps.iter().any(|p| p.nearest(z).1 < p.guard()),
        };
        if on {
            Err(Error::EvaluationOnSupport { point: z })
        } else {
            Ok(())
        }
    }

    fn sum_complex(&self, kernel: impl Fn(C64) -> C64) -> C64 {
        match &self.repr {
            Representation::Atomic(a) => a.iter().map(|a| a.weight * kernel(a.position)).sum(),
            Representation::Density(ps) => ps
                .iter()
                .flat_map(|p| p.points.iter().zip(&p.masses))
                .map(|(&z, &m)| m * kernel(z))
                .sum(),
        }
    }

    /// `G(z) = ∫ 1/(z−ξ) dμ(ξ)`.
    pub fn cauchy_transform(&self, z: C64) -> Result<C64> {
        self.check_off_support(z)?;
        Ok(self.sum_complex(|xi| (z - xi).inv()))
    }

    /// `G'(z) = −∫ 1/(z−ξ)² dμ(ξ)`.
    pub fn cauchy_derivative(&self, z: C64) -> Result<C64> {
        self.check_off_support(z)?;
        Ok(-self.sum_complex(|xi| ((z - xi) * (z - xi)).inv()))
    }

    /// `J(λ) = ½ − λG(λ) = ½∫(ξ+λ)/(ξ−λ) dμ(ξ)`; exactly ½ at the origin.
    pub fn herglotz(&self, lambda: C64) -> Result<C64> {
        if lambda == C64::new(0.0, 0.0) {
            return Ok(C64::new(0.5, 0.0));
        }
        self.check_off_support(lambda)?;
        Ok(0.5 * self.sum_complex(|xi| (xi + lambda) / (xi - lambda)))
    }

    /// `J'(λ) = ∫ ξ/(ξ−λ)² dμ(ξ)`.
    pub fn herglotz_derivative(&self, lambda: C64) -> Result<C64> {
        self.check_off_support(lambda)?;
        Ok(self.sum_complex(|xi| xi / ((xi - lambda) * (xi - lambda))))
    }

    /// `∫ kernel(ξ) dμ(ξ)` for a real kernel singular at most at `ξ = λ`.
    ///
    /// Densities use the grid sum away from the support, adaptive quadrature
    /// of the interpolant inside the guard band, and on the support either
    /// `+∞` (non-integrable singularity over a nonvanishing density) or the
    /// open grid sum.
    pub fn integrate_kernel(&self, lambda: C64, kernel: impl Fn(C64) -> f64, singularity: Singularity) -> f64 {
        match &self.repr {
            Representation::Atomic(a) => a.iter().map(|a| a.weight * kernel(a.position)).sum(),
            Representation::Density(ps) => {
                let mut total = 0.0;
                for p in ps {
                    let (s, d) = p.nearest(lambda);
                    let grid_sum = || p.points.iter().zip(&p.masses).map(|(&z, &m)| m * kernel(z)).sum::<f64>();
                    let on_support = d <= 1e-14 * (1.0 + lambda.norm());
                    let part = if d >= p.guard() {
                        grid_sum()
                    } else if !on_support || singularity == Singularity::Integrable {
                        p.adaptive(&kernel, s)
                    } else if p.density_at(s) > VANISHING_DENSITY * p.max_value {
                        f64::INFINITY
                    } else {
                        grid_sum()
                    };
                    total += part;
                }
                total
            }
        }
    }

    /// `∫ 1/(|ξ−λ|²+ε) dμ(ξ)`; `+∞` when `ε = 0` and the integral diverges.
    pub fn reg_resolvent(&self, lambda: C64, epsilon: f64) -> Result<f64> {
        if epsilon == 0.0 {
            return Ok(self.neg2_trace(lambda));
        }
        if epsilon < 0.0 {
            let d = self.support_distance(lambda);
            if d * d + epsilon <= 0.0 {
                return Err(Error::NegativeEpsilon { epsilon });
            }
        }
        Ok(self.integrate_kernel(
            lambda,
            |xi| 1.0 / ((xi - lambda).norm_sqr() + epsilon),
            Singularity::Integrable,
        ))
    }

    /// `∂/∂ε` of [`Self::reg_resolvent`]: `−∫ 1/(|ξ−λ|²+ε)² dμ(ξ)`.
    pub fn reg_resolvent_derivative(&self, lambda: C64, epsilon: f64) -> f64 {
        let sing = if epsilon == 0.0 { Singularity::NonIntegrable } else { Singularity::Integrable };
        -self.integrate_kernel(lambda, |xi| ((xi - lambda).norm_sqr() + epsilon).powi(-2), sing)
    }

    /// `∫ |ξ−λ|⁻² dμ(ξ)`, possibly `+∞`.
    pub fn neg2_trace(&self, lambda: C64) -> f64 {
        self.integrate_kernel(lambda, |xi| 1.0 / (xi - lambda).norm_sqr(), Singularity::NonIntegrable)
    }

    /// `∫ |ξ−λ|⁻⁴ dμ(ξ)`, possibly `+∞`.
    pub fn neg4_trace(&self, lambda: C64) -> f64 {
        self.integrate_kernel(lambda, |xi| (xi - lambda).norm_sqr().powi(-2), Singularity::NonIntegrable)
    }

    /// `∫ log|ξ−λ|² dμ(ξ)`, possibly `−∞`.
    pub fn log_potential(&self, lambda: C64) -> f64 {
        self.integrate_kernel(lambda, |xi| (xi - lambda).norm_sqr().ln(), Singularity::Integrable)
    }

    /// `∫ |ξ|² dμ(ξ)`.
    pub fn second_moment(&self) -> f64 {
        self.masses().iter().map(|(z, m)| m * z.norm_sqr()).sum()
    }

    /// `½(μ + μ∘(ξ ↦ −ξ))` for a measure on the nonnegative half-line.
    pub fn symmetrize(&self) -> Result<Self> {
        self.require_kind(SupportKind::NonnegativeHalfLine)?;
        let repr = match &self.repr {
            Representation::Atomic(a) => {
                let mut out: Vec<Atom> = Vec::with_capacity(2 * a.len());
                for at in a {
                    if at.position.re == 0.0 {
                        out.push(*at);
                    } else {
                        out.push(Atom { position: -at.position, weight: 0.5 * at.weight });
                        out.push(Atom { position: at.position, weight: 0.5 * at.weight });
                    }
                }
                out.sort_by(|x, y| x.position.re.total_cmp(&y.position.re));
                Representation::Atomic(out)
            }
            Representation::Density(ps) => {
                let mut out = Vec::with_capacity(2 * ps.len());
                for p in ps {
                    let n = p.params.len();
                    let weights: Vec<f64> = (0..n)
                        .map(|i| if p.values[i] == 0.0 { 0.0 } else { p.masses[i] / p.values[i] })
                        .collect();
                    let half: Vec<f64> = p.values.iter().map(|v| 0.5 * v).collect();
                    let mirrored_params: Vec<f64> = p.params.iter().rev().map(|u| -u).collect();
                    let mirrored_values: Vec<f64> = half.iter().rev().cloned().collect();
                    let mirrored_weights: Vec<f64> = weights.iter().rev().cloned().collect();
                    out.push(DensityPiece::new(-p.hi, -p.lo, false, mirrored_params, mirrored_values, &mirrored_weights));
                    out.push(DensityPiece::new(p.lo, p.hi, false, p.params.clone(), half, &weights));
                }
                Representation::Density(out)
            }
        };
        Ok(SpectralMeasure {
            support: SupportKind::RealLine,
            repr,
        })
    }

    /// `μ((−∞, x])` for a measure on the line.
    pub fn cdf(&self, x: f64) -> f64 {
        self.masses().iter().filter(|(z, _)| z.re <= x).map(|(_, m)| m).sum()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: MeasureDoc = serde_json::from_str(s)?;
        doc.build()
    }

    pub fn from_json_value(v: &serde_json::Value) -> Result<Self> {
        let doc: MeasureDoc = serde_json::from_value(v.clone())?;
        doc.build()
    }

    /// JSON document in the load format. Densities are written as their
    /// quadrature-node samples.
    pub fn to_json_value(&self) -> serde_json::Value {
        match &self.repr {
            Representation::Atomic(a) => serde_json::json!({
                "kind": "atomic",
                "support": self.support,
                "atoms": a.iter().map(|a| [a.position.re, a.position.im, a.weight]).collect::<Vec<_>>(),
            }),
            Representation::Density(ps) => serde_json::json!({
                "kind": "density",
                "support": self.support,
                "grid": ps.iter().flat_map(|p| p.samples()).map(|(x, f)| [x, f]).collect::<Vec<_>>(),
            }),
        }
    }
}

fn validate(values: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidMeasure(format!("density value {v} is not a nonnegative number")));
    }
    Ok(values)
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum MeasureDoc {
    Atomic {
        support: SupportKind,
        atoms: Vec<[f64; 3]>,
    },
    Density {
        support: SupportKind,
        grid: Vec<[f64; 2]>,
        #[serde(default)]
        nodes: Option<usize>,
    },
}

impl MeasureDoc {
    fn build(self) -> Result<SpectralMeasure> {
        match self {
            MeasureDoc::Atomic { support, atoms } => {
                SpectralMeasure::atomic(support, atoms.iter().map(|a| (C64::new(a[0], a[1]), a[2])))
            }
            MeasureDoc::Density { support, grid, nodes } => {
                let g: Vec<(f64, f64)> = grid.iter().map(|p| (p[0], p[1])).collect();
                SpectralMeasure::from_grid(support, &g, nodes.unwrap_or(DEFAULT_DENSITY_NODES))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn bernoulli() -> SpectralMeasure {
        SpectralMeasure::uniform_atoms(SupportKind::RealLine, &[c(-1.0, 0.0), c(1.0, 0.0)]).unwrap()
    }

    fn cubic(nodes: usize) -> SpectralMeasure {
        SpectralMeasure::density_interval(SupportKind::NonnegativeHalfLine, 0.0, 1.0, |x| 3.0 * x * x, nodes).unwrap()
    }

    #[test]
    fn cauchy_examples() {
        let d0 = SpectralMeasure::point_mass(SupportKind::RealLine, c(0.0, 0.0)).unwrap();
        assert_eq!(d0.cauchy_transform(c(2.0, 0.0)).unwrap(), c(0.5, 0.0));
        let g = bernoulli().cauchy_transform(c(2.0, 0.0)).unwrap();
        assert!((g - c(2.0 / 3.0, 0.0)).norm() < 1e-15);
        let u = SpectralMeasure::uniform_circle(DEFAULT_DENSITY_NODES).unwrap();
        let g = u.cauchy_transform(c(2.0, 0.0)).unwrap();
        assert!((g - c(0.5, 0.0)).norm() < 1e-13, "{g}");
        assert!(matches!(
            bernoulli().cauchy_transform(c(1.0, 0.0)),
            Err(Error::EvaluationOnSupport { .. })
        ));
        assert!(matches!(
            cubic(256).cauchy_transform(c(0.5, 1e-4)),
            Err(Error::EvaluationOnSupport { .. })
        ));
    }

    #[test]
    fn herglotz_examples() {
        let d1 = SpectralMeasure::point_mass(SupportKind::UnitCircle, c(1.0, 0.0)).unwrap();
        assert_eq!(d1.herglotz(c(0.0, 0.0)).unwrap(), c(0.5, 0.0));
        assert!(d1.herglotz(c(-1.0, 0.0)).unwrap().norm() < 1e-15);
        assert!((d1.herglotz(c(2.0, 0.0)).unwrap() - c(-1.5, 0.0)).norm() < 1e-15);
        // agrees with ½ − λG
        let z = c(0.3, 1.7);
        let b = bernoulli();
        let j = b.herglotz(z).unwrap();
        assert!((j - (0.5 - z * b.cauchy_transform(z).unwrap())).norm() < 1e-14);
    }

    #[test]
    fn resolvent_examples() {
        let d0 = SpectralMeasure::point_mass(SupportKind::RealLine, c(0.0, 0.0)).unwrap();
        assert_eq!(d0.reg_resolvent(c(0.0, 0.0), 1.0).unwrap(), 1.0);
        assert_eq!(bernoulli().reg_resolvent(c(0.0, 0.0), 0.0).unwrap(), 1.0);
        assert!((bernoulli().reg_resolvent(c(2.0, 0.0), 0.0).unwrap() - 5.0 / 9.0).abs() < 1e-15);
        assert!(matches!(
            bernoulli().reg_resolvent(c(0.9, 0.0), -0.02),
            Err(Error::NegativeEpsilon { .. })
        ));
        assert!(bernoulli().reg_resolvent(c(0.0, 0.0), -0.01).unwrap() > 1.0);
    }

    #[test]
    fn neg2_examples() {
        let d1 = SpectralMeasure::point_mass(SupportKind::RealLine, c(1.0, 0.0)).unwrap();
        assert_eq!(d1.neg2_trace(c(1.0, 0.0)), f64::INFINITY);
        assert!((bernoulli().neg2_trace(c(0.0, 2.0)) - 0.2).abs() < 1e-15);
        let v = cubic(DEFAULT_DENSITY_NODES).neg2_trace(c(0.0, 0.0));
        assert!((v - 3.0).abs() < 1e-10, "{v}");
        // nonvanishing density under the evaluation point diverges
        assert_eq!(cubic(256).neg2_trace(c(0.5, 0.0)), f64::INFINITY);
    }

    #[test]
    fn neg2_near_support_uses_adaptive_quadrature() {
        // ∫_0^1 3ξ²/((ξ−1.001)²) dξ by an independent fine composite rule
        let lam = 1.001;
        let m = cubic(DEFAULT_DENSITY_NODES);
        let n = 2_000_000;
        let h = 1.0 / n as f64;
        let oracle: f64 = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                3.0 * x * x / ((x - lam) * (x - lam)) * h
            })
            .sum();
        let v = m.neg2_trace(c(lam, 0.0));
        assert!((v - oracle).abs() / oracle < 1e-6, "{v} vs {oracle}");
    }

    #[test]
    fn log_potential_examples() {
        let d0 = SpectralMeasure::point_mass(SupportKind::RealLine, c(0.0, 0.0)).unwrap();
        assert!((d0.log_potential(c(std::f64::consts::E, 0.0)) - 2.0).abs() < 1e-15);
        assert_eq!(d0.log_potential(c(0.0, 0.0)), f64::NEG_INFINITY);
        let u = SpectralMeasure::uniform_circle(DEFAULT_DENSITY_NODES).unwrap();
        assert!(u.log_potential(c(0.0, 0.0)).abs() < 1e-14);
    }

    #[test]
    fn symmetrize_examples() {
        let d1 = SpectralMeasure::point_mass(SupportKind::NonnegativeHalfLine, c(1.0, 0.0)).unwrap();
        let s = d1.symmetrize().unwrap();
        assert_eq!(s.support_kind(), SupportKind::RealLine);
        assert_eq!(s.atoms().unwrap().len(), 2);
        assert_eq!(s.atom_mass_at(c(-1.0, 0.0)), 0.5);
        let two =
            SpectralMeasure::uniform_atoms(SupportKind::NonnegativeHalfLine, &[c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
        let s = two.symmetrize().unwrap();
        for x in [-2.0, -1.0, 1.0, 2.0] {
            assert_eq!(s.atom_mass_at(c(x, 0.0)), 0.25);
        }
        let s = cubic(512).symmetrize().unwrap();
        assert!((s.total_mass() - 1.0).abs() < 1e-13);
        // even density 1.5ξ²: second moment 3/5, odd moments vanish
        assert!((s.second_moment() - 0.6).abs() < 1e-13);
        let first: f64 = s.masses().iter().map(|(z, m)| m * z.re).sum();
        assert!(first.abs() < 1e-15);
        assert!(matches!(bernoulli().symmetrize(), Err(Error::WrongSupportKind { .. })));
    }

    #[test]
    fn renormalizes_and_validates() {
        let m = SpectralMeasure::atomic(SupportKind::RealLine, [(c(0.0, 0.0), 2.0), (c(1.0, 0.0), 2.0)]).unwrap();
        assert!((m.total_mass() - 1.0).abs() < 1e-15);
        assert!(SpectralMeasure::point_mass(SupportKind::NonnegativeHalfLine, c(-1.0, 0.0)).is_err());
        assert!(SpectralMeasure::point_mass(SupportKind::UnitCircle, c(1.1, 0.0)).is_err());
        assert!(SpectralMeasure::atomic(SupportKind::RealLine, [(c(0.0, 0.0), -1.0)]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = SpectralMeasure::from_json_str(
            r#"{"kind":"atomic","support":"circle","atoms":[[1,0,0.5],[-1,0,0.5]]}"#,
        )
        .unwrap();
        assert_eq!(m.support_kind(), SupportKind::UnitCircle);
        let again = SpectralMeasure::from_json_value(&m.to_json_value()).unwrap();
        assert_eq!(again.atoms().unwrap(), m.atoms().unwrap());

        let grid: Vec<[f64; 2]> = (0..=200).map(|i| {
            let x = -1.0 + i as f64 / 100.0;
            [x, 0.5]
        }).collect();
        let doc = serde_json::json!({"kind": "density", "support": "real", "grid": grid});
        let u = SpectralMeasure::from_json_value(&doc).unwrap();
        let g = u.cauchy_transform(c(0.0, 2.0)).unwrap();
        let exact = 0.5 * ((c(0.0, 2.0) + 1.0) / (c(0.0, 2.0) - 1.0)).ln();
        assert!((g - exact).norm() < 1e-12);
    }

    #[test]
    fn density_converges_under_refinement() {
        let a = cubic(1024);
        let b = cubic(2048);
        for z in [c(1.5, 0.0), c(0.5, 0.5), c(-0.3, 0.1), c(0.2, -2.0)] {
            assert!((a.cauchy_transform(z).unwrap() - b.cauchy_transform(z).unwrap()).norm() < 1e-8);
            assert!((a.log_potential(z) - b.log_potential(z)).abs() < 1e-8);
            assert!((a.neg2_trace(z) - b.neg2_trace(z)).abs() < 1e-8);
        }
    }
}
