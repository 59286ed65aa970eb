//! Newton path-following for inverting holomorphic maps.
//!
//! A map is given as `λ ↦ (f(λ), f'(λ))`. Starting from a known pair
//! `f(λ₀) = z₀`, the target `z₁` is approached along the straight segment
//! `z₀ → z₁` with predictor–corrector steps, halving the step whenever the
//! corrector fails, jumps away from the predicted branch, or hits a point
//! where the map cannot be evaluated.

use crate::error::{Error, Result};
use crate::C64;

const NEWTON_ITERS: usize = 40;
const MIN_STEP: f64 = 1e-10;
const MAX_STEPS: usize = 100_000;

fn residual_tol(z: C64) -> f64 {
    1e-13 * z.norm().max(1.0)
}

/// Plain Newton iteration for `f(λ) = target` from `seed`.
pub fn newton_solve<F>(map: &F, target: C64, seed: C64) -> Option<C64>
where
    F: Fn(C64) -> Result<(C64, C64)>,
{
    let mut lambda = seed;
    for _ in 0..NEWTON_ITERS {
        let (v, d) = map(lambda).ok()?;
        let r = v - target;
        if r.norm() <= residual_tol(target) {
            return Some(lambda);
        }
        if d.norm() == 0.0 || !d.is_finite() {
            return None;
        }
        let step = r / d;
        lambda -= step;
        if !lambda.is_finite() {
            return None;
        }
        if step.norm() <= 1e-15 * lambda.norm().max(1.0) {
            let (v, _) = map(lambda).ok()?;
            return ((v - target).norm() <= 1e3 * residual_tol(target)).then_some(lambda);
        }
    }
    None
}

/// Continue the branch through `f(λ_from) = z_from` along the segment to `z_to`.
pub fn follow_segment<F>(map: &F, z_from: C64, lambda_from: C64, z_to: C64) -> Result<C64>
where
    F: Fn(C64) -> Result<(C64, C64)>,
{
    let fail = || Error::ContinuationFailed { target: z_to };
    let mut s = 0.0;
    let mut h: f64 = 0.05;
    let mut lambda = lambda_from;
    let mut z = z_from;
    let mut steps = 0;
    while s < 1.0 {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(fail());
        }
        let s_next = (s + h).min(1.0);
        let z_next = z_from + (z_to - z_from) * s_next;
        let accepted = map(lambda).ok().and_then(|(_, d)| {
            if d.norm() == 0.0 {
                return None;
            }
            let predicted = lambda + (z_next - z) / d;
            let corrected = newton_solve(map, z_next, predicted)?;
            let predicted_move = (predicted - lambda).norm();
            let drift = (corrected - predicted).norm();
            (drift <= 0.3 * predicted_move + 1e-12 * lambda.norm().max(1.0)).then_some(corrected)
        });
        match accepted {
            Some(next) => {
                lambda = next;
                z = z_next;
                s = s_next;
                h = (h * 1.5).min(0.25);
            }
            None => {
                h *= 0.5;
                if h < MIN_STEP {
                    return Err(fail());
                }
            }
        }
    }
    Ok(lambda)
}

/// Where to start the paths of [`exterior_preimage`].
#[derive(Clone, Copy, Debug)]
pub struct PathStarts {
    /// Radius of the far circle in the `z`-plane.
    pub far_radius: f64,
    /// `f(λ) ≈ scale · λ` for large `λ`; seeds the far starting points.
    pub scale_at_infinity: C64,
    /// A small exterior point near the origin to start an outward path from, if any.
    pub near_origin: Option<C64>,
}

const START_ANGLES: [f64; 8] = [0.0, 0.25, -0.25, 0.5, -0.5, 0.75, -0.75, 1.0];

/// Preimage of `z` in the exterior set, continued from far out along several
/// directions (and optionally from near the origin).
///
/// `Ok(Some(λ))` when some path ends in an exterior point; `Ok(None)` when
/// every completed path ends outside the exterior set; an error when no path
/// could be completed at all.
pub fn exterior_preimage<F, E>(map: &F, z: C64, starts: PathStarts, exterior: E) -> Result<Option<C64>>
where
    F: Fn(C64) -> Result<(C64, C64)>,
    E: Fn(C64) -> bool,
{
    let mut completed = false;
    let base = z.arg();
    let mut attempt = |z0: C64, l0: C64| -> Option<C64> {
        match follow_segment(map, z0, l0, z) {
            Ok(l) if exterior(l) => Some(l),
            Ok(_) => {
                completed = true;
                None
            }
            Err(_) => None,
        }
    };
    for da in START_ANGLES {
        let z0 = C64::from_polar(starts.far_radius, base + std::f64::consts::PI * da);
        let Some(l0) = newton_solve(map, z0, z0 / starts.scale_at_infinity) else {
            continue;
        };
        if !exterior(l0) {
            continue;
        }
        if let Some(l) = attempt(z0, l0) {
            return Ok(Some(l));
        }
    }
    if let Some(l0) = starts.near_origin {
        if exterior(l0) {
            if let Ok((z0, _)) = map(l0) {
                if let Some(l) = attempt(z0, l0) {
                    return Ok(Some(l));
                }
            }
        }
    }
    if completed {
        Ok(None)
    } else {
        Err(Error::ContinuationFailed { target: z })
    }
}
