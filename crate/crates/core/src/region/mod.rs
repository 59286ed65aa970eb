//! Grid evaluation, level-set extraction, and boundary images.

mod contour;
mod emit;

pub use contour::{extract_levelset, extract_levelset_refined};
pub use emit::{emit_boundary, emit_grid, parse_pgm, quantize, EmitMeta, Format, PgmImage, REGION_SCHEMA};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Maximum number of bisection levels when refining one boundary segment.
const MAX_REFINE_DEPTH: u32 = 8;
/// A mapped segment longer than this multiple of its source gets midpoints.
const REFINE_STRETCH: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Bounds {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let b = Bounds { re_min, re_max, im_min, im_max };
        b.validate()?;
        Ok(b)
    }

    pub fn square(half_width: f64) -> Self {
        Bounds {
            re_min: -half_width,
            re_max: half_width,
            im_min: -half_width,
            im_max: half_width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.re_min, self.re_max, self.im_min, self.im_max].iter().all(|v| v.is_finite());
        if finite && self.re_min < self.re_max && self.im_min < self.im_max {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("degenerate grid bounds {self:?}")))
        }
    }
}

/// Values of a function at the cell centers of a rectangular grid.
///
/// `values[j * nx + i]` is the value at real index `i`, imaginary index `j`,
/// with `j = 0` the row of smallest imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub bounds: Bounds,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn dx(&self) -> f64 {
        (self.bounds.re_max - self.bounds.re_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.bounds.im_max - self.bounds.im_min) / self.ny as f64
    }

    pub fn node(&self, i: usize, j: usize) -> C64 {
        node(&self.bounds, self.nx, self.ny, i, j)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    /// Indices of the node closest to `z`.
    pub fn nearest_node(&self, z: C64) -> (usize, usize) {
        let fi = ((z.re - self.bounds.re_min) / self.dx() - 0.5).round();
        let fj = ((z.im - self.bounds.im_min) / self.dy() - 0.5).round();
        (fi.clamp(0.0, (self.nx - 1) as f64) as usize, fj.clamp(0.0, (self.ny - 1) as f64) as usize)
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.dx().hypot(self.dy())
    }
}

fn node(b: &Bounds, nx: usize, ny: usize, i: usize, j: usize) -> C64 {
    let dx = (b.re_max - b.re_min) / nx as f64;
    let dy = (b.im_max - b.im_min) / ny as f64;
    C64::new(b.re_min + (i as f64 + 0.5) * dx, b.im_min + (j as f64 + 0.5) * dy)
}

/// Evaluate `f` at every cell center, rows in parallel.
pub fn evaluate_grid<F>(f: F, bounds: Bounds, nx: usize, ny: usize) -> Result<Grid>
where
    F: Fn(C64) -> f64 + Sync,
{
    bounds.validate()?;
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidArgument(format!("grid needs at least 2x2 nodes, got {nx}x{ny}")));
    }
    let rows: Vec<Vec<f64>> = (0..ny)
        .into_par_iter()
        .map(|j| (0..nx).map(|i| f(node(&bounds, nx, ny, i, j))).collect())
        .collect();
    Ok(Grid {
        bounds,
        nx,
        ny,
        values: rows.into_iter().flatten().collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<C64>,
    pub closed: bool,
}

impl Polyline {
    /// Consecutive point pairs, including the closing pair for closed chains.
    pub fn segments(&self) -> impl Iterator<Item = (C64, C64)> + '_ {
        let n = self.points.len();
        let count = if self.closed && n > 1 { n } else { n.saturating_sub(1) };
        (0..count).map(move |k| (self.points[k], self.points[(k + 1) % n]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub polylines: Vec<Polyline>,
    pub level: f64,
}

impl Boundary {
    pub fn is_empty(&self) -> bool {
        self.polylines.iter().all(|p| p.points.is_empty())
    }

    pub fn points(&self) -> impl Iterator<Item = C64> + '_ {
        self.polylines.iter().flat_map(|p| p.points.iter().cloned())
    }

    pub fn point_count(&self) -> usize {
        self.polylines.iter().map(|p| p.points.len()).sum()
    }
}

/// Image of a boundary under `m`, chain structure preserved.
///
/// Where an image segment is more than five times longer than its source,
/// source midpoints are inserted (recursively, to a fixed depth).
pub fn map_boundary<F>(b: &Boundary, m: F) -> Result<Boundary>
where
    F: Fn(C64) -> Result<C64>,
{
    let mut index = 0usize;
    let mut polylines = Vec::with_capacity(b.polylines.len());
    for poly in &b.polylines {
        let first_index = index;
        let eval = |z: C64, idx: usize| {
            m(z).map_err(|e| Error::BoundaryMap {
                index: idx,
                source: Box::new(e),
            })
        };
        let images: Vec<C64> = poly
            .points
            .iter()
            .enumerate()
            .map(|(k, &z)| eval(z, first_index + k))
            .collect::<Result<_>>()?;
        index += poly.points.len();
        let n = poly.points.len();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push(images[k]);
            let last = k + 1 == n;
            if last && !poly.closed {
                break;
            }
            let k2 = (k + 1) % n;
            refine_segment(
                &|z| eval(z, first_index + k),
                poly.points[k],
                images[k],
                poly.points[k2],
                images[k2],
                MAX_REFINE_DEPTH,
                &mut out,
            )?;
        }
        dedup_consecutive(&mut out, poly.closed);
        polylines.push(Polyline {
            points: out,
            closed: poly.closed,
        });
    }
    Ok(Boundary {
        polylines,
        level: b.level,
    })
}

fn refine_segment<F>(m: &F, a: C64, fa: C64, b: C64, fb: C64, depth: u32, out: &mut Vec<C64>) -> Result<()>
where
    F: Fn(C64) -> Result<C64>,
{
    if depth == 0 || (fb - fa).norm() <= REFINE_STRETCH * (b - a).norm() {
        return Ok(());
    }
    let mid = 0.5 * (a + b);
    let fm = m(mid)?;
    refine_segment(m, a, fa, mid, fm, depth - 1, out)?;
    out.push(fm);
    refine_segment(m, mid, fm, b, fb, depth - 1, out)
}

pub(crate) fn dedup_consecutive(points: &mut Vec<C64>, closed: bool) {
    points.dedup();
    if closed {
        while points.len() > 1 && points.first() == points.last() {
            points.pop();
        }
    }
}

/// Distance from `z` to the segment `[a, b]`.
pub fn segment_distance(z: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let s = (((z - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + ab * s)).norm()
}

/// A subset of the plane that can answer membership and distance-to-boundary queries.
pub trait PlaneRegion {
    fn contains(&self, z: C64) -> bool;
    fn boundary_distance(&self, z: C64) -> f64;
}

/// Region enclosed by the closed chains of a boundary (even–odd rule).
/// Open chains are closed by their chord for the parity test.
impl PlaneRegion for Boundary {
    fn contains(&self, z: C64) -> bool {
        let mut inside = false;
        for poly in &self.polylines {
            let n = poly.points.len();
            if n < 3 {
                continue;
            }
            for k in 0..n {
                let a = poly.points[k];
                let b = poly.points[(k + 1) % n];
                if (a.im > z.im) != (b.im > z.im) {
                    let x = a.re + (z.im - a.im) * (b.re - a.re) / (b.im - a.im);
                    if z.re < x {
                        inside = !inside;
                    }
                }
            }
        }
        inside
    }

    fn boundary_distance(&self, z: C64) -> f64 {
        let mut d = f64::INFINITY;
        for poly in &self.polylines {
            if poly.points.len() == 1 {
                d = d.min((z - poly.points[0]).norm());
            }
            for (a, b) in poly.segments() {
                d = d.min(segment_distance(z, a, b));
            }
        }
        d
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disk {
    pub center: C64,
    pub radius: f64,
}

impl PlaneRegion for Disk {
    fn contains(&self, z: C64) -> bool {
        (z - self.center).norm() <= self.radius
    }

    fn boundary_distance(&self, z: C64) -> f64 {
        ((z - self.center).norm() - self.radius).abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Annulus {
    pub center: C64,
    pub inner: f64,
    pub outer: f64,
}

impl PlaneRegion for Annulus {
    fn contains(&self, z: C64) -> bool {
        let r = (z - self.center).norm();
        self.inner <= r && r <= self.outer
    }

    fn boundary_distance(&self, z: C64) -> f64 {
        let r = (z - self.center).norm();
        (r - self.inner).abs().min((r - self.outer).abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WholePlane;

impl PlaneRegion for WholePlane {
    fn contains(&self, _z: C64) -> bool {
        true
    }

    fn boundary_distance(&self, _z: C64) -> f64 {
        f64::INFINITY
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmptyRegion;

impl PlaneRegion for EmptyRegion {
    fn contains(&self, _z: C64) -> bool {
        false
    }

    fn boundary_distance(&self, _z: C64) -> f64 {
        f64::INFINITY
    }
}

/// Locate the outermost crossing of `f = level` on the ray `center + r·e^{iθ}`,
/// `0 ≤ r ≤ r_max`, where `f` is below `level` inside. Scans inward from
/// `r_max` in `samples` steps, then bisects to `tol`.
pub fn ray_crossing<F>(f: F, level: f64, center: C64, theta: f64, r_max: f64, samples: usize, tol: f64) -> Option<f64>
where
    F: Fn(C64) -> f64,
{
    let dir = C64::from_polar(1.0, theta);
    let at = |r: f64| f(center + dir * r);
    let mut outer = r_max;
    if !(at(outer) > level) {
        return None;
    }
    let n = samples.max(2);
    for k in (0..n).rev() {
        let r = r_max * k as f64 / n as f64;
        if !(at(r) > level) {
            let (mut lo, mut hi) = (r, outer);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if at(mid) > level {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        outer = r;
    }
    None
}
