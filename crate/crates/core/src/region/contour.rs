//! Marching squares on cell-center grids.
//!
//! A node is "above" when its value exceeds the level; `+∞` is always above
//! and `−∞`/NaN always below. Crossings between finite values are placed by
//! linear interpolation, crossings next to an infinite value at the edge
//! midpoint. Saddle cells are resolved by the mean of the four corners.

use std::collections::HashMap;

use super::{dedup_consecutive, Boundary, Grid, Polyline};
use crate::C64;

/// Edge identifier: horizontal edges `(0, i, j)` join `(i, j)–(i+1, j)`,
/// vertical edges `(1, i, j)` join `(i, j)–(i, j+1)`.
type EdgeKey = (u8, usize, usize);

fn above(v: f64, level: f64) -> bool {
    v > level
}

fn edge_nodes(key: EdgeKey) -> ((usize, usize), (usize, usize)) {
    let (dir, i, j) = key;
    if dir == 0 {
        ((i, j), (i + 1, j))
    } else {
        ((i, j), (i, j + 1))
    }
}

/// Segments of one cell as pairs of edge keys.
fn cell_segments(grid: &Grid, level: f64, i: usize, j: usize, out: &mut Vec<(EdgeKey, EdgeKey)>) {
    let v = [grid.value(i, j), grid.value(i + 1, j), grid.value(i + 1, j + 1), grid.value(i, j + 1)];
    let mut case = 0u8;
    for (bit, &x) in v.iter().enumerate() {
        if above(x, level) {
            case |= 1 << bit;
        }
    }
    let bottom = (0, i, j);
    let right = (1, i + 1, j);
    let top = (0, i, j + 1);
    let left = (1, i, j);
    let center_above = || {
        let mean = 0.25 * (v[0] + v[1] + v[2] + v[3]);
        mean.is_nan() || above(mean, level)
    };
    match case {
        0 | 15 => {}
        1 | 14 => out.push((left, bottom)),
        2 | 13 => out.push((bottom, right)),
        3 | 12 => out.push((left, right)),
        4 | 11 => out.push((right, top)),
        6 | 9 => out.push((bottom, top)),
        7 | 8 => out.push((left, top)),
        5 => {
            if center_above() {
                out.push((bottom, right));
                out.push((top, left));
            } else {
                out.push((left, bottom));
                out.push((right, top));
            }
        }
        10 => {
            if center_above() {
                out.push((left, bottom));
                out.push((right, top));
            } else {
                out.push((bottom, right));
                out.push((top, left));
            }
        }
        _ => unreachable!("four-bit case"),
    }
}

fn linear_crossing(grid: &Grid, level: f64, key: EdgeKey) -> C64 {
    let (a, b) = edge_nodes(key);
    let (za, zb) = (grid.node(a.0, a.1), grid.node(b.0, b.1));
    let (va, vb) = (grid.value(a.0, a.1), grid.value(b.0, b.1));
    let frac = if va.is_finite() && vb.is_finite() && va != vb {
        ((level - va) / (vb - va)).clamp(0.0, 1.0)
    } else {
        0.5
    };
    za + (zb - za) * frac
}

fn chains(grid: &Grid, level: f64, point_of: impl Fn(EdgeKey) -> C64) -> Boundary {
    let mut segments = Vec::new();
    if level.is_finite() {
        for j in 0..grid.ny - 1 {
            for i in 0..grid.nx - 1 {
                cell_segments(grid, level, i, j, &mut segments);
            }
        }
    }
    let mut incident: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, (a, b)) in segments.iter().enumerate() {
        incident.entry(*a).or_default().push(s);
        incident.entry(*b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();
    let next_segment = |key: EdgeKey, used: &[bool]| incident.get(&key).and_then(|l| l.iter().cloned().find(|&s| !used[s]));
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let mut forward = vec![a, b];
        let mut closed = false;
        let mut tip = b;
        while let Some(s) = next_segment(tip, &used) {
            used[s] = true;
            let (p, q) = segments[s];
            tip = if p == tip { q } else { p };
            if tip == a {
                closed = true;
                break;
            }
            forward.push(tip);
        }
        if !closed {
            let mut backward = Vec::new();
            let mut tail = a;
            while let Some(s) = next_segment(tail, &used) {
                used[s] = true;
                let (p, q) = segments[s];
                tail = if p == tail { q } else { p };
                backward.push(tail);
            }
            backward.reverse();
            backward.extend(forward);
            forward = backward;
        }
        let mut points: Vec<C64> = forward.into_iter().map(&point_of).collect();
        dedup_consecutive(&mut points, closed);
        if !points.is_empty() {
            polylines.push(Polyline { points, closed });
        }
    }
    Boundary { polylines, level }
}

/// Contour `{f = level}` with linearly interpolated crossings.
pub fn extract_levelset(grid: &Grid, level: f64) -> Boundary {
    chains(grid, level, |k| linear_crossing(grid, level, k))
}

/// Contour `{f = level}` with each crossing located by bisection of `f` on
/// its grid edge to absolute tolerance `tol`.
pub fn extract_levelset_refined<F>(grid: &Grid, level: f64, f: F, tol: f64) -> Boundary
where
    F: Fn(C64) -> f64,
{
    chains(grid, level, |key| {
        let (a, b) = edge_nodes(key);
        let (mut za, mut zb) = (grid.node(a.0, a.1), grid.node(b.0, b.1));
        if above(grid.value(a.0, a.1), level) {
            std::mem::swap(&mut za, &mut zb);
        }
        // za below, zb above
        for _ in 0..200 {
            if (zb - za).norm() <= tol {
                break;
            }
            let mid = 0.5 * (za + zb);
            if above(f(mid), level) {
                zb = mid;
            } else {
                za = mid;
            }
        }
        0.5 * (za + zb)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::{evaluate_grid, Bounds};

    #[test]
    fn circle_contour() {
        let g = evaluate_grid(|z| z.norm_sqr(), Bounds::square(2.0), 64, 64).unwrap();
        let b = extract_levelset(&g, 1.0);
        assert_eq!(b.polylines.len(), 1);
        assert!(b.polylines[0].closed);
        for z in b.points() {
            assert!((z.norm() - 1.0).abs() < 2.0 / 64.0);
        }
        let r = extract_levelset_refined(&g, 1.0, |z| z.norm_sqr(), 1e-12);
        for z in r.points() {
            assert!((z.norm() - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn level_out_of_range_is_empty() {
        let g = evaluate_grid(|z| z.norm_sqr() + 1.0, Bounds::square(2.0), 16, 16).unwrap();
        assert!(extract_levelset(&g, 0.5).is_empty());
    }

    #[test]
    fn infinite_values_are_above() {
        let g = evaluate_grid(|z| if z.norm() < 1.0 { f64::INFINITY } else { 0.0 }, Bounds::square(2.0), 20, 20).unwrap();
        let b = extract_levelset(&g, 1.0);
        assert_eq!(b.polylines.len(), 1);
        assert!(b.polylines[0].closed);
    }

    #[test]
    fn saddle_resolution_is_deterministic() {
        // z.re * z.im has a saddle at the origin
        let g = evaluate_grid(|z| z.re * z.im + 0.01, Bounds::square(1.0), 8, 8).unwrap();
        let a = extract_levelset(&g, 0.0);
        let b = extract_levelset(&g, 0.0);
        assert_eq!(a, b);
        assert_eq!(a.polylines.len(), 2);
    }
}
