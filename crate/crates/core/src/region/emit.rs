//! CSV, JSON and 16-bit PGM output for grids and boundaries.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Boundary, Grid};
use crate::error::{Error, Result};

pub const REGION_SCHEMA: &str = "brownscope-region/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Pgm,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "pgm" => Ok(Format::Pgm),
            other => Err(Error::InvalidArgument(format!("unknown output format '{other}'"))),
        }
    }
}

/// Metadata carried into every artifact.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EmitMeta {
    pub config_hash: Option<String>,
    pub quantity: Option<String>,
}

fn number(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("+inf")
    } else {
        json!("-inf")
    }
}

fn csv_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn meta_json(meta: &EmitMeta) -> Value {
    json!({
        "config_hash": meta.config_hash,
        "quantity": meta.quantity,
    })
}

fn csv_header(meta: &EmitMeta, out: &mut String) {
    if let Some(h) = &meta.config_hash {
        let _ = writeln!(out, "# config_hash={h}");
    }
    if let Some(q) = &meta.quantity {
        let _ = writeln!(out, "# quantity={q}");
    }
}

/// Finite value range used for PGM scaling.
fn finite_range(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values.iter().filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        (0.0, 0.0)
    } else {
        (lo, hi)
    }
}

/// 16-bit levels of a grid's values: finite range mapped affinely onto
/// `0..=65535`, `+∞` to the top, `−∞` and NaN to the bottom.
pub fn quantize(values: &[f64]) -> (Vec<u16>, f64, f64) {
    let (lo, hi) = finite_range(values);
    let span = hi - lo;
    let q = values
        .iter()
        .map(|&v| {
            if v.is_nan() || v == f64::NEG_INFINITY {
                0
            } else if v == f64::INFINITY {
                u16::MAX
            } else if span == 0.0 {
                0
            } else {
                ((v - lo) / span * u16::MAX as f64).round() as u16
            }
        })
        .collect();
    (q, lo, hi)
}

pub fn emit_grid(grid: &Grid, format: Format, meta: &EmitMeta) -> Vec<u8> {
    match format {
        Format::Csv => {
            let mut s = String::new();
            csv_header(meta, &mut s);
            s.push_str("re,im,value\n");
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let z = grid.node(i, j);
                    let _ = writeln!(s, "{},{},{}", csv_number(z.re), csv_number(z.im), csv_number(grid.value(i, j)));
                }
            }
            s.into_bytes()
        }
        Format::Json => {
            let doc = json!({
                "schema": REGION_SCHEMA,
                "type": "grid",
                "meta": meta_json(meta),
                "bounds": grid.bounds,
                "nx": grid.nx,
                "ny": grid.ny,
                "layout": "row-major, row 0 = smallest imaginary part, nodes at cell centers",
                "values": grid.values.iter().map(|&v| number(v)).collect::<Vec<_>>(),
            });
            let mut bytes = serde_json::to_vec_pretty(&doc).expect("json value serializes");
            bytes.push(b'\n');
            bytes
        }
        Format::Pgm => {
            let (q, lo, hi) = quantize(&grid.values);
            let b = &grid.bounds;
            let mut header = String::from("P5\n");
            let _ = writeln!(header, "# bounds {:e} {:e} {:e} {:e}", b.re_min, b.re_max, b.im_min, b.im_max);
            let _ = writeln!(header, "# clamp {lo:e} {hi:e} (+inf -> 65535, -inf -> 0)");
            if let Some(h) = &meta.config_hash {
                let _ = writeln!(header, "# config_hash {h}");
            }
            let _ = writeln!(header, "{} {}\n65535", grid.nx, grid.ny);
            let mut bytes = header.into_bytes();
            bytes.reserve(2 * q.len());
            for j in (0..grid.ny).rev() {
                for i in 0..grid.nx {
                    bytes.extend_from_slice(&q[j * grid.nx + i].to_be_bytes());
                }
            }
            bytes
        }
    }
}

pub fn emit_boundary(b: &Boundary, format: Format, meta: &EmitMeta) -> Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut s = String::new();
            csv_header(meta, &mut s);
            s.push_str("re,im,value,chain,closed\n");
            for (c, poly) in b.polylines.iter().enumerate() {
                for z in &poly.points {
                    let _ = writeln!(s, "{},{},{},{},{}", csv_number(z.re), csv_number(z.im), csv_number(b.level), c, poly.closed);
                }
            }
            Ok(s.into_bytes())
        }
        Format::Json => {
            let doc = json!({
                "schema": REGION_SCHEMA,
                "type": "boundary",
                "meta": meta_json(meta),
                "level": number(b.level),
                "polylines": b.polylines.iter().map(|p| json!({
                    "closed": p.closed,
                    "points": p.points.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            });
            let mut bytes = serde_json::to_vec_pretty(&doc)?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        Format::Pgm => Err(Error::InvalidArgument("PGM output is only available for grids".into())),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub comments: Vec<String>,
    /// Row-major, first row = top of the image.
    pub pixels: Vec<u16>,
}

impl PgmImage {
    /// The `(lo, hi)` pair recorded in the clamp comment.
    pub fn clamp(&self) -> Option<(f64, f64)> {
        self.comments.iter().find_map(|c| {
            let mut it = c.strip_prefix("clamp ")?.split_whitespace();
            Some((it.next()?.parse().ok()?, it.next()?.parse().ok()?))
        })
    }

    /// Pixels in grid order (row 0 = smallest imaginary part).
    pub fn grid_order(&self) -> Vec<u16> {
        let mut out = Vec::with_capacity(self.pixels.len());
        for r in (0..self.height).rev() {
            out.extend_from_slice(&self.pixels[r * self.width..(r + 1) * self.width]);
        }
        out
    }
}

/// Parse a binary 16-bit PGM as written by [`emit_grid`].
pub fn parse_pgm(bytes: &[u8]) -> Result<PgmImage> {
    let bad = |m: &str| Error::InvalidArgument(format!("malformed PGM: {m}"));
    let mut pos = 0;
    let mut comments = Vec::new();
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() {
            return Err(bad("truncated header"));
        }
        if bytes[pos] == b'#' {
            let end = bytes[pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |e| pos + e);
            comments.push(String::from_utf8_lossy(&bytes[pos + 1..end]).trim().to_string());
            pos = end;
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).to_string());
    }
    if tokens[0] != "P5" {
        return Err(bad("not a P5 image"));
    }
    let width: usize = tokens[1].parse().map_err(|_| bad("width"))?;
    let height: usize = tokens[2].parse().map_err(|_| bad("height"))?;
    let maxval: u16 = tokens[3].parse().map_err(|_| bad("maxval"))?;
    // single whitespace byte separates header and raster
    pos += 1;
    let need = 2 * width * height;
    if bytes.len() < pos + need || maxval < 256 {
        return Err(bad("raster size"));
    }
    let pixels = bytes[pos..pos + need]
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    Ok(PgmImage {
        width,
        height,
        maxval,
        comments,
        pixels,
    })
}
