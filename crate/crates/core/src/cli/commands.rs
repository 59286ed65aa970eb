//! The six subcommands. Each returns the bytes of its artifact.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{Model, RunConfig};
use crate::error::{Error, Result};
use crate::hj_additive::{e_region, lifetime_additive, phi_map, predicted_dsde, spectral_test_additive, spectral_test_additive_deformed};
use crate::hj_multiplicative::{
    f_gamma_boundary, f_gamma_map, lifetime_mult_positive, lifetime_mult_unitary, positive_sigma_boundary, psi_boundary, psi_map,
    spectral_test_mult, MultKind,
};
use crate::measure::{SpectralMeasure, SupportKind};
use crate::model::SpectralVerdict;
use crate::rdiagonal::{circ_inner_radius, hl_radii, AnnulusSpec};
use crate::region::{emit_boundary, emit_grid, evaluate_grid, extract_levelset_refined, Boundary, EmitMeta, Format, PlaneRegion, Polyline};
use crate::rmt::{
    derive_seed, empirical_dsde, sample_atomic_hermitian, sample_atomic_positive, sample_atomic_unitary, sample_b, sample_elliptic,
    sample_ginibre, sample_haar_unitary, support_report, CMat, EmpiricalSpectrum, EnsembleDescriptor,
};
use crate::C64;

const TAG_TRIAL: u64 = 0x7472_6961_6c;
const TAG_FIRST: u64 = 1;
const TAG_SECOND: u64 = 2;
const CIRCLE_POINTS: usize = 1024;

fn meta(cfg: &RunConfig, quantity: &str) -> EmitMeta {
    EmitMeta {
        config_hash: Some(cfg.hash()),
        quantity: Some(quantity.to_string()),
    }
}

fn json_bytes(doc: &Value) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(doc)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn header(cfg: &RunConfig, schema: &str) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(schema));
    m.insert("meta".into(), json!({"config_hash": cfg.hash()}));
    m.insert("model".into(), json!(cfg.model.name()));
    m.insert("t".into(), json!(cfg.t_or_default()));
    m.insert("gamma".into(), json!(cfg.gamma));
    m
}

fn require_json(cfg: &RunConfig, command: &str) -> Result<()> {
    if cfg.format != Format::Json {
        return Err(Error::InvalidArgument(format!("{command} writes JSON only")));
    }
    Ok(())
}

fn point_json(z: C64) -> Value {
    json!([z.re, z.im])
}

/// Lifetime function of the model, `NaN` where it is undefined.
fn lifetime_fn(cfg: &RunConfig) -> Result<Box<dyn Fn(C64) -> f64 + Sync + '_>> {
    let mu = &cfg.measure;
    match cfg.model {
        Model::AddCirc | Model::AddElliptic => Ok(Box::new(move |z| lifetime_additive(mu, z))),
        Model::MultUnitary => {
            mu.require_kind(SupportKind::UnitCircle)?;
            Ok(Box::new(move |z| lifetime_mult_unitary(mu, z).unwrap_or(f64::NAN)))
        }
        Model::MultPositive => {
            mu.require_kind(SupportKind::NonnegativeHalfLine)?;
            Ok(Box::new(move |z| lifetime_mult_positive(mu, z).unwrap_or(f64::NAN)))
        }
        Model::RDiag => Err(Error::InvalidArgument("rdiag has no lifetime function; use 'radii' or 'domain'".into())),
    }
}

pub fn lifetime(cfg: &RunConfig) -> Result<Vec<u8>> {
    let f = lifetime_fn(cfg)?;
    let g = &cfg.grid;
    let grid = evaluate_grid(|z| f(z), g.bounds()?, g.nx, g.ny)?;
    Ok(emit_grid(&grid, cfg.format, &meta(cfg, "lifetime")))
}

/// Annulus of `u h + c_t`: inner radius `√(‖h⁻¹‖₂⁻² − t)` (zero past the
/// critical time), outer radius `√(‖h‖₂² + t)`.
fn rdiag_annulus(mu: &SpectralMeasure, t: f64) -> Result<AnnulusSpec> {
    let base = hl_radii(mu)?;
    let inner = match circ_inner_radius(mu, t) {
        Ok(r) => r,
        Err(Error::TMaxExceeded { .. }) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(AnnulusSpec {
        inner_radius: inner,
        outer_radius: (base.outer_radius * base.outer_radius + t).sqrt(),
    })
}

fn circle(radius: f64) -> Polyline {
    Polyline {
        points: (0..CIRCLE_POINTS)
            .map(|k| C64::from_polar(radius, 2.0 * PI * k as f64 / CIRCLE_POINTS as f64))
            .collect(),
        closed: true,
    }
}

fn annulus_boundary(a: &AnnulusSpec) -> Boundary {
    let mut polylines = vec![circle(a.outer_radius)];
    if a.inner_radius > 0.0 {
        polylines.push(circle(a.inner_radius));
    }
    Boundary { polylines, level: 0.0 }
}

/// `∂Σ_t` of the model (before any γ-deformation).
pub fn sigma_boundary(cfg: &RunConfig) -> Result<Boundary> {
    let t = cfg.t_or_default();
    let g = &cfg.grid;
    let bounds = g.bounds()?;
    match cfg.model {
        Model::MultPositive => {
            let r_max = [
                C64::new(bounds.re_min, bounds.im_min),
                C64::new(bounds.re_min, bounds.im_max),
                C64::new(bounds.re_max, bounds.im_min),
                C64::new(bounds.re_max, bounds.im_max),
            ]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
            positive_sigma_boundary(&cfg.measure, t, r_max, g.nx, g.ny)
        }
        Model::RDiag => Ok(annulus_boundary(&rdiag_annulus(&cfg.measure, cfg.t.unwrap_or(0.0))?)),
        _ => {
            let f = lifetime_fn(cfg)?;
            let grid = evaluate_grid(|z| f(z), bounds, g.nx, g.ny)?;
            let tol = 1e-12 * grid.cell_diagonal().max(1.0);
            Ok(extract_levelset_refined(&grid, t, |z| f(z), tol))
        }
    }
}

/// Boundary of the model's spectral domain: `∂Σ_t` mapped by the
/// push-forward of the model when `γ ≠ 0`.
pub fn domain_boundary(cfg: &RunConfig) -> Result<Boundary> {
    let sigma = sigma_boundary(cfg)?;
    if cfg.gamma_c() == C64::new(0.0, 0.0) || cfg.model == Model::RDiag {
        return Ok(sigma);
    }
    let params = cfg.params()?;
    match cfg.model {
        Model::AddCirc | Model::AddElliptic => e_region(&cfg.measure, &params, &sigma),
        Model::MultUnitary => psi_boundary(&cfg.measure, &params, &sigma),
        Model::MultPositive => f_gamma_boundary(&cfg.measure, &params, &sigma),
        Model::RDiag => unreachable!("handled above"),
    }
}

pub fn domain(cfg: &RunConfig) -> Result<Vec<u8>> {
    if cfg.format == Format::Pgm {
        return Err(Error::InvalidArgument("domain writes CSV or JSON; PGM is for lifetime grids".into()));
    }
    let quantity = if cfg.gamma_c() == C64::new(0.0, 0.0) || cfg.model == Model::RDiag {
        "sigma_boundary"
    } else {
        "mapped_boundary"
    };
    emit_boundary(&domain_boundary(cfg)?, cfg.format, &meta(cfg, quantity))
}

fn map_point(cfg: &RunConfig, z: C64) -> Result<C64> {
    let params = cfg.params()?;
    match cfg.model {
        Model::AddCirc | Model::AddElliptic => phi_map(&cfg.measure, &params, z),
        Model::MultUnitary => psi_map(&cfg.measure, &params, z),
        Model::MultPositive => f_gamma_map(&cfg.measure, params.gamma(), params.t(), z),
        Model::RDiag => Err(Error::InvalidArgument("rdiag has no push-forward map".into())),
    }
}

fn require_points(cfg: &RunConfig) -> Result<Vec<C64>> {
    let pts = cfg.complex_points();
    if pts.is_empty() {
        return Err(Error::InvalidArgument("no points given (config 'point'/'points' or --re/--im)".into()));
    }
    Ok(pts)
}

pub fn map(cfg: &RunConfig) -> Result<Vec<u8>> {
    if cfg.model == Model::RDiag {
        return Err(Error::InvalidArgument("rdiag has no push-forward map".into()));
    }
    let pts = require_points(cfg)?;
    let results: Vec<(C64, Result<C64>)> = pts.iter().map(|&z| (z, map_point(cfg, z))).collect();
    match cfg.format {
        Format::Json => {
            let mut doc = header(cfg, "brownscope-map/1");
            let rows: Vec<Value> = results
                .iter()
                .map(|(z, r)| match r {
                    Ok(w) => json!({"point": point_json(*z), "image": point_json(*w)}),
                    Err(e) => json!({"point": point_json(*z), "error": {"kind": e.kind(), "message": e.to_string()}}),
                })
                .collect();
            doc.insert("results".into(), Value::Array(rows));
            json_bytes(&Value::Object(doc))
        }
        Format::Csv => {
            let mut s = format!("# config_hash={}\nre,im,image_re,image_im,error\n", cfg.hash());
            for (z, r) in &results {
                let _ = match r {
                    Ok(w) => writeln!(s, "{:e},{:e},{:e},{:e},", z.re, z.im, w.re, w.im),
                    Err(e) => writeln!(s, "{:e},{:e},,,{}", z.re, z.im, e.kind()),
                };
            }
            Ok(s.into_bytes())
        }
        Format::Pgm => Err(Error::InvalidArgument("map writes CSV or JSON".into())),
    }
}

fn verdict_json(v: SpectralVerdict) -> Value {
    match v {
        SpectralVerdict::OutsideSpectrum => json!({"verdict": "OutsideSpectrum"}),
        SpectralVerdict::Undetermined => json!({"verdict": "Undetermined"}),
        SpectralVerdict::ZeroAtomCase(b) => json!({"verdict": "ZeroAtomCase", "in_spectrum": b}),
    }
}

fn rdiag_verdict(cfg: &RunConfig, z: C64) -> Result<SpectralVerdict> {
    let t = cfg.t.unwrap_or(0.0);
    let a = rdiag_annulus(&cfg.measure, t)?;
    let r = z.norm();
    // outside the outer circle the resolvent exists; inside the inner one
    // only when the element itself is invertible (known here for t = 0)
    let invertible = t == 0.0 && cfg.measure.support_distance(C64::new(0.0, 0.0)) > 0.0;
    Ok(if r > a.outer_radius || (invertible && r < a.inner_radius) {
        SpectralVerdict::OutsideSpectrum
    } else {
        SpectralVerdict::Undetermined
    })
}

fn verdict(cfg: &RunConfig, z: C64) -> Result<SpectralVerdict> {
    let mu = &cfg.measure;
    match cfg.model {
        Model::AddCirc => Ok(spectral_test_additive(mu, |w| mu.support_distance(w), z, cfg.params()?.t())),
        Model::AddElliptic => Ok(spectral_test_additive_deformed(mu, &cfg.params()?, z)),
        Model::MultUnitary => spectral_test_mult(MultKind::Unitary, mu, z, &cfg.params()?),
        Model::MultPositive => spectral_test_mult(MultKind::Positive, mu, z, &cfg.params()?),
        Model::RDiag => rdiag_verdict(cfg, z),
    }
}

pub fn spectest(cfg: &RunConfig) -> Result<Vec<u8>> {
    require_json(cfg, "spectest")?;
    let pts = require_points(cfg)?;
    let rows = pts
        .iter()
        .map(|&z| {
            let mut v = verdict_json(verdict(cfg, z)?);
            v["point"] = point_json(z);
            Ok(v)
        })
        .collect::<Result<Vec<Value>>>()?;
    let mut doc = header(cfg, "brownscope-spectest/1");
    doc.insert("results".into(), Value::Array(rows));
    json_bytes(&Value::Object(doc))
}

/// One draw of the model's random-matrix approximation.
fn sample_model(cfg: &RunConfig, seed: u64) -> Result<CMat> {
    let n = cfg.oracle.n;
    let t = cfg.t_or_default();
    let gamma = cfg.gamma_c();
    let s1 = derive_seed(seed, TAG_FIRST, 0);
    let s2 = derive_seed(seed, TAG_SECOND, 0);
    let mu = &cfg.measure;
    match cfg.model {
        Model::AddCirc | Model::AddElliptic => {
            let x = sample_atomic_hermitian(n, mu, s1)?;
            let noise = if cfg.model == Model::AddCirc { sample_ginibre(n, t, s2)? } else { sample_elliptic(n, t, gamma, s2)? };
            Ok(&x + &noise)
        }
        Model::MultUnitary => Ok(&sample_atomic_unitary(n, mu, s1)? * &sample_b(n, t, gamma, cfg.oracle.k, s2)?),
        Model::MultPositive => Ok(&sample_atomic_positive(n, mu, s1)? * &sample_b(n, t, gamma, cfg.oracle.k, s2)?),
        Model::RDiag => {
            let uh = &sample_haar_unitary(n, s1)? * &sample_atomic_positive(n, mu, derive_seed(s1, TAG_SECOND, 1))?;
            let t = cfg.t.unwrap_or(0.0);
            if t > 0.0 {
                Ok(&uh + &sample_ginibre(n, t, s2)?)
            } else {
                Ok(uh)
            }
        }
    }
}

fn ensemble_kind(model: Model) -> &'static str {
    match model {
        Model::AddCirc => "hermitian+ginibre",
        Model::AddElliptic => "hermitian+elliptic",
        Model::MultUnitary => "unitary*product",
        Model::MultPositive => "positive*product",
        Model::RDiag => "haar*positive+ginibre",
    }
}

struct Trial {
    spectrum: EmpiricalSpectrum,
    inside: f64,
    min_modulus: f64,
    max_modulus: f64,
    dsde: Vec<f64>,
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn oracle(cfg: &RunConfig) -> Result<Vec<u8>> {
    require_json(cfg, "oracle")?;
    let oc = &cfg.oracle;
    let dilation = oc.dilation.unwrap_or(3.0 / (oc.n as f64).sqrt());
    let (region, domain_doc): (Box<dyn PlaneRegion + Sync>, Value) = if cfg.model == Model::RDiag {
        let a = rdiag_annulus(&cfg.measure, cfg.t.unwrap_or(0.0))?;
        let doc = json!({"kind": "annulus", "inner_radius": a.inner_radius, "outer_radius": a.outer_radius});
        (
            Box::new(crate::region::Annulus {
                center: C64::new(0.0, 0.0),
                inner: a.inner_radius,
                outer: a.outer_radius,
            }),
            doc,
        )
    } else {
        let b = domain_boundary(cfg)?;
        let doc = json!({"kind": "boundary", "chains": b.polylines.len(), "points": b.point_count()});
        (Box::new(b), doc)
    };
    // dS/dε probes have a prediction only for x + c_t
    let probes: Vec<(C64, f64)> = if cfg.model == Model::AddCirc {
        let pts = if cfg.points.is_empty() {
            vec![C64::new(0.0, 0.0), C64::new(0.5, 0.5), C64::new(2.0, 0.0)]
        } else {
            cfg.complex_points()
        };
        pts.iter().flat_map(|&z| oc.probe_epsilons.iter().map(move |&e| (z, e))).collect()
    } else {
        Vec::new()
    };
    let descriptor = |seed: u64| EnsembleDescriptor {
        kind: ensemble_kind(cfg.model).to_string(),
        t: if cfg.model == Model::RDiag { cfg.t.unwrap_or(0.0) } else { cfg.t_or_default() },
        gamma: cfg.gamma,
        k: matches!(cfg.model, Model::MultUnitary | Model::MultPositive).then_some(oc.k),
        seed,
    };
    let trials = (0..oc.trials as u64)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(oc.seed, TAG_TRIAL, i);
            let m = sample_model(cfg, seed)?;
            let spectrum = EmpiricalSpectrum::from_matrix(&m, descriptor(seed))?;
            let inside = support_report(&spectrum, region.as_ref(), dilation);
            let moduli = spectrum.eigenvalues.iter().map(|z| z.norm());
            let min_modulus = moduli.clone().fold(f64::INFINITY, f64::min);
            let max_modulus = moduli.fold(0.0, f64::max);
            let dsde = probes.iter().map(|&(z, e)| empirical_dsde(&m, z, e)).collect::<Result<Vec<f64>>>()?;
            Ok(Trial {
                spectrum,
                inside,
                min_modulus,
                max_modulus,
                dsde,
            })
        })
        .collect::<Result<Vec<Trial>>>()?;

    let trial_rows: Vec<Value> = trials
        .iter()
        .enumerate()
        .map(|(i, tr)| {
            json!({
                "index": i,
                "seed": tr.spectrum.ensemble.seed,
                "inside_fraction": tr.inside,
                "min_modulus": tr.min_modulus,
                "max_modulus": tr.max_modulus,
            })
        })
        .collect();
    let fractions: Vec<f64> = trials.iter().map(|t| t.inside).collect();
    let (mean_inside, _) = mean_and_stderr(&fractions);
    let probe_rows = probes
        .iter()
        .enumerate()
        .map(|(j, &(z, e))| {
            let samples: Vec<f64> = trials.iter().map(|t| t.dsde[j]).collect();
            let (mean, stderr) = mean_and_stderr(&samples);
            let predicted = predicted_dsde(&cfg.measure, z, cfg.t_or_default(), e)?;
            Ok(json!({
                "lambda": point_json(z),
                "epsilon": e,
                "predicted": predicted,
                "empirical_mean": mean,
                "empirical_stderr": if stderr.is_finite() { json!(stderr) } else { Value::Null },
                "abs_error": (mean - predicted).abs(),
            }))
        })
        .collect::<Result<Vec<Value>>>()?;

    let mut doc = header(cfg, "brownscope-oracle/1");
    doc.insert("ensemble".into(), json!(descriptor(oc.seed)));
    doc.insert("n".into(), json!(oc.n));
    doc.insert("trials".into(), json!(oc.trials));
    doc.insert("dilation".into(), json!(dilation));
    doc.insert("domain".into(), domain_doc);
    doc.insert(
        "inside_fraction".into(),
        json!({"mean": mean_inside, "min": fractions.iter().cloned().fold(f64::INFINITY, f64::min)}),
    );
    doc.insert(
        "min_modulus".into(),
        json!(trials.iter().map(|t| t.min_modulus).fold(f64::INFINITY, f64::min)),
    );
    doc.insert("per_trial".into(), Value::Array(trial_rows));
    doc.insert("probes".into(), Value::Array(probe_rows));
    if oc.keep_eigenvalues {
        doc.insert("spectra".into(), json!(trials.iter().map(|t| &t.spectrum).collect::<Vec<_>>()));
    }
    json_bytes(&Value::Object(doc))
}

pub fn radii(cfg: &RunConfig) -> Result<Vec<u8>> {
    let mu = &cfg.measure;
    let a = hl_radii(mu)?;
    let t_max = a.inner_radius * a.inner_radius;
    let at_t = cfg.t.map(|t| circ_inner_radius(mu, t)).transpose()?;
    let steps = cfg.radii.steps.max(1);
    let curve = (0..=steps)
        .map(|k| {
            let t = t_max * k as f64 / steps as f64;
            let r = match circ_inner_radius(mu, t) {
                Err(Error::TMaxExceeded { .. }) if k == steps => 0.0,
                other => other?,
            };
            Ok((t, r))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    match cfg.format {
        Format::Json => {
            let mut doc = header(cfg, "brownscope-radii/1");
            doc.remove("gamma");
            doc.insert("t".into(), json!(cfg.t));
            doc.insert("annulus".into(), json!(a));
            doc.insert("t_max".into(), json!(t_max));
            doc.insert("inner_radius_at_t".into(), json!(at_t));
            doc.insert("curve".into(), json!(curve.iter().map(|&(t, r)| [t, r]).collect::<Vec<_>>()));
            json_bytes(&Value::Object(doc))
        }
        Format::Csv => {
            let mut s = String::new();
            let _ = writeln!(s, "# config_hash={}", cfg.hash());
            let _ = writeln!(s, "# inner_radius={:e} outer_radius={:e} t_max={:e}", a.inner_radius, a.outer_radius, t_max);
            if let (Some(t), Some(r)) = (cfg.t, at_t) {
                let _ = writeln!(s, "# inner_radius_at_t t={t:e} r={r:e}");
            }
            s.push_str("t,inner_radius\n");
            for (t, r) in curve {
                let _ = writeln!(s, "{t:e},{r:e}");
            }
            Ok(s.into_bytes())
        }
        Format::Pgm => Err(Error::InvalidArgument("radii writes CSV or JSON".into())),
    }
}
