//! Finite-N random-matrix samplers and empirical spectral statistics.
//!
//! Every draw takes its own ChaCha stream derived from `(seed, tag, index)`,
//! so samples are reproducible and independent of evaluation order.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{SpectralMeasure, SupportKind};
use crate::region::PlaneRegion;
use crate::C64;

pub type CMat = Mat<C64>;

pub const DEFAULT_PRODUCT_FACTORS: usize = 200;

const TAG_GINIBRE: u64 = 1;
const TAG_GUE_X: u64 = 2;
const TAG_GUE_Y: u64 = 3;
const TAG_HAAR: u64 = 4;
const TAG_PRODUCT: u64 = 5;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child draw of kind `tag`.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(tag)) ^ index)
}

/// Generator for one matrix draw.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("matrix size n = {n} must be at least 2")));
    }
    Ok(())
}

/// Complex Gaussian matrix with `E|a_ij|² = t/n`.
pub fn ginibre_with_rng<R: Rng>(n: usize, t: f64, rng: &mut R) -> CMat {
    let s = (t / (2.0 * n as f64)).sqrt();
    let mut m = CMat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] = C64::new(s * normal(rng), s * normal(rng));
        }
    }
    m
}

pub fn sample_ginibre(n: usize, t: f64, seed: u64) -> Result<CMat> {
    check_n(n)?;
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t = {t} must be positive")));
    }
    Ok(ginibre_with_rng(n, t, &mut stream_rng(seed, TAG_GINIBRE)))
}

/// GUE matrix normalized so the limiting semicircle has variance 1.
pub fn gue_with_rng<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let diag = (1.0 / n as f64).sqrt();
    let off = (1.0 / (2.0 * n as f64)).sqrt();
    let mut m = CMat::zeros(n, n);
    for j in 0..n {
        m[(j, j)] = C64::new(diag * normal(rng), 0.0);
        for i in 0..j {
            let z = C64::new(off * normal(rng), off * normal(rng));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// `(a, b, θ)` with `a² + b² = t`, `e^{2iθ}(a² − b²) = γ`.
pub fn elliptic_parameters(t: f64, gamma: C64) -> Result<(f64, f64, f64)> {
    if gamma.norm() > t * (1.0 + 1e-12) {
        return Err(Error::BadGamma { gamma_abs: gamma.norm(), t });
    }
    let g = gamma.norm().min(t);
    let theta = if g == 0.0 { 0.0 } else { 0.5 * gamma.arg() };
    Ok((((t + g) / 2.0).sqrt(), ((t - g) / 2.0).sqrt(), theta))
}

/// `e^{iθ}(a X + i b Y)` from two GUE draws out of the given generators.
pub fn elliptic_with_rngs<R: Rng>(n: usize, t: f64, gamma: C64, rx: &mut R, ry: &mut R) -> Result<CMat> {
    let (a, b, theta) = elliptic_parameters(t, gamma)?;
    let x = gue_with_rng(n, rx);
    let y = gue_with_rng(n, ry);
    let phase = C64::from_polar(1.0, theta);
    let ca = phase * a;
    let cb = phase * C64::new(0.0, b);
    Ok(Mat::from_fn(n, n, |i, j| ca * x[(i, j)] + cb * y[(i, j)]))
}

pub fn sample_elliptic(n: usize, t: f64, gamma: C64, seed: u64) -> Result<CMat> {
    check_n(n)?;
    elliptic_with_rngs(n, t, gamma, &mut stream_rng(seed, TAG_GUE_X), &mut stream_rng(seed, TAG_GUE_Y))
}

/// Haar unitary: `Q·diag(r_ii/|r_ii|)` from the QR factorization of a Ginibre matrix.
pub fn sample_haar_unitary(n: usize, seed: u64) -> Result<CMat> {
    check_n(n)?;
    let g = ginibre_with_rng(n, 1.0, &mut stream_rng(seed, TAG_HAAR));
    let qr = g.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    let phases: Vec<C64> = (0..n)
        .map(|i| {
            let d = r[(i, i)];
            if d.norm() == 0.0 {
                C64::new(1.0, 0.0)
            } else {
                d / d.norm()
            }
        })
        .collect();
    Ok(Mat::from_fn(n, n, |i, j| q[(i, j)] * phases[j]))
}

/// Largest-remainder rounding of `weights · n` to integers summing to `n`.
pub fn multiplicities(weights: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(n.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

/// `U diag(d) U*` with `d` the atoms repeated by their rounded multiplicities.
fn conjugated_atoms(n: usize, mu: &SpectralMeasure, seed: u64) -> Result<CMat> {
    check_n(n)?;
    let atoms = mu
        .atoms()
        .ok_or_else(|| Error::InvalidArgument("matrix models need an atomic measure".into()))?;
    let counts = multiplicities(&atoms.iter().map(|a| a.weight).collect::<Vec<_>>(), n);
    let diag: Vec<C64> = atoms
        .iter()
        .zip(&counts)
        .flat_map(|(a, &c)| std::iter::repeat_n(a.position, c))
        .collect();
    let u = sample_haar_unitary(n, seed)?;
    let ud = Mat::from_fn(n, n, |i, j| u[(i, j)] * diag[j]);
    let mut out = CMat::zeros(n, n);
    matmul(&mut out, Accum::Replace, &ud, u.adjoint(), C64::new(1.0, 0.0), Par::Seq);
    Ok(out)
}

pub fn sample_atomic_unitary(n: usize, mu: &SpectralMeasure, seed: u64) -> Result<CMat> {
    mu.require_kind(SupportKind::UnitCircle)?;
    conjugated_atoms(n, mu, seed)
}

pub fn sample_atomic_positive(n: usize, mu: &SpectralMeasure, seed: u64) -> Result<CMat> {
    mu.require_kind(SupportKind::NonnegativeHalfLine)?;
    conjugated_atoms(n, mu, seed)
}

/// Same construction for a law on the real line (self-adjoint initial condition).
pub fn sample_atomic_hermitian(n: usize, mu: &SpectralMeasure, seed: u64) -> Result<CMat> {
    mu.require_kind(SupportKind::RealLine)?;
    conjugated_atoms(n, mu, seed)
}

/// `∏_{j=1..k} (I + i G_j/√k − (γ/2k) I)` with independent elliptic `G_j`.
pub fn sample_b(n: usize, t: f64, gamma: C64, k: usize, seed: u64) -> Result<CMat> {
    check_n(n)?;
    if k == 0 {
        return Err(Error::InvalidArgument("the product needs at least one factor".into()));
    }
    if k < 50 {
        log::warn!("sample_b with k = {k} < 50 factors is a coarse approximation");
    }
    elliptic_parameters(t, gamma)?;
    let kf = k as f64;
    let shift = C64::new(1.0, 0.0) - gamma / (2.0 * kf);
    let step = C64::new(0.0, 1.0 / kf.sqrt());
    let mut m = CMat::identity(n, n);
    let mut next = CMat::zeros(n, n);
    for j in 0..k as u64 {
        let s = derive_seed(seed, TAG_PRODUCT, j);
        let g = elliptic_with_rngs(n, t, gamma, &mut stream_rng(s, TAG_GUE_X), &mut stream_rng(s, TAG_GUE_Y))?;
        // next = shift·M + (i/√k)·M G
        for c in 0..n {
            for r in 0..n {
                next[(r, c)] = shift * m[(r, c)];
            }
        }
        matmul(&mut next, Accum::Add, &m, &g, step, Par::Seq);
        std::mem::swap(&mut m, &mut next);
    }
    Ok(m)
}

pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    m.eigenvalues().map_err(|e| Error::Backend(format!("{e:?}")))
}

pub fn singular_values(m: &CMat) -> Result<Vec<f64>> {
    m.singular_values().map_err(|e| Error::Backend(format!("{e:?}")))
}

/// Singular values of `A − λI`.
pub fn shifted_singular_values(a: &CMat, lambda: C64) -> Result<Vec<f64>> {
    let n = a.nrows();
    let shifted = Mat::from_fn(n, a.ncols(), |i, j| if i == j { a[(i, j)] - lambda } else { a[(i, j)] });
    singular_values(&shifted)
}

fn check_eps(epsilon: f64) -> Result<()> {
    if epsilon >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeEpsilon { epsilon })
    }
}

/// `(1/n) Σ log(s_i² + ε)` from precomputed singular values.
pub fn s_from_singular_values(s: &[f64], epsilon: f64) -> f64 {
    s.iter().map(|x| (x * x + epsilon).ln()).sum::<f64>() / s.len() as f64
}

/// `(1/n) Σ 1/(s_i² + ε)` from precomputed singular values.
pub fn dsde_from_singular_values(s: &[f64], epsilon: f64) -> f64 {
    s.iter().map(|x| 1.0 / (x * x + epsilon)).sum::<f64>() / s.len() as f64
}

pub fn empirical_s(a: &CMat, lambda: C64, epsilon: f64) -> Result<f64> {
    check_eps(epsilon)?;
    Ok(s_from_singular_values(&shifted_singular_values(a, lambda)?, epsilon))
}

pub fn empirical_dsde(a: &CMat, lambda: C64, epsilon: f64) -> Result<f64> {
    check_eps(epsilon)?;
    Ok(dsde_from_singular_values(&shifted_singular_values(a, lambda)?, epsilon))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleDescriptor {
    pub kind: String,
    pub t: f64,
    pub gamma: [f64; 2],
    pub k: Option<usize>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalSpectrum {
    #[serde(serialize_with = "serialize_points")]
    pub eigenvalues: Vec<C64>,
    pub n: usize,
    pub ensemble: EnsembleDescriptor,
}

fn serialize_points<S: serde::Serializer>(points: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(points.len()))?;
    for z in points {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

impl EmpiricalSpectrum {
    pub fn from_matrix(m: &CMat, ensemble: EnsembleDescriptor) -> Result<Self> {
        Ok(EmpiricalSpectrum {
            eigenvalues: eigenvalues(m)?,
            n: m.nrows(),
            ensemble,
        })
    }
}

/// Fraction of eigenvalues in the region dilated by `dilation`.
pub fn support_report(spec: &EmpiricalSpectrum, region: &dyn PlaneRegion, dilation: f64) -> f64 {
    if spec.eigenvalues.is_empty() {
        return 0.0;
    }
    let hits = spec
        .eigenvalues
        .iter()
        .filter(|&&z| region.contains(z) || region.boundary_distance(z) <= dilation)
        .count();
    hits as f64 / spec.eigenvalues.len() as f64
}
