//! Run configuration: JSON file plus command-line overrides.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::measure::SpectralMeasure;
use crate::model::ModelParams;
use crate::region::{Bounds, Format};
use crate::rmt::DEFAULT_PRODUCT_FACTORS;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    #[serde(rename = "add-circ")]
    AddCirc,
    #[serde(rename = "add-elliptic")]
    AddElliptic,
    #[serde(rename = "mult-unitary")]
    MultUnitary,
    #[serde(rename = "mult-positive")]
    MultPositive,
    #[serde(rename = "rdiag")]
    RDiag,
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_string()))
            .map_err(|_| Error::InvalidArgument(format!("unknown model '{s}' (add-circ, add-elliptic, mult-unitary, mult-positive, rdiag)")))
    }
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::AddCirc => "add-circ",
            Model::AddElliptic => "add-elliptic",
            Model::MultUnitary => "mult-unitary",
            Model::MultPositive => "mult-positive",
            Model::RDiag => "rdiag",
        }
    }

    pub fn is_additive(self) -> bool {
        matches!(self, Model::AddCirc | Model::AddElliptic)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            re_min: -3.0,
            re_max: 3.0,
            im_min: -3.0,
            im_max: 3.0,
            nx: 256,
            ny: 256,
        }
    }
}

impl GridSpec {
    pub fn bounds(&self) -> Result<Bounds> {
        Bounds::new(self.re_min, self.re_max, self.im_min, self.im_max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSpec {
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    /// Defaults to `3/√n`.
    pub dilation: Option<f64>,
    /// `ε` values for the `∂S/∂ε` probes.
    pub probe_epsilons: Vec<f64>,
    pub keep_eigenvalues: bool,
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec {
            n: 400,
            k: DEFAULT_PRODUCT_FACTORS,
            trials: 1,
            seed: 0,
            dilation: None,
            probe_epsilons: vec![0.1, 0.01],
            keep_eigenvalues: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub format: Option<Format>,
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadiiSpec {
    pub steps: usize,
}

impl Default for RadiiSpec {
    fn default() -> Self {
        RadiiSpec { steps: 50 }
    }
}

/// The configuration file as written by the user.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawConfig {
    pub model: Option<Model>,
    /// Inline measure document or a path to one (relative to the config file).
    pub measure: Option<Value>,
    pub t: Option<f64>,
    pub gamma: Option<[f64; 2]>,
    pub grid: Option<GridSpec>,
    pub oracle: Option<OracleSpec>,
    pub output: Option<OutputSpec>,
    pub point: Option<[f64; 2]>,
    pub points: Option<Vec<[f64; 2]>>,
    pub radii: Option<RadiiSpec>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub model: Option<Model>,
    pub measure: Option<PathBuf>,
    pub t: Option<f64>,
    pub gamma_re: Option<f64>,
    pub gamma_im: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub trials: Option<usize>,
    pub re: Option<f64>,
    pub im: Option<f64>,
}

/// Fully resolved configuration. Every artifact is a function of this value.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub model: Model,
    #[serde(rename = "measure", serialize_with = "serialize_measure")]
    pub measure: SpectralMeasure,
    /// `None` when neither the file nor the flags set it.
    pub t: Option<f64>,
    pub gamma: [f64; 2],
    pub grid: GridSpec,
    pub oracle: OracleSpec,
    pub format: Format,
    pub points: Vec<[f64; 2]>,
    pub radii: RadiiSpec,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

fn serialize_measure<S: serde::Serializer>(m: &SpectralMeasure, s: S) -> std::result::Result<S::Ok, S::Error> {
    m.to_json_value().serialize(s)
}

fn load_measure(v: &Value, base: &Path) -> Result<SpectralMeasure> {
    match v {
        Value::String(p) => {
            let path = base.join(p);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::InvalidArgument(format!("cannot read measure file {}: {e}", path.display())))?;
            SpectralMeasure::from_json_str(&text)
        }
        other => SpectralMeasure::from_json_value(other),
    }
}

impl RunConfig {
    /// Read the optional config file and apply the overrides.
    pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<Self> {
        let (raw, base) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", p.display())))?;
                let raw: RawConfig = serde_json::from_str(&text)
                    .map_err(|e| Error::InvalidArgument(format!("config {}: {e}", p.display())))?;
                (raw, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (RawConfig::default(), PathBuf::new()),
        };
        Self::resolve(raw, &base, ov)
    }

    pub fn resolve(raw: RawConfig, base: &Path, ov: &Overrides) -> Result<Self> {
        let model = ov
            .model
            .or(raw.model)
            .ok_or_else(|| Error::InvalidArgument("no model given (config 'model' or --model)".into()))?;
        let measure = match (&ov.measure, &raw.measure) {
            (Some(p), _) => load_measure(&Value::String(p.to_string_lossy().into_owned()), Path::new(""))?,
            (None, Some(v)) => load_measure(v, base)?,
            (None, None) => return Err(Error::InvalidArgument("no measure given (config 'measure' or --measure)".into())),
        };
        let t = ov.t.or(raw.t);
        let g = raw.gamma.unwrap_or([0.0, 0.0]);
        let gamma = [ov.gamma_re.unwrap_or(g[0]), ov.gamma_im.unwrap_or(g[1])];
        let grid = raw.grid.unwrap_or_default();
        grid.bounds()?;
        if grid.nx < 2 || grid.ny < 2 {
            return Err(Error::InvalidArgument(format!("grid needs at least 2x2 nodes, got {}x{}", grid.nx, grid.ny)));
        }
        let mut oracle = raw.oracle.unwrap_or_default();
        if let Some(s) = ov.seed {
            oracle.seed = s;
        }
        if let Some(n) = ov.n {
            oracle.n = n;
        }
        if let Some(k) = ov.k {
            oracle.k = k;
        }
        if let Some(tr) = ov.trials {
            oracle.trials = tr;
        }
        if oracle.n < 2 {
            return Err(Error::InvalidArgument(format!("oracle n = {} must be at least 2", oracle.n)));
        }
        if oracle.trials == 0 || oracle.k == 0 {
            return Err(Error::InvalidArgument("oracle trials and k must be positive".into()));
        }
        if oracle.probe_epsilons.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::InvalidArgument("probe epsilons must be positive".into()));
        }
        let output = raw.output.unwrap_or_default();
        let format = ov.format.or(output.format).unwrap_or(Format::Json);
        let out = ov.out.clone().or(output.path.map(|p| base.join(p)));
        let mut points = raw.points.unwrap_or_default();
        if let Some(p) = raw.point {
            points.insert(0, p);
        }
        match (ov.re, ov.im) {
            (None, None) => {}
            (re, im) => points = vec![[re.unwrap_or(0.0), im.unwrap_or(0.0)]],
        }
        let cfg = RunConfig {
            model,
            measure,
            t,
            gamma,
            grid,
            oracle,
            format,
            points,
            radii: raw.radii.unwrap_or_default(),
            out,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let gamma = self.gamma_c();
        match self.model {
            Model::RDiag => {
                if gamma != C64::new(0.0, 0.0) {
                    return Err(Error::InvalidArgument("rdiag takes no gamma".into()));
                }
                if let Some(t) = self.t {
                    if !(t >= 0.0 && t.is_finite()) {
                        return Err(Error::InvalidArgument(format!("t = {t} must be nonnegative")));
                    }
                }
            }
            Model::AddCirc if gamma != C64::new(0.0, 0.0) => {
                return Err(Error::InvalidArgument("add-circ has gamma = 0; use add-elliptic for gamma != 0".into()));
            }
            _ => {
                self.params()?;
            }
        }
        Ok(())
    }

    pub fn gamma_c(&self) -> C64 {
        C64::new(self.gamma[0], self.gamma[1])
    }

    /// Time, defaulting to 1.
    pub fn t_or_default(&self) -> f64 {
        self.t.unwrap_or(1.0)
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.t_or_default(), self.gamma_c())
    }

    pub fn complex_points(&self) -> Vec<C64> {
        self.points.iter().map(|p| C64::new(p[0], p[1])).collect()
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON of this config.
    pub fn hash(&self) -> String {
        // serde_json maps are ordered by key, which makes the text canonical
        let v = serde_json::to_value(self).expect("config serializes");
        let digest = Sha256::digest(v.to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
