use crate::C64;
use crate::measure::SupportKind;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("evaluation point {point} lies on the support of the measure")]
    EvaluationOnSupport { point: C64 },

    #[error("expected a measure on {expected}, found one on {found}")]
    WrongSupportKind {
        expected: SupportKind,
        found: SupportKind,
    },

    #[error("epsilon {epsilon} is negative and the point lies within sqrt(|epsilon|) of the support")]
    NegativeEpsilon { epsilon: f64 },

    #[error("time {t} is not below the lifetime {lifetime} of the characteristic")]
    LifetimeExceeded { t: f64, lifetime: f64 },

    #[error("Newton inversion of epsilon0 -> epsilon(t) did not converge at epsilon = {epsilon}")]
    InversionFailed { epsilon: f64 },

    #[error("epsilon {epsilon} is outside the invertibility range |epsilon| < {delta}")]
    ExtensionRange { epsilon: f64, delta: f64 },

    #[error("point {point} is not strictly outside the closed domain")]
    InsideDomain { point: C64 },

    #[error("the origin is excluded and must be treated as a special case")]
    OriginExcluded,

    #[error("momentum blew up at time {time}")]
    BlowUp { time: f64 },

    #[error("path-following inversion stalled while solving for the preimage of {target}")]
    ContinuationFailed { target: C64 },

    #[error("point {point} lies below the graph of v_t")]
    OutsideOmega { point: C64 },

    #[error("t = {t} exceeds the largest admissible time {t_max}")]
    TMaxExceeded { t: f64, t_max: f64 },

    #[error("|gamma| = {gamma_abs} exceeds t = {t}; the model requires |gamma| <= t")]
    BadGamma { gamma_abs: f64, t: f64 },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("boundary point {index}: {source}")]
    BoundaryMap {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("linear algebra backend failed: {0}")]
    Backend(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EvaluationOnSupport { .. } => "evaluation_on_support",
            Error::WrongSupportKind { .. } => "wrong_support_kind",
            Error::NegativeEpsilon { .. } => "negative_epsilon",
            Error::LifetimeExceeded { .. } => "lifetime_exceeded",
            Error::InversionFailed { .. } => "inversion_failed",
            Error::ExtensionRange { .. } => "extension_range",
            Error::InsideDomain { .. } => "inside_domain",
            Error::OriginExcluded => "origin_excluded",
            Error::BlowUp { .. } => "blow_up",
            Error::ContinuationFailed { .. } => "continuation_failed",
            Error::OutsideOmega { .. } => "outside_omega",
            Error::TMaxExceeded { .. } => "t_max_exceeded",
            Error::BadGamma { .. } => "bad_gamma",
            Error::InvalidMeasure(_) => "invalid_measure",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::BoundaryMap { source, .. } => source.kind(),
            Error::Backend(_) => "backend",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// Whether the error comes from bad input rather than a numerical failure.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::WrongSupportKind { .. }
            | Error::TMaxExceeded { .. }
            | Error::BadGamma { .. }
            | Error::InvalidMeasure(_)
            | Error::InvalidArgument(_)
            | Error::OriginExcluded
            | Error::Io(_)
            | Error::Json(_) => true,
            Error::BoundaryMap { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}
