use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alpha must be positive, got {0}")]
    NonPositiveAlpha(String),

    #[error("alpha {0} is outside the exact-evaluation domain (2*alpha must be an integer)")]
    AlphaNotHalfInteger(String),

    #[error("gamma argument {0} is not a positive integer or half-integer")]
    GammaArgument(String),

    #[error("lower parameter {param} is a pole at term {index} inside the truncated range")]
    HypergeometricPole { param: String, index: usize },

    #[error("series does not terminate and no term cap was given")]
    NonTerminating,

    #[error("requested order {requested} but only {available} moments are available")]
    InsufficientMoments { requested: usize, available: usize },

    #[error("point {x} lies outside the support [{a}, {b}]")]
    OutOfSupport { x: String, a: String, b: String },

    #[error("invalid interval: {0}")]
    InvalidInterval(String),

    #[error("term ratio could not be certified below {bound} within {cap} terms")]
    Certification { bound: String, cap: usize },

    #[error("density nonpositive at {bad} of {total} quadrature nodes")]
    NonPositiveDensity { bad: usize, total: usize },

    #[error("cannot parse {0:?} as a decimal")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
