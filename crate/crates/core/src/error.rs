use thiserror::Error;

/// Errors raised by the analysis engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown builtin system `{0}`")]
    UnknownBuiltin(String),

    #[error("grid of {requested} samples exceeds the limit of {limit}; use spacing h >= {required_spacing}")]
    GridTooLarge {
        requested: u128,
        limit: usize,
        required_spacing: f64,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("sample set is empty")]
    EmptySampleSet,

    #[error("target set is empty")]
    EmptyTargets,

    #[error("sample {0} is not covered by the level matrix")]
    NotCovered(usize),

    #[error("sample index {index} out of range for {len} samples")]
    SampleOutOfRange { index: usize, len: usize },

    #[error("levels are not sorted ascending at position {0}")]
    UnsortedLevels(usize),

    #[error("non-finite vector field value at t = {time}, state {state:?}")]
    NonFiniteField { time: f64, state: Vec<f64> },

    #[error("link duration T = {t} is outside the integrated window [{t_min}, {t_max}]")]
    DurationOutOfRange { t: f64, t_min: f64, t_max: f64 },

    #[error("eps' = {eps_prime} must exceed the forward level {forward}")]
    EpsPrimeTooSmall { eps_prime: f64, forward: f64 },

    #[error("no analytic form registered for `{0}`")]
    NoAnalyticForm(String),

    #[error("diagram rendering needs a 1-D embedded system (got dimension {0}); export CSV instead")]
    NotOneDimensional(usize),

    #[error("invalid level token `{0}`")]
    InvalidLevel(String),

    #[error("spec error: {0}")]
    Spec(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
