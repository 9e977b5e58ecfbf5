use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid rollout pair ({i}, {j})")]
    InvalidPair { i: usize, j: usize },

    #[error("group size {size} is too small (need at least {min})")]
    InsufficientGroup { size: usize, min: usize },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid rubric: {0}")]
    InvalidRubric(String),

    #[error("score {value} at pair ({i}, {j}) criterion {k} is outside [0, {s_max}]")]
    ScoreOutOfRange {
        i: usize,
        j: usize,
        k: usize,
        value: f64,
        s_max: f64,
    },

    #[error("{0} must be a nonzero vector")]
    ZeroVector(&'static str),

    #[error("degenerate direction: base weights times headroom is the zero vector")]
    DegenerateDirection,

    #[error("matrix {0} is not symmetric positive-definite")]
    NotPositiveDefinite(&'static str),

    #[error("invalid frontier: {0}")]
    InvalidFrontier(String),

    #[error("frontier gap {delta} must be positive")]
    FrontierGap { delta: f64 },

    #[error("shift {shift} moves criterion {k} outside [0, {s_max}]")]
    ShiftOutOfRange { k: usize, shift: f64, s_max: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("thresholds inverted: hard {hard} must be below easy {easy}")]
    InvertedThresholds { hard: f64, easy: f64 },

    #[error("{location}: {message}")]
    Parse { location: String, message: String },

    #[error("missing score record for pair ({i}, {j})")]
    MissingPair { i: usize, j: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
