use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid bubble: {0}")]
    InvalidBubble(String),

    #[error("non-finite parameter `{0}`")]
    NonFinite(&'static str),

    #[error("action variable h = {0} is below 1/2")]
    ActionBelowGround(f64),

    #[error("DFMP requires Gaussian spectrum (bubble {0} carries other Hermite modes)")]
    NonGaussian(usize),

    #[error("degenerate bubble {0}: zero amplitude")]
    DegenerateBubble(usize),

    #[error("Gaussian exponent has Re(z) = {0} <= 0")]
    NonDecaying(f64),

    #[error("basis index {index} out of range 1..={max}")]
    BasisIndex { index: usize, max: usize },

    #[error("bubble index {index} out of range (N = {len})")]
    BubbleIndex { index: usize, len: usize },

    #[error("non-finite derivative produced in RK stage {0}")]
    NonFiniteStage(usize),

    #[error("time step |dt| = {0} too close to pi/2; substep the linear propagator")]
    StepTooLarge(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("{0} requires d = 2")]
    RequiresPlane(&'static str),

    #[error("unknown test case {0}")]
    UnknownTestCase(String),

    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("failed to parse configuration: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("failed to serialize configuration: {0}")]
    Serialize(#[from] toml::ser::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
