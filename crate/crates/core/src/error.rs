use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("zero distance between {0}")]
    ZeroDistance(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("spin {index} has value {value}, expected -1 or +1")]
    InvalidSpin { index: usize, value: i8 },

    #[error("spin index {index} out of range for {num_spins} spins")]
    IndexOutOfRange { index: usize, num_spins: usize },

    #[error("degree {0} exceeds the supported maximum of 4")]
    DegreeTooHigh(usize),

    #[error("penalty weight must be positive, got {0}")]
    InvalidAlpha(f64),

    #[error("cannot quantize an all-zero problem")]
    AllZeroProblem,

    #[error("effective channel is zero")]
    ZeroEffectiveChannel,

    #[error("{num_spins} spins exceeds the exhaustive search cap of {cap}")]
    ExhaustiveCap { num_spins: usize, cap: usize },

    #[error("unknown solver engine `{0}`")]
    UnknownEngine(String),

    #[error("bad solver spec `{spec}`: {reason}")]
    BadSolverSpec { spec: String, reason: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
