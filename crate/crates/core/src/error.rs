use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("position {x} lies outside the well [0, {width}]")]
    OutsideWell { x: f64, width: f64 },

    #[error("derivative order {0} is not supported (1..=6)")]
    UnsupportedOrder(u32),

    #[error("grid resolves the packet with {points_per_sigma:.2} points per sigma, need at least {required}")]
    Resolution {
        points_per_sigma: f64,
        required: f64,
    },

    #[error("level {requested} exceeds the highest level {limit} representable on the grid")]
    Aliasing { requested: usize, limit: usize },

    #[error("coefficient vector has no weight")]
    EmptyState,

    #[error("numerical blow-up at step {step}")]
    NumericalBlowup { step: u64 },

    #[error("sample time {time} outside [0, {t_final}]")]
    SampleTime { time: f64, t_final: f64 },

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("time series is not uniformly sampled")]
    NonUniformSampling,

    #[error("carpet has no rows before the first wall contact (t < {limit})")]
    NoPreReflectionRows { limit: f64 },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
