use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = EnsError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum EnsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("input has nonzero mean {mean:e} (tolerance {tol:e}); split off the mass with an analytic background first")]
    NonZeroMean { mean: f64, tol: f64 },

    #[error("time must be strictly positive, got {0}")]
    NonPositiveTime(f64),

    #[error("weight blow-up: weighted integrand at the box edge is {ratio:e} of its peak (limit 1e-6); enlarge the box or shrink the field")]
    WeightBlowUp { ratio: f64 },

    #[error("negative vorticity {min:e} below the entropy floor; entropy is undefined")]
    NegativeVorticity { min: f64 },

    #[error("grid radius {r} exceeds profile range {r_max}")]
    ProfileRange { r: f64, r_max: f64 },

    #[error("steady profile not representable: {0}")]
    ProfileUnresolved(String),

    #[error("semigroup box too small: final box {box_len} < {required} (8 Gaussian widths)")]
    BoxTooSmall { box_len: f64, required: f64 },

    #[error("blow-up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },

    #[error("conservation breach at t = {t}: |d alpha| = {d_alpha:e}, |d beta| = {d_beta:e}, limit {limit:e}")]
    ConservationBreach { t: f64, d_alpha: f64, d_beta: f64, limit: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

impl EnsError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EnsError::Io { path: path.into(), source }
    }
}
