use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the simulation and estimation chain can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("config parse error at line {line}: {reason}")]
    ConfigParse { line: usize, reason: String },

    #[error("noncollinear phase matching needs a positive emission angle (got {theta0} rad)")]
    Regime { theta0: f64 },

    #[error("simulation grid: {0}")]
    Grid(String),

    #[error("negative intensity {value} at pixel ({row}, {col})")]
    NegativeIntensity { row: usize, col: usize, value: f64 },

    #[error("region: {0}")]
    Region(String),

    #[error("degenerate correlation map: {0}")]
    DegenerateMap(String),

    #[error("sub-thermal variance: excess {excess:.4} <= 0, noise model does not match the data")]
    SubThermal { excess: f64 },

    #[error("Poisson-limited region: no excess variance, temporal mode count unbounded")]
    PoissonLimited,

    #[error("fit: {0}")]
    Fit(String),

    #[error("corrupt frame file {path}: {reason}")]
    CorruptFrame { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Short stable identifier written into campaign tables.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidConfig { .. } => "invalid_config",
            Error::ConfigParse { .. } => "config_parse",
            Error::Regime { .. } => "regime",
            Error::Grid(_) => "grid",
            Error::NegativeIntensity { .. } => "negative_intensity",
            Error::Region(_) => "region",
            Error::DegenerateMap(_) => "degenerate_map",
            Error::SubThermal { .. } => "sub_thermal",
            Error::PoissonLimited => "poisson_limited",
            Error::Fit(_) => "fit",
            Error::CorruptFrame { .. } => "corrupt_frame",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig { .. }
            | Error::ConfigParse { .. }
            | Error::Regime { .. }
            | Error::Grid(_) => 2,
            Error::Io(_) | Error::Csv(_) | Error::CorruptFrame { .. } => 3,
            _ => 4,
        }
    }
}
