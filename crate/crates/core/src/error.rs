use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("population difference z = {z} outside [-1, 1]")]
    Domain { z: f64 },

    #[error("equations of motion are singular at z = {z}")]
    Singular { z: f64 },

    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("unstable step at t = {t}: |dz| = {dz} exceeds threshold")]
    UnstableStep { t: f64, dz: f64 },

    #[error("{excluded} of {total} trajectories excluded as unstable (limit 1%)")]
    TooManyExclusions { excluded: usize, total: usize },

    #[error("quadrature did not converge: estimated error {error:e} above tolerance {tolerance:e}")]
    Quadrature { error: f64, tolerance: f64 },

    #[error("averaging window [{start}, {end}] is invalid: {reason}")]
    Window { start: f64, end: f64, reason: String },

    #[error("config{}: {message}", at_line(*line))]
    Config { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path} already exists and is not empty (use --force to overwrite)")]
    OutputExists { path: PathBuf },
}

fn at_line(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" line {line}")
    }
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Singular { .. } => "singular",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::UnstableStep { .. } => "unstable_step",
            Error::TooManyExclusions { .. } => "too_many_exclusions",
            Error::Quadrature { .. } => "quadrature",
            Error::Window { .. } => "window",
            Error::Config { .. } => "config",
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
            Error::OutputExists { .. } => "output_exists",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
