use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid arm: {0}")]
    InvalidArm(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("mean {value} outside the {family} mean domain")]
    MeanDomain { family: &'static str, value: f64 },

    #[error("threshold must be finite and non-negative, got {0}")]
    InvalidThreshold(f64),

    #[error("horizon {horizon} is smaller than the number of arms {arms}")]
    HorizonTooShort { horizon: u64, arms: usize },

    #[error("arm index {arm} out of range for {arms} arms")]
    ArmOutOfRange { arm: usize, arms: usize },

    #[error("parameter {name} = {value} outside admissible range [{lo}, {hi}]")]
    Inadmissible {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cell {cell}: {path}: {source}")]
    CellIo {
        cell: usize,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
