//! Config-driven runner for `conedex-core`: JSON models and reports, CSV tables, parallel job
//! fan-out, and the command implementations behind the `conedex` binary.

pub mod config;
pub mod dto;
pub mod report;
pub mod run;
pub mod table;

pub use config::{ExperimentConfig, Format, ModelRef, WeightMode};
pub use report::{CheckOutcome, RunReport, Status};
pub use run::{run, Command};
pub use table::Table;

use conedex_core::index::IndexError;
use conedex_core::indicial::IndicialError;
use conedex_core::spectral::SpectralError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IDENTITY: i32 = 2;
pub const EXIT_INDETERMINATE: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("indeterminate: {0}")]
    Indeterminate(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io(_) => EXIT_CONFIG,
            RunError::Indeterminate(_) => EXIT_INDETERMINATE,
        }
    }
}

impl From<SpectralError> for RunError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::Indeterminate(_) | SpectralError::Integration(_) => RunError::Indeterminate(e.to_string()),
            SpectralError::Indicial(i) => i.into(),
            _ => RunError::Config(e.to_string()),
        }
    }
}

impl From<IndicialError> for RunError {
    fn from(e: IndicialError) -> Self {
        match e {
            IndicialError::OnSpectrum { .. }
            | IndicialError::BadWindow(..)
            | IndicialError::SingularLeading(_)
            | IndicialError::NonReal { .. } => RunError::Config(e.to_string()),
            _ => RunError::Indeterminate(e.to_string()),
        }
    }
}

impl From<IndexError> for RunError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::Spectral(s) => s.into(),
            IndexError::Indicial(i) => i.into(),
            IndexError::Grading { .. } => RunError::Indeterminate(e.to_string()),
            _ => RunError::Config(e.to_string()),
        }
    }
}
