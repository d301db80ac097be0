//! Configuration, parameter sweeps, stability maps and the file emitters
//! behind the `optospring` command line.

mod commands;
mod config;
mod csv;
mod grids;
mod svg;

pub use commands::{
    run_fit, run_response_sweep, run_simulate, run_spectrum, run_stability_map,
    run_temperature_sweep, FitOptions, Outcome, Status,
};
pub use config::{
    linspace, BathSpec, CavitySpec, ExperimentConfig, GridSpec, ModeSpec, OutputSpec, PowerKind,
    PowerSpec, SimSpec, SpectrumSeries, SpectrumSpec, StabilityMapSpec, TemperatureSweepSpec,
    MAX_ABS_PHI, PAPER_DEFAULTS,
};
pub use csv::{read_csv, Column, CsvTable};
pub use grids::{
    damping_ratio_at, response_sweep, spectrum_set, stability_map, temperature_sweep,
    BoundaryPoint, Contour, ResponseRow, SpectrumEntry, StabilityMap, TemperatureRow,
};
pub use svg::{heat_map, line_chart, Series};

use std::path::PathBuf;
use thiserror::Error;

use crate::model::ModelError;
use crate::sim::SimError;
use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("{}{message}", path.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default())]
    Parse {
        path: Option<PathBuf>,
        message: String,
    },
    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Broad class of a failure, for callers mapping errors to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad configuration, flags or input files.
    Input,
    /// A spectral fit did not produce a usable result.
    Fit,
    Other,
}

impl SweepError {
    pub fn class(&self) -> ErrorClass {
        match self {
            SweepError::Parse { .. } | SweepError::Config { .. } | SweepError::Model(_) => {
                ErrorClass::Input
            }
            SweepError::Spectral(e) => match e {
                SpectralError::NonConvergence { .. }
                | SpectralError::MultiplePeaks { .. }
                | SpectralError::FitFailed(_)
                | SpectralError::DegenerateOverlap { .. } => ErrorClass::Fit,
                SpectralError::Io(_) | SpectralError::Sim(_) => ErrorClass::Other,
                _ => ErrorClass::Input,
            },
            SweepError::Sim(SimError::PoorFit { .. } | SimError::TooFewPeaks { .. }) => {
                ErrorClass::Fit
            }
            SweepError::Sim(
                SimError::StepTooCoarse { .. }
                | SimError::InvalidConfig { .. }
                | SimError::Model(_),
            ) => ErrorClass::Input,
            _ => ErrorClass::Other,
        }
    }
}
