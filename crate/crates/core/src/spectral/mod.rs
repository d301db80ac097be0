//! Displacement spectra and the quantities measured from them.
//!
//! Every [`NoiseSpectrum`] is one-sided: it covers `f ≥ 0` and carries twice
//! the double-sided density of the model, so that `∫ psd df` over the grid
//! equals the displacement variance.

mod calibration;
mod closed_form;
mod io;
mod lorentzian;
mod temperature;
mod welch;

pub use calibration::{
    apply_calibration, build_calibration, tone_power, CalibrationTable, DEFAULT_DRIVE_AMPLITUDE,
    DEFAULT_DRIVE_FREQ,
};
pub use closed_form::{background_psd, closed_form_spectrum, composite_spectrum, peak_band};
pub use io::{
    read_calibration, read_fit_report, read_spectrum, write_calibration, write_fit_report,
    write_spectrum,
};
pub use lorentzian::{
    default_window, fit_lorentzian, fit_lorentzian_with_background, LorentzianFit,
    DEFAULT_WINDOW_WIDTHS,
};
pub use temperature::{
    background_corrected_temperature, temperature_from_area, window_temperature,
    BackgroundCorrection, MIN_PEAK_TO_BACKGROUND,
};
pub use welch::{ensemble_welch, welch_psd, WelchEstimator};

use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::model::ModelError;
use crate::sim::SimError;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("input too short: need {needed} samples, have {available}")]
    TooShort { needed: usize, available: usize },
    #[error("fit did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error(
        "fit window holds more than one peak (residual structure {structure:.3} of peak height)"
    )]
    MultiplePeaks { structure: f64 },
    #[error("fit failed: {0}")]
    FitFailed(String),
    #[error("another mode at {freq_hz} Hz lies inside the fit window")]
    DegenerateOverlap { freq_hz: f64 },
    #[error("no drive tone found near {freq_hz} Hz in the phi = {phi} spectrum")]
    MissingTone { phi: f64, freq_hz: f64 },
    #[error("calibration table has no phi = 0 reference")]
    MissingReference,
    #[error("phi = {phi} outside calibration range [{lo}, {hi}]")]
    OutOfRange { phi: f64, lo: f64, hi: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where a spectrum came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    Simulated,
    Ingested,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::ClosedForm => "closed-form",
            Provenance::Simulated => "simulated",
            Provenance::Ingested => "ingested",
        })
    }
}

impl FromStr for Provenance {
    type Err = SpectralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "closed-form" => Ok(Provenance::ClosedForm),
            "simulated" => Ok(Provenance::Simulated),
            "ingested" => Ok(Provenance::Ingested),
            other => Err(SpectralError::InvalidSpectrum(format!(
                "unknown provenance `{other}`"
            ))),
        }
    }
}

/// One-sided displacement PSD on a uniform, ascending frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpectrum {
    freqs: Vec<f64>,
    psd: Vec<f64>,
    provenance: Provenance,
    resolution_bw: f64,
}

impl NoiseSpectrum {
    pub fn new(
        freqs: Vec<f64>,
        psd: Vec<f64>,
        provenance: Provenance,
        resolution_bw: f64,
    ) -> Result<Self, SpectralError> {
        let bad = |m: String| Err(SpectralError::InvalidSpectrum(m));
        if freqs.len() != psd.len() {
            return bad(format!(
                "{} frequencies but {} values",
                freqs.len(),
                psd.len()
            ));
        }
        if freqs.len() < 2 {
            return bad("need at least two points".into());
        }
        let n = freqs.len();
        let spacing = (freqs[n - 1] - freqs[0]) / (n - 1) as f64;
        if !(spacing.is_finite() && spacing > 0.0) {
            return bad("frequencies must be ascending".into());
        }
        for (i, f) in freqs.iter().enumerate() {
            let expected = freqs[0] + i as f64 * spacing;
            if !((f - expected).abs() <= 1e-9 * spacing.max(expected.abs())) {
                return bad(format!("grid not uniform at index {i}"));
            }
        }
        if let Some(i) = psd.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad(format!("psd[{i}] = {} is negative or not finite", psd[i]));
        }
        if !(resolution_bw.is_finite() && resolution_bw >= spacing * (1.0 - 1e-9)) {
            return bad(format!(
                "resolution bandwidth {resolution_bw} Hz below grid spacing {spacing} Hz"
            ));
        }
        Ok(Self {
            freqs,
            psd,
            provenance,
            resolution_bw,
        })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn psd(&self) -> &[f64] {
        &self.psd
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn resolution_bw(&self) -> f64 {
        self.resolution_bw
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        (self.freqs[self.len() - 1] - self.freqs[0]) / (self.len() - 1) as f64
    }

    /// `Σ psd · df` over the whole grid (m²).
    pub fn total_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.spacing()
    }

    /// `Σ psd · df` over bins with `lo ≤ f ≤ hi`.
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        self.freqs
            .iter()
            .zip(&self.psd)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, p)| p)
            .sum::<f64>()
            * self.spacing()
    }

    /// The bins with `lo ≤ f ≤ hi`.
    pub fn band(&self, lo: f64, hi: f64) -> Result<Self, SpectralError> {
        let (freqs, psd): (Vec<f64>, Vec<f64>) = self
            .freqs
            .iter()
            .zip(&self.psd)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(f, p)| (*f, *p))
            .unzip();
        Self::new(freqs, psd, self.provenance, self.resolution_bw)
    }

    /// Same grid, new values.
    pub fn map_psd<F: Fn(f64, f64) -> f64>(&self, f: F) -> Result<Self, SpectralError> {
        let psd = self
            .freqs
            .iter()
            .zip(&self.psd)
            .map(|(fr, p)| f(*fr, *p))
            .collect();
        Self::new(self.freqs.clone(), psd, self.provenance, self.resolution_bw)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Index of the largest value.
    pub fn peak_index(&self) -> usize {
        self.psd
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| {
                if *v > bv {
                    (i, *v)
                } else {
                    (bi, bv)
                }
            })
            .0
    }
}
