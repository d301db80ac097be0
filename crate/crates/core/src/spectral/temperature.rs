//! Equipartition temperatures from fitted peaks, with and without the
//! thermal tails of other mechanical modes.

use std::f64::consts::PI;

use super::closed_form::background_psd;
use super::lorentzian::{fit_lorentzian_with_background, window_around_peak};
use super::{LorentzianFit, NoiseSpectrum, SpectralError};
use crate::constants::BOLTZMANN;
use crate::model::MechanicalMode;

/// Peak height over background below which a corrected temperature is
/// flagged unreliable.
pub const MIN_PEAK_TO_BACKGROUND: f64 = 0.1;

/// `M (2π center)² area / k_B` (K).
pub fn temperature_from_area(fit: &LorentzianFit, mode: &MechanicalMode) -> f64 {
    mode.mass() * (2.0 * PI * fit.center).powi(2) * fit.area / BOLTZMANN
}

/// Temperature from the raw power inside `window`, background included,
/// scaled up by the fraction of a Lorentzian of width `fwhm` centred at
/// `center` that the window holds.
pub fn window_temperature(
    spectrum: &NoiseSpectrum,
    mode: &MechanicalMode,
    window: (f64, f64),
    center: f64,
    fwhm: f64,
) -> f64 {
    let (lo, hi) = window;
    let h = 0.5 * fwhm;
    let fraction = (((hi - center) / h).atan() - ((lo - center) / h).atan()) / PI;
    let area = spectrum.band_power(lo, hi) / fraction;
    mode.mass() * (2.0 * PI * center).powi(2) * area / BOLTZMANN
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundCorrection {
    /// From the Lorentzian component only (K).
    pub temperature: f64,
    /// From all power in the fit window (K).
    pub uncorrected: f64,
    pub fit: LorentzianFit,
    window: (f64, f64),
    /// Total background density at the fitted centre (m²/Hz).
    pub background_at_peak: f64,
    pub reliable: bool,
}

impl BackgroundCorrection {
    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn peak_to_background(&self) -> f64 {
        self.fit.peak_height() / self.background_at_peak
    }
}

/// Fits the target peak on top of the bare-susceptibility tails of
/// `other_modes` at `bath_temperature` and converts the Lorentzian area
/// alone to a temperature.
pub fn background_corrected_temperature(
    spectrum: &NoiseSpectrum,
    mode: &MechanicalMode,
    other_modes: &[MechanicalMode],
    bath_temperature: f64,
) -> Result<BackgroundCorrection, SpectralError> {
    if let Some(m) = other_modes
        .iter()
        .find(|m| (m.frequency_hz() - mode.frequency_hz()).abs() <= 1e-9 * mode.frequency_hz())
    {
        return Err(SpectralError::InvalidArgument(format!(
            "background mode at {} Hz coincides with the target mode",
            m.frequency_hz()
        )));
    }
    let bg = |f: f64| background_psd(other_modes, bath_temperature, f);
    let subtracted: Vec<f64> = spectrum
        .freqs()
        .iter()
        .zip(spectrum.psd())
        .map(|(f, p)| p - bg(*f))
        .collect();
    let window = window_around_peak(spectrum.freqs(), &subtracted);
    if let Some(m) = other_modes
        .iter()
        .find(|m| m.frequency_hz() >= window.0 && m.frequency_hz() <= window.1)
    {
        return Err(SpectralError::DegenerateOverlap {
            freq_hz: m.frequency_hz(),
        });
    }
    let fit = fit_lorentzian_with_background(spectrum, window, bg)?;
    let background_at_peak = bg(fit.center) + fit.background.max(0.0);
    let uncorrected = window_temperature(spectrum, mode, window, fit.center, fit.fwhm);
    let reliable = background_at_peak == 0.0
        || fit.peak_height() / background_at_peak >= MIN_PEAK_TO_BACKGROUND;
    Ok(BackgroundCorrection {
        temperature: temperature_from_area(&fit, mode),
        uncorrected,
        fit,
        window,
        background_at_peak,
        reliable,
    })
}
