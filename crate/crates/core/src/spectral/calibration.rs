//! Detection-gain calibration from a drive tone of known amplitude.
//!
//! The gain at each detuning is the tone amplitude seen at that detuning
//! relative to the `phi = 0` spectrum. Between table entries the gain is
//! interpolated linearly; outside the table it is undefined.

use super::{NoiseSpectrum, SpectralError};

/// Default drive tone displacement amplitude (m).
pub const DEFAULT_DRIVE_AMPLITUDE: f64 = 1e-13;
/// Default drive tone frequency (Hz).
pub const DEFAULT_DRIVE_FREQ: f64 = 814e3;

/// Bins on each side of the tone counted as tone power.
const TONE_HALF_WIDTH: usize = 4;
/// Bins on each side used to estimate the local baseline.
const BASELINE_HALF_WIDTH: usize = 64;
/// Tone peak must exceed the baseline by this factor.
const MIN_TONE_CONTRAST: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    entries: Vec<(f64, f64)>,
    pub drive_amplitude_m: f64,
    pub drive_freq: f64,
}

impl CalibrationTable {
    /// Entries are sorted by phi. Requires a `phi = 0` entry with gain 1,
    /// positive gains and distinct phi values.
    pub fn new(
        mut entries: Vec<(f64, f64)>,
        drive_amplitude_m: f64,
        drive_freq: f64,
    ) -> Result<Self, SpectralError> {
        let bad = |m: String| Err(SpectralError::InvalidArgument(m));
        if entries
            .iter()
            .any(|(p, g)| !p.is_finite() || !(g.is_finite() && *g > 0.0))
        {
            return bad("gains must be positive and finite".into());
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return bad("phi values must be distinct".into());
        }
        match entries.iter().find(|(p, _)| *p == 0.0) {
            None => return Err(SpectralError::MissingReference),
            Some((_, g)) if (g - 1.0).abs() > 1e-12 => {
                return bad(format!("gain at phi = 0 is {g}, expected 1"))
            }
            _ => {}
        }
        if !(drive_amplitude_m > 0.0 && drive_freq > 0.0) {
            return bad("drive amplitude and frequency must be positive".into());
        }
        Ok(Self {
            entries,
            drive_amplitude_m,
            drive_freq,
        })
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn range(&self) -> (f64, f64) {
        (self.entries[0].0, self.entries[self.entries.len() - 1].0)
    }

    pub fn gain(&self, phi: f64) -> Result<f64, SpectralError> {
        let (lo, hi) = self.range();
        if !(phi >= lo && phi <= hi) {
            return Err(SpectralError::OutOfRange { phi, lo, hi });
        }
        let i = self.entries.partition_point(|(p, _)| *p < phi);
        if self.entries[i].0 == phi {
            return Ok(self.entries[i].1);
        }
        let (p0, g0) = self.entries[i - 1];
        let (p1, g1) = self.entries[i];
        Ok(g0 + (g1 - g0) * (phi - p0) / (p1 - p0))
    }
}

/// Power in the drive tone above the local baseline (m²).
pub fn tone_power(spectrum: &NoiseSpectrum, freq_hz: f64, phi: f64) -> Result<f64, SpectralError> {
    let missing = || SpectralError::MissingTone { phi, freq_hz };
    let freqs = spectrum.freqs();
    let psd = spectrum.psd();
    let df = spectrum.spacing();
    if freq_hz < freqs[0] || freq_hz > freqs[freqs.len() - 1] {
        return Err(missing());
    }
    let centre = ((freq_hz - freqs[0]) / df).round() as usize;
    let core =
        centre.saturating_sub(TONE_HALF_WIDTH)..(centre + TONE_HALF_WIDTH + 1).min(psd.len());
    let outer = centre.saturating_sub(BASELINE_HALF_WIDTH)
        ..(centre + BASELINE_HALF_WIDTH + 1).min(psd.len());
    let mut side: Vec<f64> = outer
        .filter(|i| !core.contains(i))
        .map(|i| psd[i])
        .collect();
    let baseline = if side.is_empty() {
        0.0
    } else {
        side.sort_by(f64::total_cmp);
        side[side.len() / 2]
    };
    let peak = psd[core.clone()].iter().cloned().fold(0.0, f64::max);
    if !(peak > MIN_TONE_CONTRAST * baseline) || peak == 0.0 {
        return Err(missing());
    }
    Ok(psd[core].iter().map(|p| p - baseline).sum::<f64>() * df)
}

/// Builds a table from `(phi, spectrum)` pairs that each carry the drive
/// tone at `drive_freq`.
pub fn build_calibration(
    spectra: &[(f64, NoiseSpectrum)],
    drive_amplitude_m: f64,
    drive_freq: f64,
) -> Result<CalibrationTable, SpectralError> {
    let reference = spectra
        .iter()
        .find(|(phi, _)| *phi == 0.0)
        .ok_or(SpectralError::MissingReference)?;
    let p0 = tone_power(&reference.1, drive_freq, 0.0)?;
    let entries = spectra
        .iter()
        .map(|(phi, s)| {
            let g = if *phi == 0.0 {
                1.0
            } else {
                (tone_power(s, drive_freq, *phi)? / p0).sqrt()
            };
            Ok((*phi, g))
        })
        .collect::<Result<Vec<_>, SpectralError>>()?;
    CalibrationTable::new(entries, drive_amplitude_m, drive_freq)
}

/// Divides the PSD by `gain(phi)²`.
pub fn apply_calibration(
    spectrum: &NoiseSpectrum,
    table: &CalibrationTable,
    phi: f64,
) -> Result<NoiseSpectrum, SpectralError> {
    let g = table.gain(phi)?;
    spectrum.map_psd(|_, p| p / (g * g))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::lorentzian;
    use super::*;

    /// Thermal peak plus a one-bin tone of amplitude `a`, all scaled by `g²`.
    fn with_tone(a: f64, g: f64) -> NoiseSpectrum {
        let base = lorentzian(814_000.0, 81.4, 8.33e-28, 1e-32, 812_000.0, 818_000.0, 6001);
        let df = base.spacing();
        base.map_psd(|f, p| {
            let tone = if (f - 815_000.0).abs() < 0.5 * df {
                0.5 * a * a / df
            } else {
                0.0
            };
            g * g * (p + tone)
        })
        .unwrap()
    }

    #[test]
    fn equal_tones_give_unit_gains() {
        let spectra: Vec<_> = [-0.5, 0.0, 0.5]
            .iter()
            .map(|p| (*p, with_tone(1e-13, 1.0)))
            .collect();
        let t = build_calibration(&spectra, 1e-13, 815_000.0).unwrap();
        for (_, g) in t.entries() {
            assert!((g - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn tone_power_is_half_amplitude_squared() {
        let s = with_tone(1e-13, 1.0);
        let p = tone_power(&s, 815_000.0, 0.0).unwrap();
        assert!((p / 5e-27 - 1.0).abs() < 0.01, "{p}");
    }

    #[test]
    fn injected_gains_recovered_and_undone() {
        let phis = [-0.8, -0.4, 0.0, 0.3, 0.6];
        let truth = |phi: f64| 1.0 / (1.0 + phi * phi);
        let spectra: Vec<_> = phis
            .iter()
            .map(|p| (*p, with_tone(1e-13, truth(*p))))
            .collect();
        let t = build_calibration(&spectra, 1e-13, 815_000.0).unwrap();
        for (phi, g) in t.entries() {
            assert!((g / truth(*phi) - 1.0).abs() < 0.01);
        }
        let clean = with_tone(1e-13, 1.0);
        for (phi, s) in &spectra {
            let fixed = apply_calibration(s, &t, *phi).unwrap();
            for (a, b) in fixed.psd().iter().zip(clean.psd()) {
                assert!((a / b - 1.0).abs() < 0.01);
            }
        }
        // idempotence: a table built from calibrated spectra is the identity
        let calibrated: Vec<_> = spectra
            .iter()
            .map(|(phi, s)| (*phi, apply_calibration(s, &t, *phi).unwrap()))
            .collect();
        let again = build_calibration(&calibrated, 1e-13, 815_000.0).unwrap();
        for (_, g) in again.entries() {
            assert!((g - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn square_law_and_interpolation() {
        let t = CalibrationTable::new(vec![(0.0, 1.0), (0.5, 0.5)], 1e-13, 814e3).unwrap();
        let s = with_tone(1e-13, 1.0);
        let c = apply_calibration(&s, &t, 0.5).unwrap();
        assert!((c.psd()[10] / s.psd()[10] - 4.0).abs() < 1e-12);
        assert_eq!(c.provenance(), s.provenance());
        assert!((t.gain(0.25).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(apply_calibration(&s, &t, 0.0).unwrap(), s);
    }

    #[test]
    fn errors() {
        let t = CalibrationTable::new(vec![(0.0, 1.0), (0.5, 0.5)], 1e-13, 814e3).unwrap();
        assert!(matches!(t.gain(0.6), Err(SpectralError::OutOfRange { .. })));
        assert!(matches!(
            CalibrationTable::new(vec![(0.1, 1.0)], 1e-13, 814e3),
            Err(SpectralError::MissingReference)
        ));
        assert!(CalibrationTable::new(vec![(0.0, 1.0), (0.0, 1.0)], 1e-13, 814e3).is_err());
        let no_tone = lorentzian(814_000.0, 81.4, 8.33e-28, 1e-32, 812_000.0, 818_000.0, 6001);
        assert!(matches!(
            build_calibration(&[(0.0, no_tone)], 1e-13, 815_000.0),
            Err(SpectralError::MissingTone { .. })
        ));
        let s = with_tone(1e-13, 1.0);
        assert!(matches!(
            build_calibration(&[(0.2, s)], 1e-13, 815_000.0),
            Err(SpectralError::MissingReference)
        ));
    }
}
