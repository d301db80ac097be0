use std::f64::consts::PI;

use super::{NoiseSpectrum, Provenance, SpectralError};
use crate::model::{
    displacement_psd, effective_dynamics, langevin_psd, mech_susceptibility, MechanicalMode,
    ModelError, OperatingPoint,
};

fn grid(f_lo: f64, f_hi: f64, n: usize) -> Result<(Vec<f64>, f64), SpectralError> {
    if !(f_lo >= 0.0 && f_hi > f_lo && n >= 2) {
        return Err(SpectralError::InvalidArgument(format!(
            "frequency grid [{f_lo}, {f_hi}] with {n} points"
        )));
    }
    let df = (f_hi - f_lo) / (n - 1) as f64;
    Ok(((0..n).map(|i| f_lo + i as f64 * df).collect(), df))
}

/// One-sided closed-form spectrum `2 |χ_eff(2πf)|² S_F` on `n` points.
pub fn closed_form_spectrum(
    op: &OperatingPoint,
    f_lo: f64,
    f_hi: f64,
    n: usize,
) -> Result<NoiseSpectrum, SpectralError> {
    composite_spectrum(op, &[], f_lo, f_hi, n)
}

/// One-sided thermal spectrum of other modes, each with its bare
/// susceptibility and the bath temperature (m²/Hz).
pub fn background_psd(other_modes: &[MechanicalMode], bath_temperature: f64, freq_hz: f64) -> f64 {
    other_modes
        .iter()
        .map(|m| {
            2.0 * mech_susceptibility(m, 2.0 * PI * freq_hz).norm_sqr()
                * langevin_psd(m, bath_temperature)
        })
        .sum()
}

/// Target mode spectrum plus the thermal tails of `other_modes`.
pub fn composite_spectrum(
    op: &OperatingPoint,
    other_modes: &[MechanicalMode],
    f_lo: f64,
    f_hi: f64,
    n: usize,
) -> Result<NoiseSpectrum, SpectralError> {
    let (freqs, df) = grid(f_lo, f_hi, n)?;
    let psd = freqs
        .iter()
        .map(|f| {
            Ok::<f64, ModelError>(
                2.0 * displacement_psd(op, 2.0 * PI * f)?
                    + background_psd(other_modes, op.temperature_bath, *f),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    NoiseSpectrum::new(freqs, psd, Provenance::ClosedForm, df)
}

/// `Ω_eff/2π ± widths · Γ_eff/2π` (Hz), clipped at zero. Unstable points use
/// the bare linewidth.
pub fn peak_band(op: &OperatingPoint, widths: f64) -> (f64, f64) {
    let d = effective_dynamics(op);
    let gamma = if d.stable {
        d.gamma_eff
    } else {
        op.mode.gamma_m()
    };
    let center = d.omega_eff / (2.0 * PI);
    let half = widths * gamma / (2.0 * PI);
    ((center - half).max(0.0), center + half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::BOLTZMANN;
    use crate::sim::fixtures::reference_op;

    #[test]
    fn area_is_equipartition_variance() {
        let op = reference_op(0.0, 0.0, 300.0);
        let (lo, hi) = peak_band(&op, 2000.0);
        let s = closed_form_spectrum(&op, lo, hi, 400_001).unwrap();
        let expected = BOLTZMANN * 300.0 / op.mode.spring_constant();
        // the band misses ≈ (2/π)/4000 of a Lorentzian
        assert!((s.total_power() / expected - 1.0).abs() < 1e-3);
    }

    #[test]
    fn unstable_point_is_refused() {
        let op = reference_op(0.11, 3.2e-3, 300.0);
        assert!(closed_form_spectrum(&op, 8e5, 8.3e5, 100).is_err());
    }

    #[test]
    fn background_adds_other_mode_tail() {
        let op = reference_op(0.0, 0.0, 300.0);
        let other = MechanicalMode::from_frequency_hz(1.2e6, 190e-9, 30.0).unwrap();
        let a = closed_form_spectrum(&op, 8.0e5, 8.3e5, 301).unwrap();
        let b = composite_spectrum(&op, &[other], 8.0e5, 8.3e5, 301).unwrap();
        for i in 0..301 {
            let f = a.freqs()[i];
            assert!(
                (b.psd()[i] - a.psd()[i] - background_psd(&[other], 300.0, f)).abs()
                    <= 1e-12 * b.psd()[i]
            );
        }
    }
}
