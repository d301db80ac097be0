use super::{SimError, Trajectory};
use crate::constants::BOLTZMANN;

/// Envelope fits below this coefficient of determination are rejected.
pub const MIN_R_SQUARED: f64 = 0.99;

/// Peaks closer than this multiple of the bare thermal rms to the noise are
/// ignored when the run had a non-zero bath temperature.
pub const NOISE_FLOOR_FACTOR: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingdownFit {
    /// Envelope decay rate (1/s); positive for decay, negative for growth.
    /// Equals `Γ_eff / 2` for a single damped mode.
    pub rate: f64,
    pub r_squared: f64,
    pub peaks: usize,
}

/// Fits `ln(envelope)` against time using the interpolated positive peaks of
/// the displacement.
pub fn ringdown_rate(trajectory: &Trajectory) -> Result<RingdownFit, SimError> {
    let x = &trajectory.samples;
    let k = trajectory.op.mode.spring_constant();
    let thermal = (BOLTZMANN * trajectory.op.temperature_bath / k).sqrt();
    let largest = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (NOISE_FLOOR_FACTOR * thermal).max(largest * 1e-12);

    let mut n = 0usize;
    let (mut st, mut sy, mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 1..x.len().saturating_sub(1) {
        let (y0, y1, y2) = (x[i - 1], x[i], x[i + 1]);
        if !(y1 > y0 && y1 >= y2 && y1 > floor) {
            continue;
        }
        let curvature = y0 - 2.0 * y1 + y2;
        let offset = if curvature < 0.0 {
            0.5 * (y0 - y2) / curvature
        } else {
            0.0
        };
        let peak = y1 - 0.25 * (y0 - y2) * offset;
        let t = trajectory.time(i) + offset * trajectory.dt;
        let y = peak.ln();
        n += 1;
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        syy += y * y;
    }
    if n < 8 {
        return Err(SimError::TooFewPeaks { found: n });
    }
    let nf = n as f64;
    let var_t = stt - st * st / nf;
    let var_y = syy - sy * sy / nf;
    let cov = sty - st * sy / nf;
    let slope = cov / var_t;
    let r_squared = if var_y > 0.0 {
        (cov * cov / (var_t * var_y)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let fit = RingdownFit {
        rate: -slope,
        r_squared,
        peaks: n,
    };
    if r_squared < MIN_R_SQUARED {
        return Err(SimError::PoorFit { fit });
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::reference_op;
    use super::super::{integrate, SimConfig};
    use super::*;
    use crate::model::effective_dynamics;

    fn cold_ringdown(phi: f64, p_in: f64, duration: f64) -> Trajectory {
        let op = reference_op(phi, p_in, 0.0);
        let cfg = SimConfig {
            duration,
            burn_in: 0.0,
            initial_displacement: 1e-12,
            ..SimConfig::for_operating_point(&op)
        };
        integrate(&op, &cfg).unwrap()
    }

    #[test]
    fn bare_mode_decays_at_half_linewidth() {
        let t = cold_ringdown(0.0, 0.0, 4e-3);
        let fit = ringdown_rate(&t).unwrap();
        let expected = t.op.mode.gamma_m() / 2.0;
        assert!((fit.rate / expected - 1.0).abs() < 0.05, "{fit:?}");
        assert!(fit.r_squared > 0.999);
    }

    #[test]
    fn cooled_mode_decays_at_effective_rate() {
        let t = cold_ringdown(-0.45, 3.2e-3, 2e-3);
        let fit = ringdown_rate(&t).unwrap();
        let expected = effective_dynamics(&t.op).gamma_eff / 2.0;
        assert!(
            (fit.rate / expected - 1.0).abs() < 0.05,
            "{fit:?} vs {expected}"
        );
    }

    #[test]
    fn noise_only_record_is_rejected() {
        let op = reference_op(0.0, 0.0, 300.0);
        let cfg = SimConfig {
            duration: 1e-3,
            burn_in: 0.0,
            ..SimConfig::for_operating_point(&op)
        };
        let t = integrate(&op, &cfg).unwrap();
        assert!(matches!(
            ringdown_rate(&t),
            Err(SimError::TooFewPeaks { .. })
        ));
    }
}
