//! Lorentzian peak fitting by Levenberg–Marquardt.
//!
//! Model: `L(f) = b + B(f) + (A/π)(w/2) / ((f − c)² + (w/2)²)` with centre
//! `c`, full width `w`, area `A`, constant background `b` and an optional
//! fixed background profile `B(f)`. The fit runs in normalized units
//! (frequency offset in initial widths, values in initial peak heights).

use nalgebra::{Matrix4, Vector4};
use std::f64::consts::PI;

use super::{NoiseSpectrum, SpectralError};

/// Default fit window half-width, in initial FWHM estimates.
pub const DEFAULT_WINDOW_WIDTHS: f64 = 20.0;

const MAX_ITERATIONS: usize = 500;
/// Smoothed residual above this fraction of the peak height flags a second
/// peak inside the window.
const RESIDUAL_STRUCTURE_LIMIT: f64 = 0.25;
const RESIDUAL_SMOOTHING: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianFit {
    /// Hz.
    pub center: f64,
    /// Hz.
    pub fwhm: f64,
    /// Integrated peak power (m²).
    pub area: f64,
    /// Constant background (m²/Hz).
    pub background: f64,
    /// Coefficient of determination, clamped to [0, 1].
    pub goodness: f64,
}

impl LorentzianFit {
    pub fn peak_height(&self) -> f64 {
        2.0 * self.area / (PI * self.fwhm)
    }

    /// Peak plus constant background at `f`.
    pub fn eval(&self, f: f64) -> f64 {
        let h = 0.5 * self.fwhm;
        self.background + self.area / PI * h / ((f - self.center).powi(2) + h * h)
    }
}

/// Centre ± [`DEFAULT_WINDOW_WIDTHS`] FWHM around the highest point, using a
/// half-maximum scan for the width. Clipped to the grid.
pub fn default_window(spectrum: &NoiseSpectrum) -> (f64, f64) {
    window_around_peak(spectrum.freqs(), spectrum.psd())
}

pub(crate) fn window_around_peak(freqs: &[f64], values: &[f64]) -> (f64, f64) {
    let guess = initial_guess(freqs, values);
    let half = DEFAULT_WINDOW_WIDTHS * guess.fwhm;
    (
        (guess.center - half).max(freqs[0]),
        (guess.center + half).min(freqs[freqs.len() - 1]),
    )
}

struct Guess {
    center: f64,
    fwhm: f64,
    height: f64,
    background: f64,
}

fn initial_guess(freqs: &[f64], values: &[f64]) -> Guess {
    let (imax, vmax) =
        values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| {
                if *v > bv {
                    (i, *v)
                } else {
                    (bi, bv)
                }
            });
    let vmin = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let half = vmin + 0.5 * (vmax - vmin);
    let spacing = (freqs[freqs.len() - 1] - freqs[0]) / (freqs.len() - 1).max(1) as f64;
    let crossing = |range: &mut dyn Iterator<Item = usize>, toward: isize| -> Option<f64> {
        for i in range {
            if values[i] < half {
                let j = (i as isize - toward) as usize;
                let (f0, f1, v0, v1) = (freqs[i], freqs[j], values[i], values[j]);
                return Some(f0 + (half - v0) * (f1 - f0) / (v1 - v0));
            }
        }
        None
    };
    let left = crossing(&mut (0..imax).rev(), -1);
    let right = crossing(&mut (imax + 1..values.len()), 1);
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (freqs[imax] - l),
        (None, Some(r)) => 2.0 * (r - freqs[imax]),
        (None, None) => 0.25 * (freqs[freqs.len() - 1] - freqs[0]),
    }
    .max(spacing);
    Guess {
        center: freqs[imax],
        fwhm,
        height: vmax - vmin,
        background: vmin,
    }
}

/// Fits one Lorentzian plus a constant background inside `window` (Hz).
pub fn fit_lorentzian(
    spectrum: &NoiseSpectrum,
    window: (f64, f64),
) -> Result<LorentzianFit, SpectralError> {
    fit_lorentzian_with_background(spectrum, window, |_| 0.0)
}

/// As [`fit_lorentzian`], with a known background profile added to the model.
pub fn fit_lorentzian_with_background<B: Fn(f64) -> f64>(
    spectrum: &NoiseSpectrum,
    window: (f64, f64),
    fixed_background: B,
) -> Result<LorentzianFit, SpectralError> {
    let (lo, hi) = window;
    if !(hi > lo) {
        return Err(SpectralError::InvalidArgument(format!(
            "empty window [{lo}, {hi}]"
        )));
    }
    let (freqs, data): (Vec<f64>, Vec<f64>) = spectrum
        .freqs()
        .iter()
        .zip(spectrum.psd())
        .filter(|(f, _)| **f >= lo && **f <= hi)
        .map(|(f, p)| (*f, *p))
        .unzip();
    if freqs.len() < 8 {
        return Err(SpectralError::InvalidArgument(format!(
            "window [{lo}, {hi}] holds {} points, need at least 8",
            freqs.len()
        )));
    }
    let fixed: Vec<f64> = freqs.iter().map(|f| fixed_background(*f)).collect();
    let residual_data: Vec<f64> = data.iter().zip(&fixed).map(|(d, b)| d - b).collect();
    let guess = initial_guess(&freqs, &residual_data);
    if !(guess.height > 0.0) {
        return Err(SpectralError::FitFailed("no peak above background".into()));
    }

    // normalized coordinates
    let f_ref = guess.center;
    let f_scale = guess.fwhm;
    let y_scale = guess.height;
    let x: Vec<f64> = freqs.iter().map(|f| (f - f_ref) / f_scale).collect();
    let y: Vec<f64> = residual_data.iter().map(|v| v / y_scale).collect();

    let mut p = Vector4::new(0.0, 1.0, 0.5 * PI, guess.background / y_scale);
    let cost = |p: &Vector4<f64>| -> f64 {
        x.iter()
            .zip(&y)
            .map(|(xi, yi)| (yi - model(p, *xi)).powi(2))
            .sum()
    };
    let mut current = cost(&p);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for (xi, yi) in x.iter().zip(&y) {
            let j = gradient(&p, *xi);
            let r = yi - model(&p, *xi);
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let mut accepted = false;
        while lambda < 1e12 {
            let mut damped = jtj;
            for k in 0..4 {
                damped[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(delta) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + delta;
            if trial[1] > 0.0 && trial[2] > 0.0 {
                let c = cost(&trial);
                if c <= current {
                    let small_step = delta
                        .iter()
                        .zip(p.iter())
                        .all(|(d, v)| d.abs() <= 1e-10 * (v.abs() + 1e-6));
                    let small_gain = current - c <= 1e-14 * current.max(f64::MIN_POSITIVE);
                    p = trial;
                    current = c;
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    if small_step || small_gain {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 4.0;
        }
        if converged || !accepted {
            // no downhill step left: at a minimum to working precision
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SpectralError::NonConvergence { iterations });
    }

    let fit = LorentzianFit {
        center: f_ref + p[0] * f_scale,
        fwhm: p[1] * f_scale,
        area: p[2] * f_scale * y_scale,
        background: p[3] * y_scale,
        goodness: 0.0,
    };
    if !(fit.fwhm > 0.0 && fit.area > 0.0 && fit.center.is_finite()) {
        return Err(SpectralError::FitFailed(format!(
            "non-physical parameters {fit:?}"
        )));
    }

    let residuals: Vec<f64> = x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| yi - model(&p, *xi))
        .collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let goodness = if ss_tot > 0.0 {
        (1.0 - current / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };

    let height = fit.peak_height() / y_scale;
    let structure = smoothed_max(&residuals) / height;
    if structure > RESIDUAL_STRUCTURE_LIMIT {
        return Err(SpectralError::MultiplePeaks { structure });
    }
    Ok(LorentzianFit { goodness, ..fit })
}

fn smoothed_max(residuals: &[f64]) -> f64 {
    let w = RESIDUAL_SMOOTHING.min(residuals.len());
    residuals
        .windows(w)
        .map(|win| win.iter().sum::<f64>() / w as f64)
        .fold(0.0, f64::max)
}

#[inline]
fn model(p: &Vector4<f64>, x: f64) -> f64 {
    let h = 0.5 * p[1];
    p[3] + p[2] / PI * h / ((x - p[0]).powi(2) + h * h)
}

#[inline]
fn gradient(p: &Vector4<f64>, x: f64) -> Vector4<f64> {
    let (c, w, a) = (p[0], p[1], p[2]);
    let h = 0.5 * w;
    let u = x - c;
    let d = u * u + h * h;
    Vector4::new(
        a * h / PI * 2.0 * u / (d * d),
        a / (2.0 * PI) * (d - 2.0 * h * h) / (d * d),
        h / (PI * d),
        1.0,
    )
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::lorentzian;
    use super::super::{closed_form_spectrum, peak_band, Provenance};
    use super::*;
    use crate::model::effective_dynamics;
    use crate::sim::fixtures::reference_op;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn rel(a: f64, b: f64) -> f64 {
        (a / b - 1.0).abs()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = Vector4::new(0.3, 1.7, 2.1, 0.05);
        for x in [-3.0, -0.2, 0.0, 0.9, 4.0] {
            let g = gradient(&p, x);
            for k in 0..4 {
                let mut hi = p;
                let mut lo = p;
                hi[k] += 1e-6;
                lo[k] -= 1e-6;
                let fd = (model(&hi, x) - model(&lo, x)) / 2e-6;
                assert!((fd - g[k]).abs() < 1e-7 * (1.0 + g[k].abs()), "k={k} x={x}");
            }
        }
    }

    #[test]
    fn noiseless_peak_recovered() {
        let fwhm = 511.45 * 7.0 / (2.0 * PI);
        let s = lorentzian(814_000.0, fwhm, 1.2e-28, 0.0, 810_000.0, 818_000.0, 4001);
        let fit = fit_lorentzian(&s, default_window(&s)).unwrap();
        assert!(rel(fit.center, 814_000.0) < 1e-3 * fwhm / 814_000.0);
        assert!(rel(fit.fwhm, fwhm) < 1e-3);
        assert!(rel(fit.area, 1.2e-28) < 1e-3);
        assert!(fit.goodness > 0.999999);
    }

    #[test]
    fn multiplicative_noise_recovery() {
        // Monte Carlo: 5 % multiplicative noise, parameters within 1 %
        let fwhm = 81.4;
        let base = lorentzian(
            814_000.0, fwhm, 8.33e-28, 1e-33, 812_000.0, 816_000.0, 40_001,
        );
        let noise = Normal::new(1.0, 0.05).unwrap();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let factors: Vec<f64> = (0..base.len()).map(|_| noise.sample(&mut rng)).collect();
            let psd = base
                .psd()
                .iter()
                .zip(&factors)
                .map(|(v, k)| v * k)
                .collect();
            let noisy = NoiseSpectrum::new(
                base.freqs().to_vec(),
                psd,
                Provenance::Ingested,
                base.spacing(),
            )
            .unwrap();
            let fit = fit_lorentzian(&noisy, default_window(&noisy)).unwrap();
            assert!((fit.center - 814_000.0).abs() < 0.01 * fwhm, "seed {seed}");
            assert!(rel(fit.fwhm, fwhm) < 0.01, "seed {seed}: {fit:?}");
            assert!(rel(fit.area, 8.33e-28) < 0.01, "seed {seed}: {fit:?}");
        }
    }

    #[test]
    fn closed_form_linewidth_matches_damping() {
        let op = reference_op(-0.45, 3.2e-3, 300.0);
        let d = effective_dynamics(&op);
        let (lo, hi) = peak_band(&op, 30.0);
        let s = closed_form_spectrum(&op, lo, hi, 6001).unwrap();
        let fit = fit_lorentzian(&s, default_window(&s)).unwrap();
        let ratio = fit.fwhm / (op.mode.gamma_m() / (2.0 * PI));
        assert!(rel(ratio, d.gamma_eff / op.mode.gamma_m()) < 0.01);
        assert!(rel(fit.center, d.omega_eff / (2.0 * PI)) < 1e-6);
    }

    #[test]
    fn second_peak_is_flagged() {
        let a = lorentzian(1000.0, 10.0, 1.0, 0.0, 800.0, 1200.0, 2001);
        let b = lorentzian(1080.0, 10.0, 0.8, 0.0, 800.0, 1200.0, 2001);
        let psd = a.psd().iter().zip(b.psd()).map(|(x, y)| x + y).collect();
        let s =
            NoiseSpectrum::new(a.freqs().to_vec(), psd, Provenance::Ingested, a.spacing()).unwrap();
        assert!(matches!(
            fit_lorentzian(&s, (800.0, 1200.0)),
            Err(SpectralError::MultiplePeaks { .. })
        ));
    }

    #[test]
    fn tiny_window_rejected() {
        let s = lorentzian(1000.0, 10.0, 1.0, 0.0, 800.0, 1200.0, 2001);
        assert!(fit_lorentzian(&s, (1000.0, 1000.5)).is_err());
    }
}
