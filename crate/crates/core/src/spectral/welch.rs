//! Welch averaged-periodogram estimator.
//!
//! Periodic Hann window, per-segment mean removal, one-sided scaling
//! `P_k = c_k |X_k|² / (f_s Σ w²)` with `c_k = 2` except at DC and Nyquist,
//! so that `Σ P_k Δf` equals the window-weighted mean square of the data.

use realfft::{RealFftPlanner, RealToComplex};
use std::f64::consts::PI;
use std::sync::Arc;

use super::{NoiseSpectrum, Provenance, SpectralError};
use crate::exec::Execution;
use crate::model::OperatingPoint;
use crate::sim::{SimConfig, SimError, Simulator, Trajectory};

/// Streaming Welch accumulator. Samples can arrive in any chunking; the
/// result only depends on the sample sequence.
pub struct WelchEstimator {
    segment_len: usize,
    step: usize,
    dt: f64,
    window: Vec<f64>,
    window_power: f64,
    window_sum: f64,
    fft: Arc<dyn RealToComplex<f64>>,
    pending: Vec<f64>,
    scratch_in: Vec<f64>,
    scratch_out: Vec<realfft::num_complex::Complex<f64>>,
    sum: Vec<f64>,
    segments: usize,
}

impl WelchEstimator {
    pub fn new(segment_len: usize, overlap: f64, dt: f64) -> Result<Self, SpectralError> {
        if segment_len < 8 || segment_len % 2 != 0 {
            return Err(SpectralError::InvalidArgument(format!(
                "segment length {segment_len} must be even and at least 8"
            )));
        }
        if !(0.0..=0.9).contains(&overlap) {
            return Err(SpectralError::InvalidArgument(format!(
                "overlap {overlap} outside [0, 0.9]"
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SpectralError::InvalidArgument(format!(
                "sample spacing {dt}"
            )));
        }
        let step = (segment_len - (overlap * segment_len as f64).round() as usize).max(1);
        let window: Vec<f64> = (0..segment_len)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / segment_len as f64).cos())
            .collect();
        let window_power = window.iter().map(|w| w * w).sum();
        let window_sum = window.iter().sum();
        let fft = RealFftPlanner::<f64>::new().plan_fft_forward(segment_len);
        let scratch_in = fft.make_input_vec();
        let scratch_out = fft.make_output_vec();
        Ok(Self {
            segment_len,
            step,
            dt,
            window,
            window_power,
            window_sum,
            fft,
            pending: Vec::with_capacity(2 * segment_len),
            scratch_in,
            scratch_out,
            sum: vec![0.0; segment_len / 2 + 1],
            segments: 0,
        })
    }

    pub fn push(&mut self, x: f64) {
        self.pending.push(x);
        if self.pending.len() == self.segment_len {
            self.process_segment();
            self.pending.drain(..self.step.min(self.segment_len));
        }
    }

    pub fn extend(&mut self, xs: &[f64]) {
        for &x in xs {
            self.push(x);
        }
    }

    fn process_segment(&mut self) {
        let n = self.segment_len;
        let mean = self.pending.iter().sum::<f64>() / n as f64;
        for ((dst, x), w) in self
            .scratch_in
            .iter_mut()
            .zip(&self.pending)
            .zip(&self.window)
        {
            *dst = (x - mean) * w;
        }
        self.fft
            .process(&mut self.scratch_in, &mut self.scratch_out)
            .expect("buffer sizes come from the plan");
        for (acc, c) in self.sum.iter_mut().zip(&self.scratch_out) {
            *acc += c.norm_sqr();
        }
        self.segments += 1;
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    /// Adds another estimator's periodograms (same settings required).
    pub fn merge(&mut self, other: &WelchEstimator) -> Result<(), SpectralError> {
        if other.segment_len != self.segment_len || other.step != self.step || other.dt != self.dt {
            return Err(SpectralError::InvalidArgument(
                "mismatched Welch settings".into(),
            ));
        }
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        self.segments += other.segments;
        Ok(())
    }

    pub fn finish(&self) -> Result<NoiseSpectrum, SpectralError> {
        if self.segments == 0 {
            return Err(SpectralError::TooShort {
                needed: self.segment_len,
                available: self.pending.len(),
            });
        }
        let n = self.segment_len;
        let fs = 1.0 / self.dt;
        let df = fs / n as f64;
        let scale = 1.0 / (fs * self.window_power * self.segments as f64);
        let last = self.sum.len() - 1;
        let psd = self
            .sum
            .iter()
            .enumerate()
            .map(|(k, s)| {
                if k == 0 || k == last {
                    s * scale
                } else {
                    2.0 * s * scale
                }
            })
            .collect();
        let freqs = (0..=last).map(|k| k as f64 * df).collect();
        // equivalent noise bandwidth of the window
        let enbw = fs * self.window_power / (self.window_sum * self.window_sum);
        NoiseSpectrum::new(freqs, psd, Provenance::Simulated, enbw)
    }
}

/// Welch spectrum of a stored trajectory.
pub fn welch_psd(
    trajectory: &Trajectory,
    segment_len: usize,
    overlap: f64,
) -> Result<NoiseSpectrum, SpectralError> {
    if segment_len > trajectory.len() {
        return Err(SpectralError::TooShort {
            needed: segment_len,
            available: trajectory.len(),
        });
    }
    let mut est = WelchEstimator::new(segment_len, overlap, trajectory.dt)?;
    est.extend(&trajectory.samples);
    est.finish()
}

/// Averaged Welch spectrum over `config.n_trajectories` seeds, streamed so
/// that no trajectory is stored. Periodograms are combined in seed order.
pub fn ensemble_welch(
    op: &OperatingPoint,
    config: &SimConfig,
    segment_len: usize,
    overlap: f64,
    exec: Execution,
) -> Result<NoiseSpectrum, SpectralError> {
    config.validate(op)?;
    if segment_len > config.sample_count() {
        return Err(SpectralError::TooShort {
            needed: segment_len,
            available: config.sample_count(),
        });
    }
    let seeds: Vec<u64> = (0..config.n_trajectories as u64)
        .map(|i| config.seed.wrapping_add(i))
        .collect();
    let parts = exec.map(&seeds, |&seed| -> Result<WelchEstimator, SpectralError> {
        let cfg = config.with_seed(seed);
        let mut est = WelchEstimator::new(segment_len, overlap, cfg.dt)?;
        let mut sim = Simulator::new(op, &cfg)?;
        sim.skip(cfg.burn_in_steps())
            .and_then(|_| sim.run(cfg.sample_count(), |x| est.push(x)))
            .map_err(|time| {
                SpectralError::Sim(SimError::UnstableGrowth {
                    time,
                    partial: Box::new(Trajectory {
                        samples: Vec::new(),
                        dt: cfg.dt,
                        start_time: 0.0,
                        op: *op,
                        config: cfg,
                    }),
                })
            })?;
        Ok(est)
    });
    let mut iter = parts.into_iter();
    let mut total = iter.next().expect("at least one trajectory")?;
    for part in iter {
        total.merge(&part?)?;
    }
    total.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn dummy_trajectory(samples: Vec<f64>, dt: f64) -> Trajectory {
        let op = crate::sim::fixtures::reference_op(0.0, 0.0, 300.0);
        Trajectory {
            samples,
            dt,
            start_time: 0.0,
            op,
            config: SimConfig::for_operating_point(&op),
        }
    }

    #[test]
    fn sinusoid_power_is_half_amplitude_squared() {
        let dt = 1e-3;
        let a = 3.0;
        let xs: Vec<f64> = (0..100_000)
            .map(|i| a * (2.0 * PI * 37.3 * i as f64 * dt + 0.3).sin())
            .collect();
        let s = welch_psd(&dummy_trajectory(xs, dt), 4096, 0.5).unwrap();
        assert!((s.total_power() / (a * a / 2.0) - 1.0).abs() < 0.01);
        let peak = s.freqs()[s.peak_index()];
        assert!((peak - 37.3).abs() <= s.spacing());
    }

    #[test]
    fn white_noise_is_flat_at_two_sigma_squared_dt() {
        let dt = 1e-6;
        let sigma = 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..1 << 20)
            .map(|_| {
                sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            })
            .collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        let s = welch_psd(&dummy_trajectory(xs, dt), 1024, 0.5).unwrap();
        let level = 2.0 * sigma * sigma * dt;
        let inner = &s.psd()[1..s.len() - 1];
        let mean = inner.iter().sum::<f64>() / inner.len() as f64;
        assert!((mean / level - 1.0).abs() < 0.05);
        // Parseval closure
        assert!((s.total_power() / var - 1.0).abs() < 0.01);
    }

    #[test]
    fn chunking_does_not_matter() {
        let xs: Vec<f64> = (0..5000).map(|i| ((i * 7919) % 113) as f64).collect();
        let mut a = WelchEstimator::new(256, 0.5, 1.0).unwrap();
        a.extend(&xs);
        let mut b = WelchEstimator::new(256, 0.5, 1.0).unwrap();
        for chunk in xs.chunks(77) {
            b.extend(chunk);
        }
        assert_eq!(a.finish().unwrap(), b.finish().unwrap());
        assert_eq!(a.segments(), (5000 - 256) / 128 + 1);
    }

    #[test]
    fn argument_checks() {
        assert!(WelchEstimator::new(256, 0.95, 1.0).is_err());
        assert!(WelchEstimator::new(255, 0.5, 1.0).is_err());
        let t = dummy_trajectory(vec![0.0; 100], 1.0);
        assert!(matches!(
            welch_psd(&t, 128, 0.5),
            Err(SpectralError::TooShort { .. })
        ));
    }
}
