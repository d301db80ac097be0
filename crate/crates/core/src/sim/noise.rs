use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::SimConfig;
use crate::model::{langevin_psd, MechanicalMode};

/// Endless stream of i.i.d. Gaussian thermal-force samples with variance
/// `S_F / dt`, so that a force held constant over each step carries the
/// double-sided PSD `S_F` at low frequency.
#[derive(Debug, Clone)]
pub struct ThermalForce {
    rng: ChaCha8Rng,
    sigma: f64,
}

impl ThermalForce {
    pub fn new(mode: &MechanicalMode, temperature: f64, dt: f64, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            sigma: (langevin_psd(mode, temperature) / dt).sqrt(),
        }
    }

    /// Standard deviation of each sample (N).
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Iterator for ThermalForce {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        if self.sigma == 0.0 {
            return Some(0.0);
        }
        let z: f64 = StandardNormal.sample(&mut self.rng);
        Some(self.sigma * z)
    }
}

/// The force series consumed by [`integrate`](super::integrate) for the same
/// configuration: burn-in steps followed by the recorded steps.
pub fn thermal_force_samples(
    mode: &MechanicalMode,
    temperature: f64,
    config: &SimConfig,
) -> Vec<f64> {
    ThermalForce::new(mode, temperature, config.dt, config.seed)
        .take(config.burn_in_steps() + config.sample_count())
        .collect()
}
