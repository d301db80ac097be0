//! Time-domain Langevin simulation of the optically coupled mode.
//!
//! The mirror obeys `M ẍ = −M Ω_m² x − M Γ_m ẋ + F_T + F_rad`, where `F_T`
//! is white thermal noise and `F_rad` is the output of a causal two-pole
//! filter driven by `x` whose transfer function is
//! [`radiation_force_transfer`](crate::model::radiation_force_transfer).
//! Oscillator and filter form one linear system that is propagated exactly
//! over each step (matrix exponential), with the thermal force held constant
//! across the step.

mod export;
mod filter;
mod integrator;
mod noise;
mod ringdown;

pub use export::{
    read_raw, read_text, write_raw, write_text, RAW_HEADER_LEN, RAW_MAGIC, RAW_VERSION,
};
pub use filter::{realize_force_filter, ForceFilter};
pub use integrator::{ensemble_variance, integrate, EnsembleVariance, Simulator};
pub use noise::{thermal_force_samples, ThermalForce};
pub use ringdown::{ringdown_rate, RingdownFit};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::model::{effective_dynamics, ModelError, OperatingPoint};

/// Largest allowed `dt · max(Ω_m, Ω_c) / 2π` (at least 20 samples per
/// fastest period).
pub const MAX_STEP_FRACTION: f64 = 0.05;

/// Default number of samples per period of the fastest pole.
pub const DEFAULT_SAMPLES_PER_PERIOD: f64 = 40.0;

/// Divergence guard, in units of the larger of the bare thermal rms and the
/// initial displacement.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("time step {dt} s too coarse: dt·max(Ω_m, Ω_c)/2π = {fraction} > {MAX_STEP_FRACTION}")]
    StepTooCoarse { dt: f64, fraction: f64 },
    #[error("invalid simulation setting {name} = {value}")]
    InvalidConfig { name: &'static str, value: f64 },
    #[error("unstable growth: |x| exceeded the divergence guard at t = {time} s")]
    UnstableGrowth { time: f64, partial: Box<Trajectory> },
    #[error("too few envelope peaks ({found}) to fit a rate")]
    TooFewPeaks { found: usize },
    #[error("poor envelope fit: R² = {}", fit.r_squared)]
    PoorFit { fit: RingdownFit },
    #[error("malformed trajectory file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Step, length, seed and initial condition of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    /// Recorded length after burn-in (s).
    pub duration: f64,
    pub seed: u64,
    /// Discarded initial time (s).
    pub burn_in: f64,
    pub n_trajectories: usize,
    /// Initial displacement (m); velocity and filter start at rest.
    pub initial_displacement: f64,
}

impl SimConfig {
    /// `1 / (40 · max(Ω_m, Ω_c)/2π)`.
    pub fn default_step(op: &OperatingPoint) -> f64 {
        2.0 * PI / (DEFAULT_SAMPLES_PER_PERIOD * fastest_rate(op))
    }

    /// Equilibrium defaults: `100/Γ_eff` recorded after `10/Γ_eff` of burn-in
    /// (bare `Γ_m` for unstable points), eight trajectories.
    pub fn for_operating_point(op: &OperatingPoint) -> Self {
        let d = effective_dynamics(op);
        let gamma = if d.stable {
            d.gamma_eff
        } else {
            op.mode.gamma_m()
        };
        Self {
            dt: Self::default_step(op),
            duration: 100.0 / gamma,
            seed: 0,
            burn_in: 10.0 / gamma,
            n_trajectories: 8,
            initial_displacement: 0.0,
        }
    }

    pub fn validate(&self, op: &OperatingPoint) -> Result<(), SimError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SimError::InvalidConfig {
                name: "dt",
                value: self.dt,
            });
        }
        let fraction = self.dt * fastest_rate(op) / (2.0 * PI);
        if fraction > MAX_STEP_FRACTION * (1.0 + 1e-12) {
            return Err(SimError::StepTooCoarse {
                dt: self.dt,
                fraction,
            });
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(SimError::InvalidConfig {
                name: "duration",
                value: self.duration,
            });
        }
        if !(self.burn_in.is_finite() && self.burn_in >= 0.0) {
            return Err(SimError::InvalidConfig {
                name: "burn_in",
                value: self.burn_in,
            });
        }
        if self.n_trajectories == 0 {
            return Err(SimError::InvalidConfig {
                name: "n_trajectories",
                value: 0.0,
            });
        }
        if !self.initial_displacement.is_finite() {
            return Err(SimError::InvalidConfig {
                name: "initial_displacement",
                value: self.initial_displacement,
            });
        }
        Ok(())
    }

    /// Recorded sample count, `round(duration / dt)`.
    pub fn sample_count(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn burn_in_steps(&self) -> usize {
        (self.burn_in / self.dt).round() as usize
    }

    /// Whether the run is long enough for equilibrium statistics
    /// (`duration ≥ 50/Γ_m`).
    pub fn long_enough(&self, op: &OperatingPoint) -> bool {
        self.duration * op.mode.gamma_m() >= 50.0
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

fn fastest_rate(op: &OperatingPoint) -> f64 {
    op.mode.omega_m().max(op.cavity.omega_c())
}

/// Displacement record at uniform spacing, with the inputs that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<f64>,
    pub dt: f64,
    /// Time of the first sample (the burn-in length).
    pub start_time: f64,
    pub op: OperatingPoint,
    pub config: SimConfig,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, index: usize) -> f64 {
        self.start_time + index as f64 * self.dt
    }

    /// Mean square displacement (m²).
    pub fn mean_square(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64
    }
}
