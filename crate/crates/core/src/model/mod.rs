//! Closed-form frequency-domain model of a mechanical mode coupled to a
//! detuned optical cavity through radiation pressure.
//!
//! Conventions used throughout the crate:
//!
//! * SI units, angular frequencies (rad/s) internally.
//! * Fourier components follow `x(t) = ∫ x[Ω] e^{-iΩt} dΩ/2π`, so a time
//!   derivative maps to `-iΩ`. Under this convention the cavity response
//!   `Δ(Ω) = (1 - iΩ/Ω_c)² + φ²` has its zeros in the lower half plane and the
//!   radiation-pressure force is causal, with poles at `Ω_c(-1 ± iφ)` in the
//!   Laplace variable `s = -iΩ`.
//! * Power spectral densities are double-sided:
//!   `⟨F²⟩ = ∫ S_F(f) df` over `f ∈ (-∞, ∞)`. Spectra handed to files and
//!   fits are folded to one-sided form (factor 2) by the spectral module.

mod dynamics;
mod response;

pub use dynamics::{
    displacement_psd, displacement_variance, effective_dynamics, equipartition_temperature,
    instability_threshold, intracavity_power, langevin_psd, EffectiveDynamics, TemperatureEstimate,
};
pub use response::{
    cavity_delta, effective_susceptibility, mech_susceptibility, nonlinear_phase,
    radiation_force_transfer,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::constants::SPEED_OF_LIGHT;

/// Complex response (susceptibility, force transfer, or Δ).
pub type ComplexResponse = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("detuning must be non-zero")]
    ZeroDetuning,
    #[error("operating point is unstable (gamma_eff = {gamma_eff} rad/s)")]
    Unstable { gamma_eff: f64 },
}

fn positive(name: &'static str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value,
            reason: "must be finite and >= 0",
        })
    }
}

/// One vibration mode of the resonator, treated as a damped harmonic
/// oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanicalMode {
    omega_m: f64,
    mass: f64,
    q_factor: f64,
    gamma_m: f64,
}

impl MechanicalMode {
    pub fn new(omega_m: f64, mass: f64, q_factor: f64) -> Result<Self, ModelError> {
        let omega_m = positive("omega_m", omega_m)?;
        let mass = positive("mass", mass)?;
        if !(q_factor.is_finite() && q_factor >= 1.0) {
            return Err(ModelError::InvalidParameter {
                name: "q_factor",
                value: q_factor,
                reason: "must be finite and >= 1",
            });
        }
        let k = mass * omega_m * omega_m;
        if !(k.is_finite() && k > 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "spring_constant",
                value: k,
                reason: "mass * omega_m^2 must be finite and > 0",
            });
        }
        Ok(Self {
            omega_m,
            mass,
            q_factor,
            gamma_m: omega_m / q_factor,
        })
    }

    pub fn from_frequency_hz(freq_hz: f64, mass: f64, q_factor: f64) -> Result<Self, ModelError> {
        Self::new(
            2.0 * PI * positive("frequency_hz", freq_hz)?,
            mass,
            q_factor,
        )
    }

    pub fn omega_m(&self) -> f64 {
        self.omega_m
    }

    pub fn frequency_hz(&self) -> f64 {
        self.omega_m / (2.0 * PI)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn q_factor(&self) -> f64 {
        self.q_factor
    }

    pub fn gamma_m(&self) -> f64 {
        self.gamma_m
    }

    /// `k = M Ω_m²` (N/m).
    pub fn spring_constant(&self) -> f64 {
        self.mass * self.omega_m * self.omega_m
    }

    /// Same mode with a different mass; used for scaling checks.
    pub fn with_mass(&self, mass: f64) -> Result<Self, ModelError> {
        Self::new(self.omega_m, mass, self.q_factor)
    }

    pub fn with_q_factor(&self, q_factor: f64) -> Result<Self, ModelError> {
        Self::new(self.omega_m, self.mass, q_factor)
    }
}

/// Optical cavity parameters and the input coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavitySetup {
    wavelength: f64,
    length: f64,
    finesse: f64,
    gamma: f64,
    omega_c: f64,
    coupling_slope: f64,
}

impl CavitySetup {
    /// `omega_c` is the cavity bandwidth (rad/s); `coupling_slope` the
    /// resonant intracavity power per unit incident power.
    pub fn new(
        wavelength: f64,
        length: f64,
        finesse: f64,
        omega_c: f64,
        coupling_slope: f64,
    ) -> Result<Self, ModelError> {
        let finesse = positive("finesse", finesse)?;
        Ok(Self {
            wavelength: positive("wavelength", wavelength)?,
            length: positive("length", length)?,
            finesse,
            gamma: PI / finesse,
            omega_c: positive("omega_c", omega_c)?,
            coupling_slope: positive("coupling_slope", coupling_slope)?,
        })
    }

    /// Derives the bandwidth from the geometry: `Ω_c = γ c / 2L`.
    pub fn from_geometry(
        wavelength: f64,
        length: f64,
        finesse: f64,
        coupling_slope: f64,
    ) -> Result<Self, ModelError> {
        let length = positive("length", length)?;
        let finesse = positive("finesse", finesse)?;
        let omega_c = (PI / finesse) * SPEED_OF_LIGHT / (2.0 * length);
        Self::new(wavelength, length, finesse, omega_c, coupling_slope)
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn finesse(&self) -> f64 {
        self.finesse
    }

    /// Cavity damping rate per round trip, `π / finesse`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.omega_c / (2.0 * PI)
    }

    pub fn coupling_slope(&self) -> f64 {
        self.coupling_slope
    }

    /// Resonant intracavity power for a given incident power.
    pub fn resonant_power(&self, incident_power: f64) -> f64 {
        self.coupling_slope * incident_power
    }

    /// Round-trip phase `Ψ = γ φ` for a normalized detuning.
    pub fn round_trip_phase(&self, phi: f64) -> f64 {
        self.gamma * phi
    }
}

/// A mode, a cavity, a detuning and a resonant intracavity power: everything
/// that fixes the linearized dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub mode: MechanicalMode,
    pub cavity: CavitySetup,
    pub phi: f64,
    pub p_res: f64,
    pub temperature_bath: f64,
}

impl OperatingPoint {
    pub fn new(
        mode: MechanicalMode,
        cavity: CavitySetup,
        phi: f64,
        p_res: f64,
        temperature_bath: f64,
    ) -> Result<Self, ModelError> {
        if !phi.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "phi",
                value: phi,
                reason: "must be finite",
            });
        }
        Ok(Self {
            mode,
            cavity,
            phi,
            p_res: non_negative("p_res", p_res)?,
            temperature_bath: non_negative("temperature_bath", temperature_bath)?,
        })
    }

    /// Operating point reached with a given incident power.
    pub fn from_incident_power(
        mode: MechanicalMode,
        cavity: CavitySetup,
        phi: f64,
        incident_power: f64,
        temperature_bath: f64,
    ) -> Result<Self, ModelError> {
        let p_in = non_negative("incident_power", incident_power)?;
        Self::new(
            mode,
            cavity,
            phi,
            cavity.resonant_power(p_in),
            temperature_bath,
        )
    }

    /// Operating point whose intracavity power *at the detuning* `phi` is
    /// `p_cavity`, i.e. a point of the `{φ, P}` plane.
    pub fn from_detuned_power(
        mode: MechanicalMode,
        cavity: CavitySetup,
        phi: f64,
        p_cavity: f64,
        temperature_bath: f64,
    ) -> Result<Self, ModelError> {
        let p = non_negative("p_cavity", p_cavity)?;
        Self::new(mode, cavity, phi, p * (1.0 + phi * phi), temperature_bath)
    }

    pub fn with_phi(&self, phi: f64) -> Result<Self, ModelError> {
        Self::new(
            self.mode,
            self.cavity,
            phi,
            self.p_res,
            self.temperature_bath,
        )
    }

    pub fn with_p_res(&self, p_res: f64) -> Result<Self, ModelError> {
        Self::new(
            self.mode,
            self.cavity,
            self.phi,
            p_res,
            self.temperature_bath,
        )
    }

    pub fn with_temperature(&self, temperature_bath: f64) -> Result<Self, ModelError> {
        Self::new(
            self.mode,
            self.cavity,
            self.phi,
            self.p_res,
            temperature_bath,
        )
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn mode_invariants() {
        let m = reference_mode();
        assert!((m.gamma_m() * m.q_factor() / m.omega_m() - 1.0).abs() < 1e-12);
        // k ≈ 5e6 N/m
        assert!((m.spring_constant() / 5.0e6 - 1.0).abs() < 0.02);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(MechanicalMode::new(1e6, 0.0, 10.0).is_err());
        assert!(MechanicalMode::new(1e6, 1e-6, 0.5).is_err());
        assert!(MechanicalMode::new(-1.0, 1e-6, 10.0).is_err());
        assert!(MechanicalMode::new(f64::NAN, 1e-6, 10.0).is_err());
        assert!(CavitySetup::new(0.0, 1e-3, 1e4, 1e6, 1.0).is_err());
        assert!(CavitySetup::new(1e-6, 1e-3, 0.0, 1e6, 1.0).is_err());
        let (m, c) = (reference_mode(), reference_cavity());
        assert!(OperatingPoint::new(m, c, 0.1, -1.0, 300.0).is_err());
        assert!(OperatingPoint::new(m, c, 0.1, 1.0, -1.0).is_err());
        assert!(OperatingPoint::new(m, c, f64::INFINITY, 1.0, 300.0).is_err());
    }

    #[test]
    fn cavity_gamma_times_finesse_is_pi() {
        let c = reference_cavity();
        assert!((c.gamma() * c.finesse() / PI - 1.0).abs() < 1e-12);
        assert!((c.round_trip_phase(2.0) - 2.0 * c.gamma()).abs() < 1e-18);
    }

    #[test]
    fn geometry_bandwidth_close_to_measured() {
        let c = CavitySetup::from_geometry(1.064e-6, 2.4e-3, 30_000.0, 2970.0).unwrap();
        // FSR / (2 F) = 62.46 GHz / 60000
        assert!((c.bandwidth_hz() / 1.041e6 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn detuned_power_round_trip() {
        let op = OperatingPoint::from_detuned_power(
            reference_mode(),
            reference_cavity(),
            -0.5,
            4.0,
            300.0,
        )
        .unwrap();
        assert!((intracavity_power(&op) - 4.0).abs() < 1e-12);
        assert!((op.p_res - 5.0).abs() < 1e-12);
    }
}
