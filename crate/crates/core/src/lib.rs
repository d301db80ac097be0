//! Radiation-pressure dynamics of a micro-mirror in a detuned high-finesse
//! cavity: optical spring, cavity cooling and heating, and the
//! optomechanical instability.
//!
//! * [`model`]: closed-form susceptibilities, effective frequency, damping
//!   and temperature, instability threshold.
//! * [`sim`]: time-domain Langevin simulation with the radiation-pressure
//!   force realized as a causal two-pole filter.
//! * [`spectral`]: Welch spectra, Lorentzian fits, equipartition
//!   temperatures, detection-gain calibration, multi-mode background.
//! * [`sweep`]: configuration, parameter sweeps, stability maps and the
//!   CSV/SVG emitters behind the `optospring` command line.

pub mod constants;
pub mod exec;
pub mod model;
pub mod sim;
pub mod spectral;
pub mod sweep;

pub use exec::Execution;
pub use model::{
    CavitySetup, ComplexResponse, EffectiveDynamics, MechanicalMode, ModelError, OperatingPoint,
};
