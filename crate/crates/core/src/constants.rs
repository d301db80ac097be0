//! Physical constants shared by every module.

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 2.998e8;

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380649e-23;
