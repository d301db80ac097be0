use num_complex::Complex64;
use std::f64::consts::PI;

use super::{CavitySetup, ComplexResponse, MechanicalMode, OperatingPoint};
use crate::constants::SPEED_OF_LIGHT;

/// Bare mechanical susceptibility `1 / M(Ω_m² − Ω² − iΓ_mΩ)` (m/N).
pub fn mech_susceptibility(mode: &MechanicalMode, omega: f64) -> ComplexResponse {
    let denom = Complex64::new(
        mode.omega_m() * mode.omega_m() - omega * omega,
        -mode.gamma_m() * omega,
    ) * mode.mass();
    denom.inv()
}

/// Cavity response `Δ = (1 − iΩ/Ω_c)² + φ²` (dimensionless).
pub fn cavity_delta(cavity: &CavitySetup, phi: f64, omega: f64) -> ComplexResponse {
    let u = Complex64::new(1.0, -omega / cavity.omega_c());
    u * u + phi * phi
}

/// Nonlinear phase `φ_NL = 8πP / (λ γ c M Ω_m²)` for intracavity power `P`.
pub fn nonlinear_phase(cavity: &CavitySetup, mode: &MechanicalMode, p_intracavity: f64) -> f64 {
    8.0 * PI * p_intracavity
        / (cavity.wavelength() * cavity.gamma() * SPEED_OF_LIGHT * mode.spring_constant())
}

/// `φ φ_NL / Δ(Ω)`, the dimensionless coupling that drives every optical
/// spring quantity.
pub(crate) fn coupling(op: &OperatingPoint, omega: f64) -> Complex64 {
    let p = super::intracavity_power(op);
    let phi_nl = nonlinear_phase(&op.cavity, &op.mode, p);
    if op.phi == 0.0 || phi_nl == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    (op.phi * phi_nl) / cavity_delta(&op.cavity, op.phi, omega)
}

/// Radiation-pressure transfer `H(Ω) = −2 φ φ_NL M Ω_m² / Δ(Ω)` (N/m), so that
/// `F_rad[Ω] = H(Ω) x[Ω]`. The intracavity power follows the Airy law
/// `p_res / (1 + φ²)`.
pub fn radiation_force_transfer(op: &OperatingPoint, omega: f64) -> ComplexResponse {
    coupling(op, omega) * (-2.0 * op.mode.spring_constant())
}

/// Effective susceptibility with `χ_eff⁻¹ = χ_m⁻¹ − H(Ω)` (m/N).
pub fn effective_susceptibility(op: &OperatingPoint, omega: f64) -> ComplexResponse {
    let chi = mech_susceptibility(&op.mode, omega);
    let h = radiation_force_transfer(op, omega);
    if h == Complex64::new(0.0, 0.0) {
        return chi;
    }
    (chi.inv() - h).inv()
}
