use std::f64::consts::PI;

use super::response::{cavity_delta, coupling, effective_susceptibility, nonlinear_phase};
use super::{CavitySetup, MechanicalMode, ModelError, OperatingPoint};
use crate::constants::BOLTZMANN;

/// Relative frequency shift below which the linewidth temperature
/// `T Γ_m / Γ_eff` is trusted.
pub const SMALL_SHIFT: f64 = 1e-3;

/// Effective resonance of the optically dressed mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveDynamics {
    pub omega_eff: f64,
    /// Signed; non-positive means the mode self-oscillates.
    pub gamma_eff: f64,
    /// `T Γ_m / Γ_eff`; `None` when unstable.
    pub t_eff: Option<f64>,
    pub stable: bool,
}

impl EffectiveDynamics {
    pub fn frequency_shift_hz(&self, mode: &MechanicalMode) -> f64 {
        (self.omega_eff - mode.omega_m()) / (2.0 * PI)
    }

    pub fn damping_ratio(&self, mode: &MechanicalMode) -> f64 {
        self.gamma_eff / mode.gamma_m()
    }
}

/// Airy peak in the Lorentzian approximation: `p_res / (1 + φ²)`.
pub fn intracavity_power(op: &OperatingPoint) -> f64 {
    op.p_res / (1.0 + op.phi * op.phi)
}

/// Effective frequency and damping with Δ evaluated at the bare resonance:
/// `Ω_eff = Ω_m (1 + Re z)`, `Γ_eff = Γ_m (1 − 2Q Im z)`, `z = φ φ_NL / Δ(Ω_m)`.
pub fn effective_dynamics(op: &OperatingPoint) -> EffectiveDynamics {
    let mode = &op.mode;
    let z = coupling(op, mode.omega_m());
    let omega_eff = mode.omega_m() * (1.0 + z.re);
    let gamma_eff = mode.gamma_m() * (1.0 - 2.0 * mode.q_factor() * z.im);
    let stable = gamma_eff > 0.0;
    EffectiveDynamics {
        omega_eff,
        gamma_eff,
        t_eff: stable.then(|| op.temperature_bath * mode.gamma_m() / gamma_eff),
        stable,
    }
}

/// Double-sided Langevin force PSD `S_F = 2 k_B T M Γ_m` (N²/Hz).
pub fn langevin_psd(mode: &MechanicalMode, temperature: f64) -> f64 {
    2.0 * BOLTZMANN * temperature * mode.mass() * mode.gamma_m()
}

/// Double-sided displacement PSD `|χ_eff(Ω)|² S_F(T_bath)` (m²/Hz).
pub fn displacement_psd(op: &OperatingPoint, omega: f64) -> Result<f64, ModelError> {
    let dynamics = effective_dynamics(op);
    if !dynamics.stable {
        return Err(ModelError::Unstable {
            gamma_eff: dynamics.gamma_eff,
        });
    }
    Ok(unchecked_psd(op, omega))
}

fn unchecked_psd(op: &OperatingPoint, omega: f64) -> f64 {
    effective_susceptibility(op, omega).norm_sqr() * langevin_psd(&op.mode, op.temperature_bath)
}

/// `⟨x²⟩ = ∫ S_x dΩ/2π` over the whole real line, by quadrature.
///
/// The integrand is even in Ω. The substitution `Ω = Ω_eff + (Γ_eff/2) tan θ`
/// flattens the resonance, so a uniform Simpson rule in θ resolves it.
pub fn displacement_variance(op: &OperatingPoint) -> Result<f64, ModelError> {
    let dynamics = effective_dynamics(op);
    if !dynamics.stable {
        return Err(ModelError::Unstable {
            gamma_eff: dynamics.gamma_eff,
        });
    }
    if op.temperature_bath == 0.0 {
        return Ok(0.0);
    }
    const PANELS: usize = 20_000;
    let half_width = 0.5 * dynamics.gamma_eff;
    let theta0 = (-dynamics.omega_eff / half_width).atan();
    let theta1 = 0.5 * PI;
    let step = (theta1 - theta0) / PANELS as f64;
    let f = |theta: f64| {
        let (s, c) = theta.sin_cos();
        if c <= 0.0 {
            return 0.0;
        }
        let omega = dynamics.omega_eff + half_width * s / c;
        unchecked_psd(op, omega) * half_width / (c * c)
    };
    let mut sum = f(theta0) + f(theta1);
    for i in 1..PANELS {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(theta0 + i as f64 * step);
    }
    // ∫_{-∞}^{∞} dΩ/2π = (1/π) ∫_0^∞ dΩ
    Ok(sum * step / 3.0 / PI)
}

/// Linewidth-route and area-route effective temperatures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureEstimate {
    /// `T Γ_m / Γ_eff`.
    pub linewidth: f64,
    /// `M Ω_eff² ⟨x²⟩ / k_B`.
    pub area: f64,
    /// Whether `|Ω_eff − Ω_m| / Ω_m` is below [`SMALL_SHIFT`].
    pub small_shift: bool,
}

impl TemperatureEstimate {
    /// Relative disagreement between the two routes.
    pub fn discrepancy(&self) -> f64 {
        (self.area - self.linewidth).abs() / self.linewidth.abs().max(f64::MIN_POSITIVE)
    }
}

/// Both temperatures of a stable operating point. Outside the small-shift
/// regime the two differ and callers should report both.
pub fn equipartition_temperature(op: &OperatingPoint) -> Result<TemperatureEstimate, ModelError> {
    let dynamics = effective_dynamics(op);
    let variance = displacement_variance(op)?;
    Ok(TemperatureEstimate {
        linewidth: dynamics.t_eff.unwrap_or(f64::NAN),
        area: op.mode.mass() * dynamics.omega_eff.powi(2) * variance / BOLTZMANN,
        small_shift: ((dynamics.omega_eff - op.mode.omega_m()) / op.mode.omega_m()).abs()
            < SMALL_SHIFT,
    })
}

/// Intracavity power at detuning `phi` (W) where `Γ_eff` crosses zero, or
/// `None` when that detuning only adds damping to the mode.
///
/// `Γ_eff` is affine in `φ_NL`, which is linear in power, so the crossing
/// is found in closed form.
pub fn instability_threshold(
    mode: &MechanicalMode,
    cavity: &CavitySetup,
    phi: f64,
) -> Result<Option<f64>, ModelError> {
    if phi == 0.0 {
        return Err(ModelError::ZeroDetuning);
    }
    if !phi.is_finite() {
        return Err(ModelError::InvalidParameter {
            name: "phi",
            value: phi,
            reason: "must be finite",
        });
    }
    let im = cavity_delta(cavity, phi, mode.omega_m()).inv().im;
    let slope = phi * im * nonlinear_phase(cavity, mode, 1.0);
    if slope > 0.0 {
        Ok(Some(1.0 / (2.0 * mode.q_factor() * slope)))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn airy_law() {
        let op = reference_op(0.0, 1e-3);
        assert_eq!(intracavity_power(&op), op.p_res);
        assert_eq!(
            intracavity_power(&op.with_phi(1.0).unwrap()),
            op.p_res / 2.0
        );
        let op =
            OperatingPoint::new(reference_mode(), reference_cavity(), -0.45, 9.5, 300.0).unwrap();
        assert!((intracavity_power(&op) - 9.5 / 1.2025).abs() < 1e-12);
        assert!((intracavity_power(&op) - 7.9).abs() < 0.01);
    }

    #[test]
    fn zero_detuning_is_exactly_bare() {
        let op = reference_op(0.0, 3.2e-3);
        let d = effective_dynamics(&op);
        assert_eq!(d.omega_eff, op.mode.omega_m());
        assert_eq!(d.gamma_eff, op.mode.gamma_m());
        assert_eq!(d.t_eff, Some(300.0));
        assert!(d.stable);
        let d = effective_dynamics(&reference_op(0.3, 0.0));
        assert_eq!(d.omega_eff, op.mode.omega_m());
        assert_eq!(d.gamma_eff, op.mode.gamma_m());
    }

    #[test]
    fn cooling_at_reference_working_point() {
        let op = reference_op(-0.45, 3.2e-3);
        let d = effective_dynamics(&op);
        let ratio = d.damping_ratio(&op.mode);
        // scalar evaluation of the damping and temperature formulas
        assert!((ratio / 7.036514595904927 - 1.0).abs() < 1e-9);
        assert!((5.0..20.0).contains(&ratio));
        let t = d.t_eff.unwrap();
        assert!((15.0..60.0).contains(&t));
        assert!((t / 42.63474422046853 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn upper_mode_shifts_the_other_way() {
        let cavity = reference_cavity();
        let low = reference_mode();
        let high = MechanicalMode::from_frequency_hz(2824e3, 190e-9, 1e4).unwrap();
        for phi in [0.01, 0.05, 0.1, 0.2, 0.3] {
            let a = OperatingPoint::from_incident_power(low, cavity, phi, 3.2e-3, 300.0).unwrap();
            let b = OperatingPoint::from_incident_power(high, cavity, phi, 3.2e-3, 300.0).unwrap();
            let sa = effective_dynamics(&a).omega_eff - low.omega_m();
            let sb = effective_dynamics(&b).omega_eff - high.omega_m();
            assert!(sa > 0.0 && sb < 0.0, "phi={phi}: {sa} {sb}");
        }
    }

    #[test]
    fn langevin_force_level() {
        let m = reference_mode();
        let s = langevin_psd(&m, 300.0);
        assert!((s / 8.0e-25 - 1.0).abs() < 0.02);
        assert_eq!(langevin_psd(&m, 0.0), 0.0);
        assert!((langevin_psd(&m, 600.0) - 2.0 * s).abs() < 1e-40);
    }

    #[test]
    fn psd_peak_and_rms() {
        let op = reference_op(0.0, 3.2e-3);
        let m = op.mode;
        let peak = displacement_psd(&op, m.omega_m()).unwrap();
        let expected = langevin_psd(&m, 300.0) * (m.q_factor() / m.spring_constant()).powi(2);
        assert!((peak / expected - 1.0).abs() < 1e-12);
        let rms = displacement_variance(&op).unwrap().sqrt();
        assert!((rms / 2.9e-14 - 1.0).abs() < 0.02, "{rms}");
    }

    #[test]
    fn unstable_psd_refused() {
        let op = reference_op(0.11, 3.2e-3);
        assert!(!effective_dynamics(&op).stable);
        assert!(effective_dynamics(&op).t_eff.is_none());
        assert!(matches!(
            displacement_psd(&op, 1e6),
            Err(ModelError::Unstable { .. })
        ));
        assert!(displacement_variance(&op).is_err());
    }

    #[test]
    fn threshold_examples() {
        let (m, c) = (reference_mode(), reference_cavity());
        let p = instability_threshold(&m, &c, 0.11).unwrap().unwrap();
        assert!((p / 4.982801030608936 - 1.0).abs() < 1e-9);
        assert!(instability_threshold(&m, &c, -0.45).unwrap().is_none());
        assert_eq!(
            instability_threshold(&m, &c, 0.0),
            Err(ModelError::ZeroDetuning)
        );
        let heavy = m.with_mass(2.0 * m.mass()).unwrap();
        let p2 = instability_threshold(&heavy, &c, 0.11).unwrap().unwrap();
        assert!((p2 / p - 2.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_brackets_stability_flip() {
        let (m, c) = (reference_mode(), reference_cavity());
        for phi in [0.02, 0.11, 0.5, 1.3] {
            let p = instability_threshold(&m, &c, phi).unwrap().unwrap();
            let below =
                OperatingPoint::from_detuned_power(m, c, phi, p * (1.0 - 1e-9), 300.0).unwrap();
            let above =
                OperatingPoint::from_detuned_power(m, c, phi, p * (1.0 + 1e-9), 300.0).unwrap();
            assert!(effective_dynamics(&below).stable);
            assert!(!effective_dynamics(&above).stable);
        }
    }

    #[test]
    fn area_and_linewidth_temperatures_agree() {
        for (phi, p) in [(-0.45, 3.2e-3), (-0.2, 1e-3), (0.05, 2.2e-3), (0.0, 1e-3)] {
            let est = equipartition_temperature(&reference_op(phi, p)).unwrap();
            assert!(est.small_shift);
            assert!(est.discrepancy() < 0.01, "phi={phi}: {est:?}");
        }
    }

    proptest! {
        #[test]
        fn damping_change_scales_with_q(phi in -1.0f64..1.0, p_in in 1e-5f64..3e-3, q in 1e3f64..1e5) {
            let base = reference_op(phi, p_in);
            let scaled_mode = base.mode.with_q_factor(q).unwrap();
            let other = OperatingPoint { mode: scaled_mode, ..base };
            let d0 = effective_dynamics(&base);
            let d1 = effective_dynamics(&other);
            let rel0 = d0.damping_ratio(&base.mode) - 1.0;
            let rel1 = d1.damping_ratio(&scaled_mode) - 1.0;
            let expected = rel0 * q / base.mode.q_factor();
            prop_assert!((rel1 - expected).abs() <= 1e-9 * expected.abs().max(1e-12));
            let f0 = d0.omega_eff / base.mode.omega_m();
            let f1 = d1.omega_eff / scaled_mode.omega_m();
            prop_assert!((f0 - f1).abs() < 1e-15);
        }

        #[test]
        fn stable_iff_positive_damping(phi in -2.0f64..2.0, p_in in 0.0f64..1e-2) {
            let d = effective_dynamics(&reference_op(phi, p_in));
            prop_assert_eq!(d.stable, d.gamma_eff > 0.0);
            prop_assert_eq!(d.t_eff.is_some(), d.stable);
        }
    }
}
