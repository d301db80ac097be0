use nalgebra::{Matrix2, Matrix4, Vector2};
use num_complex::Complex64;
use std::f64::consts::PI;

use super::{SimError, MAX_STEP_FRACTION};
use crate::model::{intracavity_power, nonlinear_phase, OperatingPoint};

/// Causal realization of the radiation-pressure force as a second-order
/// linear filter driven by the displacement.
///
/// Continuous form, in controllable canonical coordinates
/// `u = (F, Ḟ/Ω_c)` (both in newtons):
///
/// ```text
/// u̇₁ = Ω_c u₂
/// u̇₂ = −Ω_c(1 + φ²) u₁ − 2Ω_c u₂ − 2 φ φ_NL k Ω_c x
/// F  = u₁
/// ```
///
/// which has poles at `Ω_c(−1 ± iφ)` and transfer
/// `−2 φ φ_NL k / ((1 + s/Ω_c)² + φ²)`, `s = −iΩ`. The sampled filter assumes
/// the displacement is piecewise linear between samples and is propagated
/// with the exact matrix exponential.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceFilter {
    a: Matrix2<f64>,
    b: Vector2<f64>,
    dt: f64,
    transition: Matrix2<f64>,
    /// Gain on the sample at the start of the step.
    gain_start: Vector2<f64>,
    /// Gain on the sample at the end of the step.
    gain_end: Vector2<f64>,
    state: Vector2<f64>,
    last_input: f64,
}

/// Builds the filter for an operating point and sampling step.
pub fn realize_force_filter(op: &OperatingPoint, dt: f64) -> Result<ForceFilter, SimError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SimError::InvalidConfig {
            name: "dt",
            value: dt,
        });
    }
    let wc = op.cavity.omega_c();
    let fraction = dt * wc / (2.0 * PI);
    if fraction > MAX_STEP_FRACTION * (1.0 + 1e-12) {
        return Err(SimError::StepTooCoarse { dt, fraction });
    }
    let phi_nl = nonlinear_phase(&op.cavity, &op.mode, intracavity_power(op));
    let drive = -2.0 * op.phi * phi_nl * op.mode.spring_constant() * wc;
    let a = Matrix2::new(0.0, wc, -wc * (1.0 + op.phi * op.phi), -2.0 * wc);
    let b = Vector2::new(0.0, drive);

    // exp([[A, B, 0], [0, 0, 1], [0, 0, 0]] dt) = [[Φ, Γ₀, Γ_r], [0, 1, dt], [0, 0, 1]]
    let mut aug = Matrix4::zeros();
    aug.fixed_view_mut::<2, 2>(0, 0).copy_from(&(a * dt));
    aug.fixed_view_mut::<2, 1>(0, 2).copy_from(&(b * dt));
    aug[(2, 3)] = dt;
    let e = aug.exp();
    let transition = e.fixed_view::<2, 2>(0, 0).into_owned();
    let gamma0 = e.fixed_view::<2, 1>(0, 2).into_owned();
    let gamma_ramp = e.fixed_view::<2, 1>(0, 3).into_owned() / dt;

    Ok(ForceFilter {
        a,
        b,
        dt,
        transition,
        gain_start: gamma0 - gamma_ramp,
        gain_end: gamma_ramp,
        state: Vector2::zeros(),
        last_input: 0.0,
    })
}

impl ForceFilter {
    /// Continuous-time state matrix in `(F, Ḟ/Ω_c)` coordinates.
    pub fn state_matrix(&self) -> Matrix2<f64> {
        self.a
    }

    /// Continuous-time input vector (N/m/s units on the second row).
    pub fn input_vector(&self) -> Vector2<f64> {
        self.b
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Continuous poles `Ω_c(−1 ± iφ)` of the realization (rad/s, Laplace
    /// variable).
    pub fn poles(&self) -> [Complex64; 2] {
        let tr = self.a.trace();
        let det = self.a.determinant();
        let disc = Complex64::new(tr * tr / 4.0 - det, 0.0).sqrt();
        [tr / 2.0 + disc, tr / 2.0 - disc]
    }

    /// Frequency response `Cᵀ(sI − A)⁻¹B` at `s = −iΩ` (N/m).
    pub fn response(&self, omega: f64) -> Complex64 {
        let s = Complex64::new(0.0, -omega);
        first_output(
            s,
            &self.a.map(Complex64::from),
            &self.b.map(Complex64::from),
        )
    }

    /// Response of the sampled filter to `x_n = e^{−iΩ n dt}` (N/m).
    pub fn discrete_response(&self, omega: f64) -> Complex64 {
        let z = Complex64::from_polar(1.0, -omega * self.dt);
        let input = self.gain_start.map(Complex64::from) + self.gain_end.map(Complex64::from) * z;
        first_output(z, &self.transition.map(Complex64::from), &input)
    }

    /// Advances one step given the displacement at the end of the step and
    /// returns the force there.
    pub fn step(&mut self, x_next: f64) -> f64 {
        self.state = self.transition * self.state
            + self.gain_start * self.last_input
            + self.gain_end * x_next;
        self.last_input = x_next;
        self.state[0]
    }

    /// Sets the held displacement without advancing (initial condition).
    pub fn prime(&mut self, x0: f64) {
        self.last_input = x0;
    }

    pub fn force(&self) -> f64 {
        self.state[0]
    }

    pub fn reset(&mut self) {
        self.state = Vector2::zeros();
        self.last_input = 0.0;
    }
}

/// First component of `(sI − M)⁻¹ v`.
fn first_output(
    s: Complex64,
    m: &nalgebra::Matrix2<Complex64>,
    v: &nalgebra::Vector2<Complex64>,
) -> Complex64 {
    let (a, b, c, d) = (s - m[(0, 0)], -m[(0, 1)], -m[(1, 0)], s - m[(1, 1)]);
    (d * v[0] - b * v[1]) / (a * d - b * c)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::reference_op;
    use super::super::SimConfig;
    use super::*;
    use crate::model::radiation_force_transfer;

    fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
    }

    #[test]
    fn zero_detuning_is_silent() {
        let op = reference_op(0.0, 3.2e-3, 300.0);
        let mut f = realize_force_filter(&op, SimConfig::default_step(&op)).unwrap();
        for i in 0..1000 {
            assert_eq!(f.step((i as f64 * 0.1).sin() * 1e-12), 0.0);
        }
    }

    #[test]
    fn poles_sit_at_cavity_rate() {
        let op = reference_op(0.4, 1e-3, 300.0);
        let f = realize_force_filter(&op, SimConfig::default_step(&op)).unwrap();
        let wc = op.cavity.omega_c();
        let p = f.poles();
        assert!((p[0] - Complex64::new(-wc, 0.4 * wc)).norm() < 1e-9 * wc);
        assert!((p[1] - Complex64::new(-wc, -0.4 * wc)).norm() < 1e-9 * wc);
    }

    #[test]
    fn continuous_response_matches_transfer() {
        for phi in [-0.45, -0.1, 0.11, 1.5] {
            let op = reference_op(phi, 3.2e-3, 300.0);
            let dt = SimConfig::default_step(&op);
            let f = realize_force_filter(&op, dt).unwrap();
            for w in log_grid(1.0, 0.2 / dt, 1000) {
                let h = radiation_force_transfer(&op, w);
                let r = f.response(w);
                assert!((r - h).norm() / h.norm() < 1e-6, "phi={phi} w={w}");
            }
            let at_mode = op.mode.omega_m();
            let h = radiation_force_transfer(&op, at_mode);
            assert!((f.response(at_mode) - h).norm() / h.norm() < 1e-6);
        }
    }

    #[test]
    fn dc_gain_is_static_spring() {
        let op = reference_op(-0.45, 3.2e-3, 300.0);
        let f = realize_force_filter(&op, SimConfig::default_step(&op)).unwrap();
        let phi_nl = nonlinear_phase(&op.cavity, &op.mode, intracavity_power(&op));
        let expected = 2.0 * 0.45 * phi_nl * op.mode.spring_constant() / 1.2025;
        for g in [f.response(0.0), f.discrete_response(0.0)] {
            assert!(g.im.abs() < 1e-12 * expected);
            assert!((g.re / expected - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sampled_response_error_is_second_order() {
        let op = reference_op(0.11, 2.2e-3, 300.0);
        let dt = SimConfig::default_step(&op);
        let f = realize_force_filter(&op, dt).unwrap();
        for w in log_grid(1e3, 0.2 / dt, 200) {
            let h = f.response(w);
            let err = (f.discrete_response(w) - h).norm() / h.norm();
            assert!(err < 0.15 * (w * dt).powi(2) + 1e-9, "w={w} err={err}");
        }
    }

    #[test]
    fn stepping_a_sinusoid_matches_discrete_response() {
        let op = reference_op(-0.3, 3.2e-3, 300.0);
        let dt = SimConfig::default_step(&op);
        let mut f = realize_force_filter(&op, dt).unwrap();
        let w = op.mode.omega_m();
        let n = 20_000;
        let mut out = 0.0;
        for i in 1..=n {
            out = f.step((w * i as f64 * dt).cos());
        }
        // steady state: Re(H_d e^{−iΩt})
        let expected = (f.discrete_response(w) * Complex64::from_polar(1.0, -w * n as f64 * dt)).re;
        assert!((out - expected).abs() < 1e-9 * f.discrete_response(w).norm());
    }

    #[test]
    fn coarse_step_rejected() {
        let op = reference_op(0.1, 1e-3, 300.0);
        assert!(matches!(
            realize_force_filter(&op, 1e-7),
            Err(SimError::StepTooCoarse { .. })
        ));
    }
}
