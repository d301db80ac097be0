//! Grid evaluations behind the sweep commands. Cells are independent and
//! evaluated through [`Execution::map`], so results are in grid order
//! whatever the worker count.

use std::f64::consts::PI;

use super::config::{linspace, ExperimentConfig, PowerKind};
use super::SweepError;
use crate::constants::BOLTZMANN;
use crate::exec::Execution;
use crate::model::{
    effective_dynamics, instability_threshold, intracavity_power, EffectiveDynamics,
    MechanicalMode, OperatingPoint,
};
use crate::spectral::{background_psd, composite_spectrum, NoiseSpectrum, DEFAULT_WINDOW_WIDTHS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseRow {
    pub mode_hz: f64,
    /// Configured power value (incident or resonant intracavity, W).
    pub power_w: f64,
    pub phi: f64,
    /// Intracavity power at the detuning (W).
    pub p_cavity_w: f64,
    pub freq_shift_hz: f64,
    pub damping_ratio: f64,
    pub stable: bool,
    /// NaN when unstable.
    pub t_eff_k: f64,
}

/// Effective dynamics of every configured mode over powers × detunings.
/// Rows run mode-major, then power, then detuning.
pub fn response_sweep(
    config: &ExperimentConfig,
    exec: Execution,
) -> Result<Vec<ResponseRow>, SweepError> {
    let mut modes = vec![config.mode()];
    modes.extend(config.other_modes());
    let phis = config.detuning.points();
    let mut cells = Vec::new();
    for mode in &modes {
        for power in &config.power.values_w {
            for phi in &phis {
                cells.push(
                    config
                        .operating_point_for(*mode, *phi, *power)
                        .map(|op| (*power, op))?,
                );
            }
        }
    }
    Ok(exec.map(&cells, |(power, op)| {
        let d = effective_dynamics(op);
        ResponseRow {
            mode_hz: op.mode.frequency_hz(),
            power_w: *power,
            phi: op.phi,
            p_cavity_w: intracavity_power(op),
            freq_shift_hz: d.frequency_shift_hz(&op.mode),
            damping_ratio: d.damping_ratio(&op.mode),
            stable: d.stable,
            t_eff_k: d.t_eff.unwrap_or(f64::NAN),
        }
    }))
}

/// `Γ_eff/Γ_m` of the target mode at detuning `phi` with intracavity power
/// `p_cavity` at that detuning.
pub fn damping_ratio_at(
    config: &ExperimentConfig,
    phi: f64,
    p_cavity: f64,
) -> Result<f64, SweepError> {
    Ok(dynamics_at(config, phi, p_cavity)?.damping_ratio(&config.mode()))
}

fn dynamics_at(
    config: &ExperimentConfig,
    phi: f64,
    p_cavity: f64,
) -> Result<EffectiveDynamics, SweepError> {
    let op = OperatingPoint::from_detuned_power(
        config.mode(),
        config.cavity()?,
        phi,
        p_cavity,
        config.bath.temperature_k,
    )?;
    Ok(effective_dynamics(&op))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub phi: f64,
    /// Γ_eff = 0 power found by bisection (W, intracavity at the detuning).
    pub power_w: f64,
    /// Closed-form threshold at the same detuning (W).
    pub closed_form_w: f64,
    /// Γ_eff/Γ_m at `power_w`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub level: f64,
    /// `(phi, power)` crossings, one per detuning column at most.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityMap {
    pub phis: Vec<f64>,
    /// Intracavity power at the detuning (W).
    pub powers: Vec<f64>,
    /// `ratio[i][j]` = Γ_eff/Γ_m at `powers[i]`, `phis[j]`.
    pub ratio: Vec<Vec<f64>>,
    /// Airy-reachable cells for the largest configured incident power
    /// (`P ≤ P_res/(1+φ²)`); `None` when powers are given as intracavity.
    pub reachable: Option<Vec<Vec<bool>>>,
    pub boundary: Vec<BoundaryPoint>,
    pub contours: Vec<Contour>,
}

const BISECTION_STEPS: usize = 200;

/// Damping-ratio map over the configured `{φ, P}` grid, the Γ_eff = 0
/// boundary by bisection, and iso-damping contours.
pub fn stability_map(
    config: &ExperimentConfig,
    exec: Execution,
) -> Result<StabilityMap, SweepError> {
    let spec = &config.stability_map;
    let phis = linspace(spec.phi_start, spec.phi_stop, spec.phi_count);
    let powers = linspace(0.0, spec.power_max_w, spec.power_count);
    let cells: Vec<(f64, f64)> = powers
        .iter()
        .flat_map(|p| phis.iter().map(move |phi| (*phi, *p)))
        .collect();
    let flat = exec
        .map(&cells, |(phi, p)| damping_ratio_at(config, *phi, *p))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let ratio: Vec<Vec<f64>> = flat.chunks(phis.len()).map(|c| c.to_vec()).collect();

    let reachable = match config.power.kind {
        PowerKind::Incident => {
            let p_in = config.power.values_w.iter().cloned().fold(0.0, f64::max);
            let p_res = config.resonant_power(p_in);
            Some(
                powers
                    .iter()
                    .map(|p| {
                        phis.iter()
                            .map(|phi| *p <= p_res / (1.0 + phi * phi))
                            .collect()
                    })
                    .collect(),
            )
        }
        PowerKind::Cavity => None,
    };

    let mode = config.mode();
    let cavity = config.cavity()?;
    let boundary = exec
        .map(&phis, |phi| -> Result<Option<BoundaryPoint>, SweepError> {
            if *phi == 0.0 {
                return Ok(None);
            }
            let hi_ratio = damping_ratio_at(config, *phi, spec.power_max_w)?;
            if hi_ratio > 0.0 {
                return Ok(None);
            }
            let (mut lo, mut hi) = (0.0, spec.power_max_w);
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if damping_ratio_at(config, *phi, mid)? > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let power_w = 0.5 * (lo + hi);
            let closed_form_w = instability_threshold(&mode, &cavity, *phi)?.unwrap_or(f64::NAN);
            Ok(Some(BoundaryPoint {
                phi: *phi,
                power_w,
                closed_form_w,
                residual: damping_ratio_at(config, *phi, power_w)?,
            }))
        })
        .into_iter()
        .filter_map(|r| r.transpose())
        .collect::<Result<Vec<_>, _>>()?;

    let contours = spec
        .contour_levels
        .iter()
        .map(|level| Contour {
            level: *level,
            points: column_crossings(&phis, &powers, &ratio, *level),
        })
        .collect();

    Ok(StabilityMap {
        phis,
        powers,
        ratio,
        reachable,
        boundary,
        contours,
    })
}

/// Linear interpolation along each detuning column for the first crossing
/// of `level`.
fn column_crossings(
    phis: &[f64],
    powers: &[f64],
    ratio: &[Vec<f64>],
    level: f64,
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (j, phi) in phis.iter().enumerate() {
        for i in 1..powers.len() {
            let (a, b) = (ratio[i - 1][j] - level, ratio[i][j] - level);
            if a == 0.0 {
                out.push((*phi, powers[i - 1]));
                break;
            }
            if a * b < 0.0 {
                let t = a / (a - b);
                out.push((*phi, powers[i - 1] + t * (powers[i] - powers[i - 1])));
                break;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureRow {
    pub phi: f64,
    pub stable: bool,
    /// `T Γ_m / Γ_eff` (K); NaN when unstable.
    pub t_single_k: f64,
    /// What an area fit of the composite spectrum reports: the single-mode
    /// value plus the other modes' power inside the fit window (K).
    pub t_with_background_k: f64,
    /// Another mode's resonance lies inside the fit window.
    pub overlap: bool,
}

/// Simpson panels used to integrate the background over the fit window.
const BACKGROUND_PANELS: usize = 2000;

/// Effective temperature over the temperature-sweep detuning grid, with and
/// without the thermal tails of the other modes.
pub fn temperature_sweep(
    config: &ExperimentConfig,
    exec: Execution,
) -> Result<Vec<TemperatureRow>, SweepError> {
    let spec = &config.temperature_sweep;
    let phis = linspace(spec.phi_start, spec.phi_stop, spec.phi_count);
    let others = config.other_modes();
    let ops = phis
        .iter()
        .map(|phi| config.operating_point(*phi, spec.power_w))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(exec.map(&ops, |op| observed_temperature(op, &others)))
}

fn observed_temperature(op: &OperatingPoint, others: &[MechanicalMode]) -> TemperatureRow {
    let d = effective_dynamics(op);
    let Some(t_single) = d.t_eff else {
        return TemperatureRow {
            phi: op.phi,
            stable: false,
            t_single_k: f64::NAN,
            t_with_background_k: f64::NAN,
            overlap: false,
        };
    };
    let center = d.omega_eff / (2.0 * PI);
    let fwhm = d.gamma_eff / (2.0 * PI);
    let lo = (center - DEFAULT_WINDOW_WIDTHS * fwhm).max(0.0);
    let hi = center + DEFAULT_WINDOW_WIDTHS * fwhm;
    let overlap = others
        .iter()
        .any(|m| m.frequency_hz() >= lo && m.frequency_hz() <= hi);
    let h = (hi - lo) / BACKGROUND_PANELS as f64;
    let bg = |f: f64| background_psd(others, op.temperature_bath, f);
    let mut sum = bg(lo) + bg(hi);
    for k in 1..BACKGROUND_PANELS {
        sum += if k % 2 == 1 { 4.0 } else { 2.0 } * bg(lo + k as f64 * h);
    }
    let bg_power = sum * h / 3.0;
    let half = 0.5 * fwhm;
    let fraction = (((hi - center) / half).atan() - ((lo - center) / half).atan()) / PI;
    let extra = op.mode.mass() * d.omega_eff.powi(2) * bg_power / fraction / BOLTZMANN;
    TemperatureRow {
        phi: op.phi,
        stable: true,
        t_single_k: t_single,
        t_with_background_k: t_single + extra,
        overlap,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEntry {
    pub power_w: f64,
    pub phi: f64,
    pub dynamics: EffectiveDynamics,
    /// `None` for unstable points, which have no stationary spectrum.
    pub spectrum: Option<NoiseSpectrum>,
}

/// Closed-form spectra (target mode plus other modes' tails) for every
/// configured series.
pub fn spectrum_set(
    config: &ExperimentConfig,
    exec: Execution,
) -> Result<Vec<SpectrumEntry>, SweepError> {
    let spec = &config.spectrum;
    let others = config.other_modes();
    let ops = spec
        .series
        .iter()
        .flat_map(|s| s.phis.iter().map(move |phi| (s.power_w, *phi)))
        .map(|(p, phi)| config.operating_point(phi, p).map(|op| (p, op)))
        .collect::<Result<Vec<_>, _>>()?;
    exec.map(&ops, |(power, op)| {
        let d = effective_dynamics(op);
        let spectrum = if d.stable {
            Some(composite_spectrum(
                op,
                &others,
                spec.f_lo_hz,
                spec.f_hi_hz,
                spec.points,
            )?)
        } else {
            None
        };
        Ok(SpectrumEntry {
            power_w: *power,
            phi: op.phi,
            dynamics: d,
            spectrum,
        })
    })
    .into_iter()
    .collect()
}
