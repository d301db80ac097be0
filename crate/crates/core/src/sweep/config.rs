//! Experiment configuration: a TOML file merged over the shipped
//! `paper.defaults`, then validated into physics types.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use super::SweepError;
use crate::model::{CavitySetup, MechanicalMode, OperatingPoint};
use crate::sim::SimConfig;

/// The shipped default configuration file.
pub const PAPER_DEFAULTS: &str = include_str!("../../data/paper.defaults");

/// Detunings must lie strictly inside `(-MAX_ABS_PHI, MAX_ABS_PHI)`.
pub const MAX_ABS_PHI: f64 = 3.0;

/// Tables replaced as a whole rather than merged key by key, because their
/// alternative forms would otherwise mix.
const REPLACED_TABLES: &[&str] = &["detuning"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub frequency_hz: f64,
    pub mass_kg: f64,
    pub q_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySpec {
    pub wavelength_m: f64,
    pub length_m: f64,
    pub finesse: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
    pub coupling_slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSpec {
    pub temperature_k: f64,
}

/// How power values in the file are to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerKind {
    /// Incident power, converted through the coupling slope.
    Incident,
    /// Resonant intracavity power.
    Cavity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSpec {
    pub kind: PowerKind,
    pub values_w: Vec<f64>,
}

/// Either explicit values or `count` evenly spaced points from `start` to
/// `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GridSpec {
    Values { values: Vec<f64> },
    Range { start: f64, stop: f64, count: usize },
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        match self {
            GridSpec::Values { values } => values.clone(),
            GridSpec::Range { start, stop, count } => linspace(*start, *stop, *count),
        }
    }
}

/// `n` points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSeries {
    pub power_w: f64,
    pub phis: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    pub f_lo_hz: f64,
    pub f_hi_hz: f64,
    pub points: usize,
    pub series: Vec<SpectrumSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityMapSpec {
    pub phi_start: f64,
    pub phi_stop: f64,
    pub phi_count: usize,
    /// Intracavity power at the detuning (W).
    pub power_max_w: f64,
    pub power_count: usize,
    pub contour_levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureSweepSpec {
    pub power_w: f64,
    pub phi_start: f64,
    pub phi_stop: f64,
    pub phi_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub phi: f64,
    pub power_w: f64,
    pub trajectories: usize,
    pub seed: u64,
    /// Recorded length per trajectory in units of `1/Γ_eff` (bare `Γ_m` for
    /// unstable points), unless `duration_s` is set.
    pub duration_linewidths: f64,
    pub samples_per_period: f64,
    pub overlap: f64,
    pub export_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_displacement_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_len: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: ModeSpec,
    #[serde(default)]
    pub other_modes: Vec<ModeSpec>,
    pub cavity: CavitySpec,
    pub bath: BathSpec,
    pub power: PowerSpec,
    pub detuning: GridSpec,
    pub spectrum: SpectrumSpec,
    pub stability_map: StabilityMapSpec,
    pub temperature_sweep: TemperatureSweepSpec,
    pub sim: SimSpec,
    pub output: OutputSpec,
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o))
                if !REPLACED_TABLES.contains(&key.as_str()) =>
            {
                merge(b, o)
            }
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn invalid(field: &str, message: impl Into<String>) -> SweepError {
    SweepError::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// The shipped defaults.
    pub fn paper_defaults() -> Self {
        Self::from_toml_str(PAPER_DEFAULTS).expect("shipped defaults are valid")
    }

    /// Parses `text` and merges it over the defaults.
    pub fn from_toml_str(text: &str) -> Result<Self, SweepError> {
        let over: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| SweepError::Parse {
                path: None,
                message: e.to_string(),
            })?;
        let mut base: toml::Table = PAPER_DEFAULTS.parse().expect("shipped defaults parse");
        merge(&mut base, over);
        let config: Self = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| SweepError::Parse {
                path: None,
                message: e.to_string(),
            })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, SweepError> {
        let text = std::fs::read_to_string(path).map_err(|e| SweepError::Parse {
            path: Some(path.to_path_buf()),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            SweepError::Parse { message, .. } => SweepError::Parse {
                path: Some(path.to_path_buf()),
                message,
            },
            other => other,
        })
    }

    /// Checks ranges and builds every physics type once.
    pub fn validate(&self) -> Result<(), SweepError> {
        self.mode_at("mode", &self.mode)?;
        for (i, m) in self.other_modes.iter().enumerate() {
            let field = format!("other_modes[{i}]");
            self.mode_at(&field, m)?;
            if (m.frequency_hz - self.mode.frequency_hz).abs() <= 1e-9 * self.mode.frequency_hz {
                return Err(invalid(&field, "coincides with the target mode"));
            }
        }
        self.cavity()?;
        non_negative("bath.temperature_k", self.bath.temperature_k)?;
        if self.power.values_w.is_empty() {
            return Err(invalid("power.values_w", "must not be empty"));
        }
        for p in &self.power.values_w {
            non_negative("power.values_w", *p)?;
        }
        check_phis("detuning", &self.detuning.points())?;

        let s = &self.spectrum;
        if !(s.f_lo_hz >= 0.0 && s.f_hi_hz > s.f_lo_hz) {
            return Err(invalid("spectrum", "need 0 ≤ f_lo_hz < f_hi_hz"));
        }
        if s.points < 8 {
            return Err(invalid("spectrum.points", "need at least 8"));
        }
        for (i, series) in s.series.iter().enumerate() {
            non_negative(&format!("spectrum.series[{i}].power_w"), series.power_w)?;
            check_phis(&format!("spectrum.series[{i}].phis"), &series.phis)?;
        }

        let m = &self.stability_map;
        check_phis(
            "stability_map",
            &linspace(m.phi_start, m.phi_stop, m.phi_count),
        )?;
        if !(m.power_max_w > 0.0 && m.power_max_w.is_finite()) {
            return Err(invalid("stability_map.power_max_w", "must be positive"));
        }
        if m.power_count < 2 {
            return Err(invalid("stability_map.power_count", "need at least 2"));
        }

        let t = &self.temperature_sweep;
        non_negative("temperature_sweep.power_w", t.power_w)?;
        check_phis(
            "temperature_sweep",
            &linspace(t.phi_start, t.phi_stop, t.phi_count),
        )?;

        let sim = &self.sim;
        check_phis("sim.phi", &[sim.phi])?;
        non_negative("sim.power_w", sim.power_w)?;
        if sim.trajectories == 0 {
            return Err(invalid("sim.trajectories", "must be at least 1"));
        }
        if !(sim.duration_linewidths > 0.0 && sim.duration_linewidths.is_finite()) {
            return Err(invalid("sim.duration_linewidths", "must be positive"));
        }
        if !(sim.samples_per_period >= 20.0) {
            return Err(invalid("sim.samples_per_period", "must be at least 20"));
        }
        if !(0.0..=0.9).contains(&sim.overlap) {
            return Err(invalid("sim.overlap", "must lie in [0, 0.9]"));
        }
        for (name, v) in [("sim.dt_s", sim.dt_s), ("sim.duration_s", sim.duration_s)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(invalid(name, "must be positive"));
                }
            }
        }
        if let Some(b) = sim.burn_in_s {
            non_negative("sim.burn_in_s", b)?;
        }
        Ok(())
    }

    fn mode_at(&self, field: &str, m: &ModeSpec) -> Result<MechanicalMode, SweepError> {
        MechanicalMode::from_frequency_hz(m.frequency_hz, m.mass_kg, m.q_factor)
            .map_err(|e| invalid(field, e.to_string()))
    }

    pub fn mode(&self) -> MechanicalMode {
        self.mode_at("mode", &self.mode).expect("validated")
    }

    pub fn other_modes(&self) -> Vec<MechanicalMode> {
        self.other_modes
            .iter()
            .map(|m| self.mode_at("other_modes", m).expect("validated"))
            .collect()
    }

    pub fn cavity(&self) -> Result<CavitySetup, SweepError> {
        let c = &self.cavity;
        match c.bandwidth_hz {
            Some(bw) => CavitySetup::new(
                c.wavelength_m,
                c.length_m,
                c.finesse,
                2.0 * PI * bw,
                c.coupling_slope,
            ),
            None => {
                CavitySetup::from_geometry(c.wavelength_m, c.length_m, c.finesse, c.coupling_slope)
            }
        }
        .map_err(|e| invalid("cavity", e.to_string()))
    }

    /// Resonant intracavity power for a configured power value.
    pub fn resonant_power(&self, power: f64) -> f64 {
        match self.power.kind {
            PowerKind::Incident => self.cavity().expect("validated").resonant_power(power),
            PowerKind::Cavity => power,
        }
    }

    /// Operating point of `mode` at `phi` with a configured power value.
    pub fn operating_point_for(
        &self,
        mode: MechanicalMode,
        phi: f64,
        power: f64,
    ) -> Result<OperatingPoint, SweepError> {
        OperatingPoint::new(
            mode,
            self.cavity()?,
            phi,
            self.resonant_power(power),
            self.bath.temperature_k,
        )
        .map_err(SweepError::from)
    }

    /// Operating point of the target mode.
    pub fn operating_point(&self, phi: f64, power: f64) -> Result<OperatingPoint, SweepError> {
        self.operating_point_for(self.mode(), phi, power)
    }

    /// Simulation settings for `op`, filling unset values from the
    /// equilibrium defaults.
    pub fn sim_config(&self, op: &OperatingPoint) -> SimConfig {
        let base = SimConfig::for_operating_point(op);
        let s = &self.sim;
        let d = crate::model::effective_dynamics(op);
        let gamma = if d.stable {
            d.gamma_eff
        } else {
            op.mode.gamma_m()
        };
        let fastest = op.mode.omega_m().max(op.cavity.omega_c()) / (2.0 * PI);
        SimConfig {
            dt: s.dt_s.unwrap_or(1.0 / (s.samples_per_period * fastest)),
            duration: s.duration_s.unwrap_or(s.duration_linewidths / gamma),
            seed: s.seed,
            burn_in: s.burn_in_s.unwrap_or(base.burn_in),
            n_trajectories: s.trajectories,
            initial_displacement: s.initial_displacement_m.unwrap_or(0.0),
        }
    }

    /// Canonical TOML text of the effective configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of [`Self::to_toml`], with the
    /// output directory left out so that identical runs hash alike.
    pub fn hash(&self) -> String {
        let mut physics = self.clone();
        physics.output.dir = PathBuf::new();
        let digest = Sha256::digest(physics.to_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Replaces every detuning list (sweep grid, spectrum series, sim) with
    /// `phis`; the sim uses the first.
    pub fn override_phis(&mut self, phis: &[f64]) -> Result<(), SweepError> {
        if phis.is_empty() {
            return Ok(());
        }
        check_phis("--phi", phis)?;
        self.detuning = GridSpec::Values {
            values: phis.to_vec(),
        };
        for s in &mut self.spectrum.series {
            s.phis = phis.to_vec();
        }
        self.spectrum.series.dedup();
        self.sim.phi = phis[0];
        Ok(())
    }

    /// Replaces every power value with `power` of the given kind.
    pub fn override_power(&mut self, kind: PowerKind, power: f64) -> Result<(), SweepError> {
        non_negative("power", power)?;
        self.power = PowerSpec {
            kind,
            values_w: vec![power],
        };
        for s in &mut self.spectrum.series {
            s.power_w = power;
        }
        self.spectrum.series.dedup();
        self.temperature_sweep.power_w = power;
        self.sim.power_w = power;
        Ok(())
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), SweepError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(
            field,
            format!("{v} must be finite and non-negative"),
        ))
    }
}

fn check_phis(field: &str, phis: &[f64]) -> Result<(), SweepError> {
    if phis.is_empty() {
        return Err(invalid(field, "detuning grid is empty"));
    }
    if let Some(p) = phis.iter().find(|p| !(p.abs() < MAX_ABS_PHI)) {
        return Err(invalid(
            field,
            format!("detuning {p} outside (-{MAX_ABS_PHI}, {MAX_ABS_PHI})"),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_hold_the_reference_numbers() {
        let c = ExperimentConfig::paper_defaults();
        let mode = c.mode();
        assert!((mode.frequency_hz() / 814e3 - 1.0).abs() < 1e-12);
        assert!((mode.spring_constant() / 4.970_065_9e6 - 1.0).abs() < 1e-6);
        let cav = c.cavity().unwrap();
        assert!((cav.bandwidth_hz() / 1.05e6 - 1.0).abs() < 1e-12);
        assert_eq!(cav.coupling_slope(), 2970.0);
        assert_eq!(
            c.power.values_w,
            vec![0.5e-3, 0.9e-3, 1.6e-3, 2.2e-3, 3.2e-3]
        );
        assert_eq!(c.detuning.points().len(), 201);
        assert_eq!(c.detuning.points()[100], 0.0);
        assert_eq!(c.spectrum.series.len(), 2);
        assert!(c.other_modes.is_empty());
    }

    #[test]
    fn partial_file_merges_over_defaults() {
        let c = ExperimentConfig::from_toml_str(
            "[cavity]\ncoupling_slope = 2000\n[detuning]\nvalues = [-0.2, 0.2]\n[[other_modes]]\nfrequency_hz = 2824e3\nmass_kg = 190e-9\nq_factor = 1e4\n",
        )
        .unwrap();
        assert_eq!(c.cavity().unwrap().coupling_slope(), 2000.0);
        assert_eq!(c.cavity.finesse, 30000.0);
        assert_eq!(c.detuning.points(), vec![-0.2, 0.2]);
        assert_eq!(c.other_modes().len(), 1);
    }

    #[test]
    fn geometry_bandwidth_when_unset() {
        let mut c = ExperimentConfig::paper_defaults();
        c.cavity.bandwidth_hz = None;
        let bw = c.cavity().unwrap().bandwidth_hz();
        // c/(4 L F) ≈ 1.04 MHz
        assert!((bw / 1.0408e6 - 1.0).abs() < 1e-3, "{bw}");
    }

    #[test]
    fn errors_name_the_field() {
        let bad = [
            ("[mode]\nq_factor = \"high\"\n", "mode.q_factor"),
            ("[mode]\nq_factr = 3\n", "q_factr"),
            ("[mode]\nq_factor = -3\n", "mode"),
            ("[detuning]\nvalues = [0.1, 4.0]\n", "detuning"),
            ("[power]\nvalues_w = []\n", "power.values_w"),
            ("[sim]\noverlap = 0.95\n", "sim.overlap"),
            ("[mode\n", "line 1"),
        ];
        for (text, needle) in bad {
            let e = ExperimentConfig::from_toml_str(text)
                .unwrap_err()
                .to_string();
            assert!(e.contains(needle), "{text:?} -> {e}");
        }
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::paper_defaults();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
        b.output.dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.bath.temperature_k = 301.0;
        assert_ne!(a.hash(), b.hash());
        let reparsed = ExperimentConfig::from_toml_str(&a.to_toml()).unwrap();
        assert_eq!(reparsed, a);
    }

    #[test]
    fn overrides() {
        let mut c = ExperimentConfig::paper_defaults();
        c.override_power(PowerKind::Cavity, 5.0).unwrap();
        assert_eq!(c.resonant_power(c.power.values_w[0]), 5.0);
        assert_eq!(c.spectrum.series.len(), 2);
        c.override_phis(&[-0.3]).unwrap();
        assert_eq!(c.spectrum.series.len(), 1);
        assert_eq!(c.sim.phi, -0.3);
        assert!(c.override_phis(&[3.5]).is_err());
    }
}
