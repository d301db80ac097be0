//! File-emitting commands. Each writes into the configured output directory
//! and returns the files it wrote plus a short human-readable summary.

use std::f64::consts::PI;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::csv::CsvTable;
use super::grids::{response_sweep, spectrum_set, stability_map, temperature_sweep};
use super::svg::{heat_map, line_chart, Series};
use super::SweepError;
use crate::constants::BOLTZMANN;
use crate::exec::Execution;
use crate::model::{effective_dynamics, OperatingPoint};
use crate::sim::{
    integrate, ringdown_rate, write_raw, write_text, SimConfig, SimError, Simulator, Trajectory,
};
use crate::spectral::{
    apply_calibration, background_corrected_temperature, default_window, fit_lorentzian,
    read_calibration, read_spectrum, temperature_from_area, write_fit_report, write_spectrum,
    LorentzianFit, SpectralError, WelchEstimator, DEFAULT_WINDOW_WIDTHS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// Only unstable operating points were requested (or reached).
    UnstableOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub status: Status,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

struct Emitter {
    dir: PathBuf,
    hash: String,
    files: Vec<PathBuf>,
}

impl Emitter {
    fn new(config: &ExperimentConfig) -> Result<Self, SweepError> {
        let dir = config.output.dir.clone();
        fs::create_dir_all(&dir).map_err(|source| SweepError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Self {
            dir,
            hash: config.hash(),
            files: Vec::new(),
        })
    }

    fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), SweepError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|source| SweepError::Io {
            path: path.clone(),
            source,
        })?;
        self.files.push(path);
        Ok(())
    }

    fn table(&mut self, name: &str, table: &CsvTable) -> Result<(), SweepError> {
        let bytes = table.to_bytes(&self.hash);
        self.bytes(name, &bytes)
    }

    fn finish(self, status: Status, summary: String) -> Outcome {
        Outcome {
            status,
            files: self.files,
            summary,
        }
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn power_kind(config: &ExperimentConfig) -> &'static str {
    match config.power.kind {
        super::PowerKind::Incident => "incident",
        super::PowerKind::Cavity => "cavity",
    }
}

/// Closed-form spectra for every configured series; unstable points are
/// skipped and listed.
pub fn run_spectrum(
    config: &ExperimentConfig,
    svg: bool,
    exec: Execution,
) -> Result<Outcome, SweepError> {
    let set = spectrum_set(config, exec)?;
    let mut out = Emitter::new(config)?;
    let mut summary = CsvTable::new(
        "spectrum summary",
        &[
            ("power_w", "W"),
            ("phi", "1"),
            ("stable", "flag"),
            ("omega_eff_hz", "Hz"),
            ("gamma_eff_hz", "Hz"),
            ("t_eff_k", "K"),
        ],
    )
    .meta("power_kind", power_kind(config));
    let mut text = String::new();
    let mut stable = 0;
    for e in &set {
        let d = &e.dynamics;
        summary.push(vec![
            e.power_w,
            e.phi,
            flag(d.stable),
            d.omega_eff / (2.0 * PI),
            d.gamma_eff / (2.0 * PI),
            d.t_eff.unwrap_or(f64::NAN),
        ]);
        match &e.spectrum {
            Some(s) => {
                stable += 1;
                let mut buf = Vec::new();
                write_spectrum(
                    &mut buf,
                    s,
                    &[
                        ("config_hash", out.hash.clone()),
                        ("power_kind", power_kind(config).into()),
                        ("power_w", format!("{:e}", e.power_w)),
                        ("phi", format!("{:e}", e.phi)),
                    ],
                )
                .expect("writing to memory");
                out.bytes(&spectrum_name(e.power_w, e.phi), &buf)?;
            }
            None => text.push_str(&format!(
                "skipped unstable point P = {:e} W, phi = {} (Γ_eff/Γ_m = {:.3})\n",
                e.power_w,
                e.phi,
                d.damping_ratio(&config.mode())
            )),
        }
    }
    out.table("spectrum_summary.csv", &summary)?;
    if svg {
        for (k, series) in config.spectrum.series.iter().enumerate() {
            let lines: Vec<Series> = set
                .iter()
                .filter(|e| e.power_w == series.power_w && series.phis.contains(&e.phi))
                .filter_map(|e| {
                    let s = e.spectrum.as_ref()?;
                    Some(Series::new(
                        format!("phi = {}", e.phi),
                        s.freqs()
                            .iter()
                            .zip(s.psd())
                            .map(|(f, p)| (f / 1e3, p.log10()))
                            .collect(),
                    ))
                })
                .collect();
            let chart = line_chart(
                &format!(
                    "Displacement spectra, P = {:e} W ({})",
                    series.power_w,
                    power_kind(config)
                ),
                "frequency (kHz)",
                "log10 PSD (m²/Hz)",
                &lines,
            );
            out.bytes(&format!("spectrum_series{k}.svg"), chart.as_bytes())?;
        }
    }
    text.insert_str(0, &format!("{stable} of {} spectra written\n", set.len()));
    let status = if stable == 0 {
        Status::UnstableOnly
    } else {
        Status::Success
    };
    Ok(out.finish(status, text))
}

fn spectrum_name(power: f64, phi: f64) -> String {
    format!("spectrum_P{power:e}W_phi{phi:+.3}.csv")
}

/// Frequency shift and damping ratio over the configured power and detuning
/// grid, for every mode.
pub fn run_response_sweep(
    config: &ExperimentConfig,
    svg: bool,
    exec: Execution,
) -> Result<Outcome, SweepError> {
    let rows = response_sweep(config, exec)?;
    let mut out = Emitter::new(config)?;
    let mut table = CsvTable::new(
        "response-sweep",
        &[
            ("mode_hz", "Hz"),
            ("power_w", "W"),
            ("p_cavity_w", "W"),
            ("phi", "1"),
            ("freq_shift_hz", "Hz"),
            ("damping_ratio", "1"),
            ("stable", "flag"),
            ("t_eff_k", "K"),
        ],
    )
    .meta("power_kind", power_kind(config))
    .meta(
        "bath_temperature_k",
        format!("{:e}", config.bath.temperature_k),
    );
    for r in &rows {
        table.push(vec![
            r.mode_hz,
            r.power_w,
            r.p_cavity_w,
            r.phi,
            r.freq_shift_hz,
            r.damping_ratio,
            flag(r.stable),
            r.t_eff_k,
        ]);
    }
    out.table("response_sweep.csv", &table)?;
    if svg {
        let target = config.mode().frequency_hz();
        let series = |value: fn(&super::ResponseRow) -> f64| -> Vec<Series> {
            config
                .power
                .values_w
                .iter()
                .map(|p| {
                    Series::new(
                        format!("{:e} W", p),
                        rows.iter()
                            .filter(|r| r.mode_hz == target && r.power_w == *p)
                            .map(|r| (r.phi, if r.stable { value(r) } else { f64::NAN }))
                            .collect(),
                    )
                })
                .collect()
        };
        let chart = line_chart(
            "Damping ratio",
            "phi",
            "Γ_eff/Γ_m",
            &series(|r| r.damping_ratio),
        );
        out.bytes("response_damping.svg", chart.as_bytes())?;
        let chart = line_chart(
            "Frequency shift",
            "phi",
            "shift (Hz)",
            &series(|r| r.freq_shift_hz),
        );
        out.bytes("response_shift.svg", chart.as_bytes())?;
    }
    let unstable = rows.iter().filter(|r| !r.stable).count();
    let status = if unstable == rows.len() {
        Status::UnstableOnly
    } else {
        Status::Success
    };
    Ok(out.finish(
        status,
        format!("{} cells, {unstable} unstable\n", rows.len()),
    ))
}

/// Damping-ratio map, Γ_eff = 0 boundary and iso-damping contours.
pub fn run_stability_map(
    config: &ExperimentConfig,
    svg: bool,
    exec: Execution,
) -> Result<Outcome, SweepError> {
    let map = stability_map(config, exec)?;
    let mut out = Emitter::new(config)?;
    let (chart, scale) = heat_map(
        "Damping ratio Γ_eff/Γ_m",
        "phi",
        "intracavity power (W)",
        &map.phis,
        &map.powers,
        &map.ratio,
        map.reachable.as_deref(),
        &[Series::new(
            "Γ_eff = 0",
            map.boundary.iter().map(|b| (b.phi, b.power_w)).collect(),
        )],
    );
    let mut table = CsvTable::new(
        "stability-map",
        &[
            ("phi", "1"),
            ("p_cavity_w", "W"),
            ("damping_ratio", "1"),
            ("stable", "flag"),
            ("reachable", "flag"),
        ],
    )
    .meta("power_axis", "intracavity power at the detuning")
    .meta(
        "reachable_rule",
        match &map.reachable {
            Some(_) => "P <= P_res/(1+phi^2) for the largest configured incident power",
            None => "all cells (powers given as intracavity)",
        },
    )
    .meta("svg_color_range", format!("{:e},{:e}", scale.0, scale.1));
    for (i, p) in map.powers.iter().enumerate() {
        for (j, phi) in map.phis.iter().enumerate() {
            let r = map.ratio[i][j];
            let reach = map.reachable.as_ref().is_none_or(|m| m[i][j]);
            table.push(vec![*phi, *p, r, flag(r > 0.0), flag(reach)]);
        }
    }
    out.table("stability_map.csv", &table)?;

    let mut boundary = CsvTable::new(
        "stability-boundary",
        &[
            ("phi", "1"),
            ("p_bisection_w", "W"),
            ("p_closed_form_w", "W"),
            ("relative_difference", "1"),
            ("damping_ratio_at_boundary", "1"),
        ],
    );
    for b in &map.boundary {
        boundary.push(vec![
            b.phi,
            b.power_w,
            b.closed_form_w,
            (b.power_w - b.closed_form_w) / b.closed_form_w,
            b.residual,
        ]);
    }
    out.table("stability_boundary.csv", &boundary)?;

    let mut contours = CsvTable::new(
        "stability-contours",
        &[("level", "1"), ("phi", "1"), ("p_cavity_w", "W")],
    );
    for c in &map.contours {
        for (phi, p) in &c.points {
            contours.push(vec![c.level, *phi, *p]);
        }
    }
    out.table("stability_contours.csv", &contours)?;
    if svg {
        out.bytes("stability_map.svg", chart.as_bytes())?;
    }
    let worst = map
        .boundary
        .iter()
        .map(|b| ((b.power_w - b.closed_form_w) / b.closed_form_w).abs())
        .fold(0.0, f64::max);
    Ok(out.finish(
        Status::Success,
        format!(
            "{} x {} cells, {} boundary points (max relative difference to closed form {worst:.2e})\n",
            map.phis.len(),
            map.powers.len(),
            map.boundary.len()
        ),
    ))
}

/// Effective temperature against detuning, single-mode and as observed on
/// top of the other modes' tails.
pub fn run_temperature_sweep(
    config: &ExperimentConfig,
    svg: bool,
    exec: Execution,
) -> Result<Outcome, SweepError> {
    let rows = temperature_sweep(config, exec)?;
    let mut out = Emitter::new(config)?;
    let mut table = CsvTable::new(
        "temperature-sweep",
        &[
            ("phi", "1"),
            ("stable", "flag"),
            ("t_eff_single_k", "K"),
            ("t_eff_with_background_k", "K"),
            ("overlap", "flag"),
        ],
    )
    .meta("power_kind", power_kind(config))
    .meta("power_w", format!("{:e}", config.temperature_sweep.power_w))
    .meta("background_modes", config.other_modes.len());
    for r in &rows {
        table.push(vec![
            r.phi,
            flag(r.stable),
            r.t_single_k,
            r.t_with_background_k,
            flag(r.overlap),
        ]);
    }
    out.table("temperature_sweep.csv", &table)?;
    if svg {
        let pick = |f: fn(&super::TemperatureRow) -> f64| {
            rows.iter().map(|r| (r.phi, f(r).log10())).collect()
        };
        let chart = line_chart(
            "Effective temperature",
            "phi",
            "log10 T_eff (K)",
            &[
                Series::new("single mode", pick(|r| r.t_single_k)),
                Series::new("with background", pick(|r| r.t_with_background_k)),
            ],
        );
        out.bytes("temperature_sweep.svg", chart.as_bytes())?;
    }
    let stable: Vec<_> = rows.iter().filter(|r| r.stable).collect();
    let status = if stable.is_empty() {
        Status::UnstableOnly
    } else {
        Status::Success
    };
    let min = stable
        .iter()
        .min_by(|a, b| a.t_single_k.total_cmp(&b.t_single_k));
    let summary = match min {
        Some(m) => format!(
            "minimum single-mode T_eff {:.2} K at phi = {}\n",
            m.t_single_k, m.phi
        ),
        None => "no stable detuning\n".into(),
    };
    Ok(out.finish(status, summary))
}

/// Welch segment length resolving the expected linewidth by about eight
/// bins, bounded by half the record.
fn segment_length(requested: Option<usize>, cfg: &SimConfig, fwhm_hz: f64) -> usize {
    if let Some(n) = requested {
        return n;
    }
    let wanted = (8.0 / (cfg.dt * fwhm_hz)).ceil() as usize;
    let limit = (cfg.sample_count() / 2).max(8);
    let mut n = wanted.next_power_of_two().max(8);
    while n > limit {
        n /= 2;
    }
    n
}

struct RunPart {
    welch: WelchEstimator,
    mean_square: f64,
    prefix: Vec<f64>,
}

fn welch_run(
    op: &OperatingPoint,
    cfg: &SimConfig,
    segment_len: usize,
    overlap: f64,
    export: usize,
) -> Result<RunPart, SweepError> {
    let mut welch = WelchEstimator::new(segment_len, overlap, cfg.dt)?;
    let mut sim = Simulator::new(op, cfg)?;
    let mut prefix = Vec::with_capacity(export);
    let mut sum = 0.0;
    let n = cfg.sample_count();
    let growth = |time| {
        SweepError::Sim(SimError::UnstableGrowth {
            time,
            partial: Box::new(Trajectory {
                samples: Vec::new(),
                dt: cfg.dt,
                start_time: cfg.burn_in,
                op: *op,
                config: *cfg,
            }),
        })
    };
    sim.skip(cfg.burn_in_steps()).map_err(growth)?;
    sim.run(n, |x| {
        welch.push(x);
        sum += x * x;
        if prefix.len() < export {
            prefix.push(x);
        }
    })
    .map_err(growth)?;
    Ok(RunPart {
        welch,
        mean_square: sum / n as f64,
        prefix,
    })
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b) / b
}

/// Time-domain run at the configured simulation point. Stable points give a
/// Welch spectrum, a Lorentzian fit and a comparison with the closed form;
/// unstable points give a growth-rate report and [`Status::UnstableOnly`].
pub fn run_simulate(config: &ExperimentConfig, exec: Execution) -> Result<Outcome, SweepError> {
    let s = &config.sim;
    let op = config.operating_point(s.phi, s.power_w)?;
    let d = effective_dynamics(&op);
    let mut cfg = config.sim_config(&op);
    cfg.validate(&op)?;
    let mut out = Emitter::new(config)?;
    let export_traj =
        |out: &mut Emitter, samples: Vec<f64>, cfg: &SimConfig| -> Result<(), SweepError> {
            let t = Trajectory {
                samples,
                dt: cfg.dt,
                start_time: cfg.burn_in,
                op,
                config: *cfg,
            };
            let mut text = Vec::new();
            write_text(&t, &mut text)?;
            out.bytes("trajectory.txt", &text)?;
            let mut raw = Vec::new();
            write_raw(&t, &mut raw)?;
            out.bytes("trajectory.ospr", &raw)
        };

    if !d.stable {
        let k = op.mode.spring_constant();
        let thermal = (BOLTZMANN * op.temperature_bath / k).sqrt();
        if s.initial_displacement_m.is_none() {
            cfg.initial_displacement = if thermal > 0.0 {
                100.0 * thermal
            } else {
                1e-12
            };
        }
        // long enough to reach the divergence guard
        if s.duration_s.is_none() {
            cfg.duration = 60.0 / d.gamma_eff.abs();
        }
        cfg.burn_in = s.burn_in_s.unwrap_or(0.0);
        let (traj, diverged_at) = match integrate(&op, &cfg) {
            Ok(t) => (t, None),
            Err(SimError::UnstableGrowth { time, partial }) => (*partial, Some(time)),
            Err(e) => return Err(e.into()),
        };
        let fit = ringdown_rate(&traj)?;
        let expected = -0.5 * d.gamma_eff;
        let growth = -fit.rate;
        let mut report = format!(
            "phi={:e}\np_res_w={:e}\ngamma_eff_per_s={:e}\ngrowth_rate_expected_per_s={expected:e}\ngrowth_rate_fit_per_s={growth:e}\nrelative_error={:e}\nr_squared={:e}\npeaks={}\ninitial_displacement_m={:e}\n",
            op.phi,
            op.p_res,
            d.gamma_eff,
            relative(growth, expected),
            fit.r_squared,
            fit.peaks,
            cfg.initial_displacement
        );
        if let Some(t) = diverged_at {
            report.push_str(&format!("diverged_at_s={t:e}\n"));
        }
        report.push_str(&format!("config_hash={}\n", out.hash));
        out.bytes("growth_report.txt", report.as_bytes())?;
        let export = traj.samples.len().min(s.export_samples);
        export_traj(&mut out, traj.samples[..export].to_vec(), &cfg)?;
        return Ok(out.finish(
            Status::UnstableOnly,
            format!(
                "unstable point (Γ_eff/Γ_m = {:.3}): growth rate {growth:.4e} 1/s, expected {expected:.4e} 1/s ({:+.2}%)\n",
                d.damping_ratio(&op.mode),
                100.0 * relative(growth, expected)
            ),
        ));
    }

    let fwhm = d.gamma_eff / (2.0 * PI);
    let seg = segment_length(s.segment_len, &cfg, fwhm);
    if seg > cfg.sample_count() {
        return Err(SpectralError::TooShort {
            needed: seg,
            available: cfg.sample_count(),
        }
        .into());
    }
    let seeds: Vec<u64> = (0..cfg.n_trajectories as u64)
        .map(|i| cfg.seed.wrapping_add(i))
        .collect();
    let parts = exec.map(&seeds, |seed| {
        let c = cfg.with_seed(*seed);
        let export = if *seed == cfg.seed {
            s.export_samples
        } else {
            0
        };
        welch_run(&op, &c, seg, s.overlap, export)
    });
    let mut parts = parts.into_iter().collect::<Result<Vec<_>, _>>()?;
    let first = parts.remove(0);
    let mut welch = first.welch;
    let mut mean_square = first.mean_square;
    for p in &parts {
        welch.merge(&p.welch)?;
        mean_square += p.mean_square;
    }
    mean_square /= seeds.len() as f64;
    export_traj(&mut out, first.prefix, &cfg)?;

    let spectrum = welch.finish()?;
    let center = d.omega_eff / (2.0 * PI);
    let span = 2.5 * DEFAULT_WINDOW_WIDTHS * fwhm;
    let band = spectrum.band((center - span).max(0.0), center + span)?;
    let fit: LorentzianFit = fit_lorentzian(&band, default_window(&band))?;
    let t_area = temperature_from_area(&fit, &op.mode);
    let t_variance = op.mode.spring_constant() * mean_square / BOLTZMANN;
    let t_model = d.t_eff.expect("stable");

    let mut buf = Vec::new();
    write_spectrum(
        &mut buf,
        &band,
        &[
            ("config_hash", out.hash.clone()),
            ("phi", format!("{:e}", op.phi)),
            ("p_res_w", format!("{:e}", op.p_res)),
            ("trajectories", cfg.n_trajectories.to_string()),
            ("segment_len", seg.to_string()),
            ("segments", welch.segments().to_string()),
        ],
    )
    .expect("writing to memory");
    out.bytes("simulated_spectrum.csv", &buf)?;

    let mut report = Vec::new();
    write_fit_report(
        &mut report,
        &fit,
        &[
            ("temperature_area_k", format!("{t_area:e}")),
            (
                "temperature_linewidth_k",
                format!(
                    "{:e}",
                    op.temperature_bath * op.mode.gamma_m() / (2.0 * PI * fit.fwhm)
                ),
            ),
            ("temperature_variance_k", format!("{t_variance:e}")),
            ("config_hash", out.hash.clone()),
        ],
    )
    .expect("writing to memory");
    out.bytes("fit_report.txt", &report)?;

    let rows = [
        ("omega_eff_hz", center, fit.center),
        ("gamma_eff_hz", fwhm, fit.fwhm),
        ("t_eff_k", t_model, t_area),
        ("t_variance_k", t_model, t_variance),
    ];
    let mut table = CsvTable::new(
        "simulate comparison",
        &[
            ("quantity", "index"),
            ("closed_form", "varies"),
            ("simulated", "varies"),
            ("relative_error", "1"),
        ],
    )
    .meta(
        "quantities",
        rows.iter()
            .enumerate()
            .map(|(i, r)| format!("{i}:{}", r.0))
            .collect::<Vec<_>>()
            .join(";"),
    )
    .meta("phi", format!("{:e}", op.phi))
    .meta("p_res_w", format!("{:e}", op.p_res));
    let mut text = format!(
        "{:<14} {:>14} {:>14} {:>10}\n",
        "quantity", "closed form", "simulated", "rel. err"
    );
    for (i, (name, model, sim)) in rows.iter().enumerate() {
        table.push(vec![i as f64, *model, *sim, relative(*sim, *model)]);
        text.push_str(&format!(
            "{name:<14} {model:>14.6e} {sim:>14.6e} {:>+9.2}%\n",
            100.0 * relative(*sim, *model)
        ));
    }
    out.table("comparison.csv", &table)?;
    Ok(out.finish(Status::Success, text))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitOptions {
    pub spectrum: PathBuf,
    pub calibration: Option<PathBuf>,
    pub phi: Option<f64>,
}

fn open_file(path: &Path) -> Result<BufReader<fs::File>, SweepError> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| SweepError::Parse {
            path: Some(path.to_path_buf()),
            message: e.to_string(),
        })
}

fn located(path: &Path, e: SpectralError) -> SweepError {
    match e {
        SpectralError::Parse { .. } | SpectralError::InvalidSpectrum(_) | SpectralError::Io(_) => {
            SweepError::Parse {
                path: Some(path.to_path_buf()),
                message: e.to_string(),
            }
        }
        other => other.into(),
    }
}

/// Fits a spectrum file (optionally calibrated) and reports both
/// temperature routes.
pub fn run_fit(config: &ExperimentConfig, options: &FitOptions) -> Result<Outcome, SweepError> {
    let mut spectrum =
        read_spectrum(open_file(&options.spectrum)?).map_err(|e| located(&options.spectrum, e))?;
    let mut gain = 1.0;
    if let Some(path) = &options.calibration {
        let table = read_calibration(open_file(path)?).map_err(|e| located(path, e))?;
        let phi = options.phi.ok_or_else(|| SweepError::Config {
            field: "--phi".into(),
            message: "a detuning is needed to apply a calibration".into(),
        })?;
        gain = table.gain(phi)?;
        spectrum = apply_calibration(&spectrum, &table, phi)?;
    }
    let mode = config.mode();
    let others = config.other_modes();
    let bath = config.bath.temperature_k;
    let mut extra: Vec<(&str, String)> = Vec::new();
    let fit = if others.is_empty() {
        fit_lorentzian(&spectrum, default_window(&spectrum))?
    } else {
        let c = background_corrected_temperature(&spectrum, &mode, &others, bath)?;
        extra.push(("temperature_uncorrected_k", format!("{:e}", c.uncorrected)));
        extra.push((
            "background_at_peak_m2_per_hz",
            format!("{:e}", c.background_at_peak),
        ));
        extra.push(("reliable", c.reliable.to_string()));
        c.fit
    };
    let t_area = temperature_from_area(&fit, &mode);
    let t_width = bath * mode.gamma_m() / (2.0 * PI * fit.fwhm);
    extra.splice(
        0..0,
        [
            ("temperature_area_k", format!("{t_area:e}")),
            ("temperature_linewidth_k", format!("{t_width:e}")),
            ("gain", format!("{gain:e}")),
        ],
    );
    if let Some(phi) = options.phi {
        extra.push(("phi", format!("{phi:e}")));
    }
    extra.push(("config_hash", config.hash()));
    let mut out = Emitter::new(config)?;
    let mut report = Vec::new();
    write_fit_report(&mut report, &fit, &extra).expect("writing to memory");
    out.bytes("fit_report.txt", &report)?;
    Ok(out.finish(
        Status::Success,
        format!(
            "center {:.3} Hz, fwhm {:.4} Hz, area {:.4e} m², T_area {t_area:.2} K, T_linewidth {t_width:.2} K\n",
            fit.center, fit.fwhm, fit.area
        ),
    ))
}
