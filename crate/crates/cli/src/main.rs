//! `optospring` command line.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 only unstable
//! operating points, 4 fit failure, 1 anything else.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use optospring::sweep::{
    run_fit, run_response_sweep, run_simulate, run_spectrum, run_stability_map,
    run_temperature_sweep, ErrorClass, ExperimentConfig, FitOptions, Outcome, PowerKind, Status,
    SweepError,
};
use optospring::Execution;

#[derive(Debug, Parser)]
#[command(
    name = "optospring",
    version,
    about = "Optical-spring dynamics of a mirror in a detuned cavity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file, merged over the shipped defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Detuning(s), comma separated; replaces every detuning list.
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    phi: Vec<f64>,
    /// Incident power (W); replaces every power value.
    #[arg(long, global = true, conflicts_with = "power_cavity")]
    power_in: Option<f64>,
    /// Resonant intracavity power (W); replaces every power value.
    #[arg(long, global = true)]
    power_cavity: Option<f64>,
    /// Also write SVG charts.
    #[arg(long, global = true)]
    svg: bool,
    /// Simulation seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form displacement spectra for the configured series.
    Spectrum,
    /// Frequency shift and damping ratio over powers and detunings.
    ResponseSweep,
    /// Damping-ratio map over detuning and intracavity power.
    StabilityMap,
    /// Effective temperature against detuning.
    TemperatureSweep,
    /// Time-domain simulation compared with the closed form.
    Simulate,
    /// Lorentzian fit of a spectrum file.
    Fit {
        /// Spectrum file (freq_hz, psd_m2_per_hz).
        #[arg(long)]
        spectrum: PathBuf,
        /// Calibration table (phi, gain); needs --phi.
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
}

fn configure(common: &Common) -> Result<ExperimentConfig, SweepError> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::paper_defaults(),
    };
    config.override_phis(&common.phi)?;
    if let Some(p) = common.power_in {
        config.override_power(PowerKind::Incident, p)?;
    }
    if let Some(p) = common.power_cavity {
        config.override_power(PowerKind::Cavity, p)?;
    }
    if let Some(seed) = common.seed {
        config.sim.seed = seed;
    }
    if let Some(dir) = &common.out {
        config.output.dir = dir.clone();
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<Outcome, SweepError> {
    let config = configure(&cli.common)?;
    let exec = Execution::from_env();
    let svg = cli.common.svg;
    match &cli.command {
        Command::Spectrum => run_spectrum(&config, svg, exec),
        Command::ResponseSweep => run_response_sweep(&config, svg, exec),
        Command::StabilityMap => run_stability_map(&config, svg, exec),
        Command::TemperatureSweep => run_temperature_sweep(&config, svg, exec),
        Command::Simulate => run_simulate(&config, exec),
        Command::Fit {
            spectrum,
            calibration,
        } => run_fit(
            &config,
            &FitOptions {
                spectrum: spectrum.clone(),
                calibration: calibration.clone(),
                phi: cli.common.phi.first().copied(),
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            let _ = write!(stdout, "{}", outcome.summary);
            for f in &outcome.files {
                let _ = writeln!(stdout, "wrote {}", f.display());
            }
            match outcome.status {
                Status::Success => ExitCode::SUCCESS,
                Status::UnstableOnly => ExitCode::from(3),
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Input => 2,
                ErrorClass::Fit => 4,
                ErrorClass::Other => 1,
            })
        }
    }
}
