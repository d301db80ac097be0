//! Text formats for spectra, fit reports and calibration tables.
//!
//! Spectrum file:
//!
//! ```text
//! # freq_units=Hz
//! # psd_units=m^2/Hz
//! # provenance=closed-form
//! # resolution_bw_hz=1.0e0
//! # <key>=<value>            (any extra metadata)
//! freq_hz,psd_m2_per_hz
//! 8.14e5,1.2e-30
//! ...
//! ```
//!
//! The reader accepts comma or whitespace separated columns, ignores `#`
//! lines it does not know, treats a missing provenance as `ingested` and a
//! missing resolution bandwidth as the grid spacing.
//!
//! Fit report: one `key=value` per line with keys `center_hz`, `fwhm_hz`,
//! `area_m2`, `background_m2_per_hz`, `goodness`, plus any extras.
//!
//! Calibration file: `# drive_amplitude_m=..`, `# drive_freq_hz=..`, then a
//! `phi,gain` header and one row per entry.

use std::io::{BufRead, Write};

use super::{CalibrationTable, LorentzianFit, NoiseSpectrum, Provenance, SpectralError};

fn parse_err(line: usize, message: impl Into<String>) -> SpectralError {
    SpectralError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(line: usize, what: &str, text: &str) -> Result<f64, SpectralError> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("{what}: `{}` is not a number", text.trim())))
}

fn split_row(row: &str) -> Vec<&str> {
    row.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect()
}

/// `# key=value` header line, if it is one.
fn header_pair(row: &str) -> Option<(&str, &str)> {
    let body = row.strip_prefix('#')?.trim();
    let (k, v) = body.split_once('=')?;
    Some((k.trim(), v.trim()))
}

pub fn write_spectrum<W: Write>(
    mut w: W,
    spectrum: &NoiseSpectrum,
    extra: &[(&str, String)],
) -> std::io::Result<()> {
    writeln!(w, "# freq_units=Hz")?;
    writeln!(w, "# psd_units=m^2/Hz")?;
    writeln!(w, "# provenance={}", spectrum.provenance())?;
    writeln!(w, "# resolution_bw_hz={:e}", spectrum.resolution_bw())?;
    for (k, v) in extra {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(w, "freq_hz,psd_m2_per_hz")?;
    for (f, p) in spectrum.freqs().iter().zip(spectrum.psd()) {
        writeln!(w, "{f:e},{p:e}")?;
    }
    Ok(())
}

pub fn read_spectrum<R: BufRead>(r: R) -> Result<NoiseSpectrum, SpectralError> {
    let mut provenance = Provenance::Ingested;
    let mut rbw = None;
    let mut freqs = Vec::new();
    let mut psd = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let n = i + 1;
        let line = line?;
        let row = line.trim();
        if row.is_empty() {
            continue;
        }
        if row.starts_with('#') {
            match header_pair(row) {
                Some(("provenance", v)) => {
                    provenance = v
                        .parse()
                        .map_err(|e: SpectralError| parse_err(n, e.to_string()))?
                }
                Some(("resolution_bw_hz", v)) => rbw = Some(parse_f64(n, "resolution_bw_hz", v)?),
                _ => {}
            }
            continue;
        }
        let cols = split_row(row);
        if freqs.is_empty() && cols.first().is_some_and(|c| c.parse::<f64>().is_err()) {
            // column header
            continue;
        }
        if cols.len() != 2 {
            return Err(parse_err(
                n,
                format!("expected 2 columns, found {}", cols.len()),
            ));
        }
        let f = parse_f64(n, "freq_hz", cols[0])?;
        let p = parse_f64(n, "psd_m2_per_hz", cols[1])?;
        if !(p >= 0.0) || !p.is_finite() {
            return Err(parse_err(n, format!("psd {p} is negative or not finite")));
        }
        if let Some(prev) = freqs.last() {
            if f <= *prev {
                return Err(parse_err(
                    n,
                    format!("frequency {f} not above previous {prev}"),
                ));
            }
        }
        freqs.push(f);
        psd.push(p);
    }
    if freqs.len() < 2 {
        return Err(SpectralError::InvalidSpectrum(format!(
            "{} data rows, need at least 2",
            freqs.len()
        )));
    }
    let spacing = (freqs[freqs.len() - 1] - freqs[0]) / (freqs.len() - 1) as f64;
    let rbw = rbw.unwrap_or(spacing);
    NoiseSpectrum::new(freqs, psd, provenance, rbw)
}

pub fn write_fit_report<W: Write>(
    mut w: W,
    fit: &LorentzianFit,
    extra: &[(&str, String)],
) -> std::io::Result<()> {
    writeln!(w, "center_hz={:e}", fit.center)?;
    writeln!(w, "fwhm_hz={:e}", fit.fwhm)?;
    writeln!(w, "area_m2={:e}", fit.area)?;
    writeln!(w, "background_m2_per_hz={:e}", fit.background)?;
    writeln!(w, "goodness={:e}", fit.goodness)?;
    for (k, v) in extra {
        writeln!(w, "{k}={v}")?;
    }
    Ok(())
}

/// Returns the fit and all other `key=value` pairs in file order.
pub fn read_fit_report<R: BufRead>(
    r: R,
) -> Result<(LorentzianFit, Vec<(String, String)>), SpectralError> {
    let mut fields = [None; 5];
    const KEYS: [&str; 5] = [
        "center_hz",
        "fwhm_hz",
        "area_m2",
        "background_m2_per_hz",
        "goodness",
    ];
    let mut extra = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let n = i + 1;
        let line = line?;
        let row = line.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        let (k, v) = row
            .split_once('=')
            .ok_or_else(|| parse_err(n, "expected key=value"))?;
        let (k, v) = (k.trim(), v.trim());
        match KEYS.iter().position(|key| *key == k) {
            Some(j) => fields[j] = Some(parse_f64(n, k, v)?),
            None => extra.push((k.to_string(), v.to_string())),
        }
    }
    let get = |j: usize| {
        fields[j].ok_or_else(|| SpectralError::FitFailed(format!("fit report lacks `{}`", KEYS[j])))
    };
    Ok((
        LorentzianFit {
            center: get(0)?,
            fwhm: get(1)?,
            area: get(2)?,
            background: get(3)?,
            goodness: get(4)?,
        },
        extra,
    ))
}

pub fn write_calibration<W: Write>(mut w: W, table: &CalibrationTable) -> std::io::Result<()> {
    writeln!(w, "# drive_amplitude_m={:e}", table.drive_amplitude_m)?;
    writeln!(w, "# drive_freq_hz={:e}", table.drive_freq)?;
    writeln!(w, "phi,gain")?;
    for (phi, g) in table.entries() {
        writeln!(w, "{phi:e},{g:e}")?;
    }
    Ok(())
}

/// Missing drive metadata falls back to the calibration defaults.
pub fn read_calibration<R: BufRead>(r: R) -> Result<CalibrationTable, SpectralError> {
    let mut amplitude = super::DEFAULT_DRIVE_AMPLITUDE;
    let mut freq = super::DEFAULT_DRIVE_FREQ;
    let mut entries = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let n = i + 1;
        let line = line?;
        let row = line.trim();
        if row.is_empty() {
            continue;
        }
        if row.starts_with('#') {
            match header_pair(row) {
                Some(("drive_amplitude_m", v)) => amplitude = parse_f64(n, "drive_amplitude_m", v)?,
                Some(("drive_freq_hz", v)) => freq = parse_f64(n, "drive_freq_hz", v)?,
                _ => {}
            }
            continue;
        }
        let cols = split_row(row);
        if entries.is_empty() && cols.first().is_some_and(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        if cols.len() != 2 {
            return Err(parse_err(
                n,
                format!("expected 2 columns, found {}", cols.len()),
            ));
        }
        entries.push((
            parse_f64(n, "phi", cols[0])?,
            parse_f64(n, "gain", cols[1])?,
        ));
    }
    CalibrationTable::new(entries, amplitude, freq)
}
