//! Trajectory files.
//!
//! Text: `#`-prefixed header lines, then a `time_s,x_m` column header and one
//! comma-separated row per sample.
//!
//! Raw: a 16-byte header followed by the samples as little-endian IEEE-754
//! binary64, in time order.
//!
//! | offset | size | content                          |
//! |--------|------|----------------------------------|
//! | 0      | 4    | ASCII `OSPR`                     |
//! | 4      | 4    | format version, u32 LE (= 1)     |
//! | 8      | 8    | sample spacing `dt` in s, f64 LE |
//! | 16     | 8·n  | displacement samples in m, f64 LE|

use std::io::{BufRead, Read, Write};

use super::{SimError, Trajectory};

pub const RAW_MAGIC: [u8; 4] = *b"OSPR";
pub const RAW_VERSION: u32 = 1;
pub const RAW_HEADER_LEN: usize = 16;

pub fn write_text<W: Write>(trajectory: &Trajectory, mut out: W) -> Result<(), SimError> {
    let op = &trajectory.op;
    writeln!(out, "# optospring trajectory")?;
    writeln!(out, "# units: time_s [s], x_m [m]")?;
    writeln!(out, "# dt_s = {:e}", trajectory.dt)?;
    writeln!(out, "# phi = {:e}", op.phi)?;
    writeln!(out, "# p_res_w = {:e}", op.p_res)?;
    writeln!(out, "# temperature_k = {:e}", op.temperature_bath)?;
    writeln!(out, "# seed = {}", trajectory.config.seed)?;
    writeln!(out, "time_s,x_m")?;
    for (i, x) in trajectory.samples.iter().enumerate() {
        writeln!(out, "{:e},{:e}", trajectory.time(i), x)?;
    }
    Ok(())
}

/// Reads a text trajectory back as `(times, samples)`.
pub fn read_text<R: BufRead>(input: R) -> Result<(Vec<f64>, Vec<f64>), SimError> {
    let mut times = Vec::new();
    let mut samples = Vec::new();
    let mut seen_header = false;
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            if line != "time_s,x_m" {
                return Err(SimError::Format(format!(
                    "line {}: expected column header `time_s,x_m`",
                    lineno + 1
                )));
            }
            seen_header = true;
            continue;
        }
        let mut cols = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64, SimError> {
            s.and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| SimError::Format(format!("line {}: bad number", lineno + 1)))
        };
        times.push(parse(cols.next())?);
        samples.push(parse(cols.next())?);
    }
    Ok((times, samples))
}

pub fn write_raw<W: Write>(trajectory: &Trajectory, mut out: W) -> Result<(), SimError> {
    out.write_all(&RAW_MAGIC)?;
    out.write_all(&RAW_VERSION.to_le_bytes())?;
    out.write_all(&trajectory.dt.to_le_bytes())?;
    for x in &trajectory.samples {
        out.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a raw trajectory as `(dt, samples)`.
pub fn read_raw<R: Read>(mut input: R) -> Result<(f64, Vec<f64>), SimError> {
    let mut header = [0u8; RAW_HEADER_LEN];
    input.read_exact(&mut header)?;
    if header[..4] != RAW_MAGIC {
        return Err(SimError::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != RAW_VERSION {
        return Err(SimError::Format(format!("unsupported version {version}")));
    }
    let dt = f64::from_le_bytes(header[8..16].try_into().unwrap());
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() % 8 != 0 {
        return Err(SimError::Format("truncated sample".into()));
    }
    let samples = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((dt, samples))
}
