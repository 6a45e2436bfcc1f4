//! Spectrometer-style shape files.
//!
//! ```text
//! # pulsesynth shape
//! # points 4
//! # duration_us 100.000000
//! # max_amp_hz 10000.000000
//! 0.000000 0.000000
//! ...
//! ```
//!
//! Each data line holds the amplitude as a percentage of the amplitude
//! ceiling and the phase in degrees wrapped to `[0, 360)`, both printed with
//! six decimals.

use std::f64::consts::TAU;
use std::fmt::Write;

use pulsesynth_core::SampledPulse;

use crate::error::{invalid, CliResult};

pub const SHAPE_MAGIC: &str = "# pulsesynth shape";

fn wrapped_degrees(phase: f64) -> String {
    // +0.0 folds a negative zero away.
    let deg = phase.to_degrees().rem_euclid(360.0) + 0.0;
    let s = format!("{deg:.6}");
    if s == "360.000000" {
        "0.000000".into()
    } else {
        s
    }
}

/// Renders a pulse; `max_amp` is in rad/s.
pub fn write_shape(pulse: &SampledPulse, max_amp: f64) -> String {
    let mut out = String::new();
    writeln!(out, "{SHAPE_MAGIC}").unwrap();
    writeln!(out, "# points {}", pulse.n_steps()).unwrap();
    writeln!(out, "# duration_us {:.6}", pulse.duration() * 1e6).unwrap();
    writeln!(out, "# max_amp_hz {:.6}", max_amp / TAU).unwrap();
    for (a, p) in pulse.amp.iter().zip(&pulse.phase) {
        let pct = 100.0 * a / max_amp + 0.0;
        writeln!(out, "{pct:.6} {}", wrapped_degrees(*p)).unwrap();
    }
    out
}

/// Parses a shape file back into a pulse (phase in `[0, 2 pi)`) and the
/// amplitude ceiling in rad/s.
pub fn read_shape(text: &str) -> CliResult<(SampledPulse, f64)> {
    let mut points = None;
    let mut duration_us = None;
    let mut max_amp_hz = None;
    let mut amp = Vec::new();
    let mut phase = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            let (key, value) = (it.next(), it.next());
            let num = |v: Option<&str>| -> CliResult<f64> {
                v.and_then(|s| s.parse().ok()).ok_or_else(|| crate::error::CliError::Invalid(format!("line {}: bad header", no + 1)))
            };
            match key {
                Some("points") => points = Some(num(value)? as usize),
                Some("duration_us") => duration_us = Some(num(value)?),
                Some("max_amp_hz") => max_amp_hz = Some(num(value)?),
                _ => {}
            }
            continue;
        }
        let cols: Vec<f64> = line.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|_| {
            crate::error::CliError::Invalid(format!("line {}: expected two numbers", no + 1))
        })?;
        if cols.len() != 2 {
            return invalid(format!("line {}: expected two numbers", no + 1));
        }
        amp.push(cols[0]);
        phase.push(cols[1]);
    }
    let (Some(points), Some(duration_us), Some(max_amp_hz)) = (points, duration_us, max_amp_hz) else {
        return invalid("shape header needs points, duration_us and max_amp_hz");
    };
    if points != amp.len() || points == 0 {
        return invalid(format!("header says {points} points, found {}", amp.len()));
    }
    let max_amp = TAU * max_amp_hz;
    let amp = amp.iter().map(|pct| pct / 100.0 * max_amp).collect();
    let phase = phase.iter().map(|d: &f64| d.to_radians()).collect();
    let dt = duration_us * 1e-6 / points as f64;
    Ok((SampledPulse::new(amp, phase, dt)?, max_amp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn data_lines(s: &str) -> Vec<&str> {
        s.lines().filter(|l| !l.starts_with('#')).collect()
    }

    #[test]
    fn unit_conversion() {
        let max = TAU * 1e4;
        let p = SampledPulse::new(vec![0.0, max], vec![0.0, PI], 1e-6).unwrap();
        assert_eq!(data_lines(&write_shape(&p, max)), ["0.000000 0.000000", "100.000000 180.000000"]);
    }

    #[test]
    fn silent_and_wrap() {
        let s = write_shape(&SampledPulse::silent(4, 1e-6), 1.0);
        assert_eq!(data_lines(&s), ["0.000000 0.000000"; 4]);
        let p = SampledPulse::new(vec![0.0, 0.0, 0.0], vec![-PI / 2.0, -1e-12, 4.0 * PI], 1e-6).unwrap();
        assert_eq!(data_lines(&write_shape(&p, 1.0)), ["0.000000 270.000000", "0.000000 0.000000", "0.000000 0.000000"]);
    }

    #[test]
    fn header() {
        let s = write_shape(&SampledPulse::silent(4, 2.5e-6), TAU * 1e4);
        let head: Vec<&str> = s.lines().take(4).collect();
        assert_eq!(head, [SHAPE_MAGIC, "# points 4", "# duration_us 10.000000", "# max_amp_hz 10000.000000"]);
    }

    #[test]
    fn read_errors() {
        assert!(read_shape("# points 2\n# duration_us 1\n# max_amp_hz 1\n0 0\n").is_err());
        assert!(read_shape("# points 1\n# duration_us 1\n0 0\n").is_err());
        assert!(read_shape("# points 1\n# duration_us 1\n# max_amp_hz 1\n0 x\n").is_err());
    }
}
