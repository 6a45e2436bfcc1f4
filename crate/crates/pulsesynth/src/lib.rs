//! File formats, thread-parallel evaluation and the `pulsesynth` command line
//! on top of `pulsesynth-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod parallel;
pub mod record;
pub mod shape;

pub use error::{CliError, CliResult};

/// Parses `LABEL:COUNT:BASE_HZ` blocks separated by commas.
pub fn parse_species_blocks(text: &str) -> CliResult<Vec<pulsesynth_core::SpeciesBlock>> {
    text.split(',')
        .map(|item| {
            let parts: Vec<&str> = item.trim().split(':').collect();
            let bad = || CliError::Invalid(format!("species block `{item}` is not LABEL:COUNT:BASE_HZ"));
            if parts.len() != 3 || parts[0].is_empty() {
                return Err(bad());
            }
            Ok(pulsesynth_core::SpeciesBlock {
                label: parts[0].to_string(),
                count: parts[1].parse().map_err(|_| bad())?,
                base_hz: parts[2].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}
