use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pulsesynth::commands::{
    cmd_export_shape, cmd_lattice_gen, cmd_optimize, cmd_simulate, cmd_verify, format_columns, format_simulate,
    sweep_grid, MethodChoice, OptOverrides, OptimizeInputs, Problem, PulseSource, SweepKind, EXIT_ERROR,
};
use pulsesynth::config::{MethodName, PulseConfig, RobustKind};
use pulsesynth::error::{read_text, write_text, CliError};
use pulsesynth::{parse_species_blocks, CliResult};
use pulsesynth_core::{SizeCap, SpeciesPlan};

#[derive(Parser)]
#[command(name = "pulsesynth", version, about = "Shaped-pulse synthesis for coupled spin systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ProblemFiles {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    goal: PathBuf,
    #[arg(long)]
    pulse: PathBuf,
}

#[derive(Args)]
struct PulseInput {
    /// Sine-series parameter document.
    #[arg(long, conflicts_with = "shape", required_unless_present = "shape")]
    params: Option<PathBuf>,
    /// Shape file.
    #[arg(long)]
    shape: Option<PathBuf>,
}

impl PulseInput {
    fn load(&self) -> CliResult<PulseSource> {
        match (&self.params, &self.shape) {
            (Some(p), _) => PulseSource::params_text(&read_text(p)?),
            (None, Some(s)) => PulseSource::shape_text(&read_text(s)?),
            (None, None) => unreachable!("clap requires one of them"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a pulse and write record.json, params.toml and pulse.shape.
    Optimize {
        #[command(flatten)]
        files: ProblemFiles,
        #[arg(long)]
        opt: PathBuf,
        #[arg(long, default_value = "pulsesynth-out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Step lengths in microseconds, coarse to fine.
        #[arg(long, value_delimiter = ',')]
        schedule_us: Option<Vec<f64>>,
        #[arg(long, value_enum)]
        method: Option<MethodName>,
        #[arg(long)]
        n_starts: Option<usize>,
        #[arg(long)]
        size_cap: Option<usize>,
        #[arg(long, value_enum)]
        robust: Option<RobustKind>,
        #[arg(long)]
        eps: Option<f64>,
        /// Three comma-separated weights.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long)]
        max_evals: Option<usize>,
        #[arg(long)]
        target: Option<f64>,
    },
    /// Report plain infidelity of a pulse.
    Simulate {
        #[command(flatten)]
        files: ProblemFiles,
        #[command(flatten)]
        input: PulseInput,
        #[arg(long, value_enum, default_value = "fast")]
        method: MethodChoice,
        #[arg(long, default_value_t = SizeCap::DEFAULT.0)]
        size_cap: usize,
    },
    /// Sweep amplitude scale, offset scale or frequency shift; prints two columns.
    Verify {
        #[command(flatten)]
        files: ProblemFiles,
        #[command(flatten)]
        input: PulseInput,
        #[arg(long, value_enum)]
        sweep: SweepKind,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[arg(long, value_enum, default_value = "fast")]
        method: MethodName,
        #[arg(long, default_value_t = SizeCap::DEFAULT.0)]
        size_cap: usize,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a shape file for a parameter document.
    ExportShape {
        #[arg(long)]
        pulse: PathBuf,
        #[command(flatten)]
        input: PulseInput,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a square-lattice system config.
    LatticeGen {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long, default_value_t = 50.0)]
        coupling_hz: f64,
        /// Base frequency of the single channel.
        #[arg(long, default_value_t = 700e6)]
        base_hz: f64,
        #[arg(long, default_value_t = 2000.0)]
        spacing_hz: f64,
        /// Multi-channel plan as LABEL:COUNT:BASE_HZ,... (replaces --base-hz).
        #[arg(long)]
        blocks: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn problem(files: &ProblemFiles) -> CliResult<Problem> {
    Problem::parse(&read_text(&files.system)?, &read_text(&files.goal)?, &read_text(&files.pulse)?)
}

fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Optimize {
            files,
            opt,
            out,
            seed,
            schedule_us,
            method,
            n_starts,
            size_cap,
            robust,
            eps,
            weights,
            max_evals,
            target,
        } => {
            let (system, goal, pulse, opt) =
                (read_text(&files.system)?, read_text(&files.goal)?, read_text(&files.pulse)?, read_text(&opt)?);
            let overrides = OptOverrides {
                seed,
                schedule_us,
                method,
                n_starts,
                size_cap,
                robust,
                eps,
                weights: match weights {
                    None => None,
                    Some(w) => Some(<[f64; 3]>::try_from(w.as_slice()).map_err(|_| CliError::Invalid("--weights takes three values".into()))?),
                },
                max_evals,
                target,
            };
            let inputs = OptimizeInputs { system: &system, goal: &goal, pulse: &pulse, opt: &opt };
            let outcome = cmd_optimize(&inputs, &overrides, &out)?;
            let f = &outcome.record.final_infidelity;
            println!("objective {:.9e}", f.objective);
            println!("plain {:.9e}", f.plain);
            if let Some(r) = f.robust {
                println!("robust {r:.9e}");
            }
            println!("evals {}", outcome.record.evals);
            println!("target_reached {}", outcome.record.target_reached);
            println!("out {}", out.display());
            Ok(outcome.exit_code)
        }
        Command::Simulate { files, input, method, size_cap } => {
            let rows = cmd_simulate(&problem(&files)?, &input.load()?, method, SizeCap(size_cap))?;
            print!("{}", format_simulate(&rows));
            Ok(0)
        }
        Command::Verify { files, input, sweep, from, to, points, method, size_cap, out } => {
            let grid = sweep_grid(from, to, points)?;
            let rows = cmd_verify(&problem(&files)?, &input.load()?, method.into(), SizeCap(size_cap), sweep, &grid)?;
            emit(&format_columns(&rows), out.as_deref())?;
            Ok(0)
        }
        Command::ExportShape { pulse, input, out } => {
            let text = cmd_export_shape(&PulseConfig::parse(&read_text(&pulse)?)?, &input.load()?)?;
            emit(&text, out.as_deref())?;
            Ok(0)
        }
        Command::LatticeGen { rows, cols, coupling_hz, base_hz, spacing_hz, blocks, out } => {
            let plan = match blocks {
                Some(b) => SpeciesPlan::Blocks(parse_species_blocks(&b)?),
                None => SpeciesPlan::Single { base_hz },
            };
            emit(&cmd_lattice_gen(rows, cols, coupling_hz, spacing_hz, plan)?, out.as_deref())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
