//! Subcommand implementations. Each takes document text rather than paths so
//! it can be driven directly from tests; `main` does the file handling.

use std::path::{Path, PathBuf};

use pulsesynth_core::pulse::sample_pulse;
use pulsesynth_core::spin::{LatticeSpec, SpeciesPlan};
use pulsesynth_core::{gate_infidelity, Evaluator, FourierParams, Method, Objective, PulseSpec, Robustness, SampledPulse, SizeCap, SpinSystem};

use crate::config::{GoalConfig, MethodName, OptConfig, ParamsDoc, PulseConfig, RobustKind, SystemConfig};
use crate::error::{invalid, write_text, CliResult};
use crate::parallel::{optimize, par_evaluate_pulse};
use crate::record::{FinalInfidelity, InlineConfigs, RunRecord};
use crate::shape::{read_shape, write_shape};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_TARGET_MISSED: i32 = 2;

pub const RECORD_FILE: &str = "record.json";
pub const PARAMS_FILE: &str = "params.toml";
pub const SHAPE_FILE: &str = "pulse.shape";

/// Parsed system, goal and pulse documents.
pub struct Problem {
    pub system: SpinSystem,
    pub goal: GoalConfig,
    pub pulse: PulseConfig,
    pub spec: PulseSpec,
}

impl Problem {
    pub fn parse(system: &str, goal: &str, pulse: &str) -> CliResult<Self> {
        let pulse = PulseConfig::parse(pulse)?;
        Ok(Self {
            system: SystemConfig::parse(system)?.to_system()?,
            goal: GoalConfig::parse(goal)?,
            spec: pulse.to_spec()?,
            pulse,
        })
    }

    /// Plain objective over the configured goals.
    pub fn plain_objective(&self, method: Method, cap: SizeCap) -> CliResult<Objective> {
        let goals = self.goal.goals(&self.system, self.spec.duration, cap)?;
        Ok(Objective { goals, robustness: Robustness::None, method, cap })
    }
}

/// Command-line settings that override the optimizer document.
#[derive(Debug, Clone, Default)]
pub struct OptOverrides {
    pub seed: Option<u64>,
    pub schedule_us: Option<Vec<f64>>,
    pub method: Option<MethodName>,
    pub n_starts: Option<usize>,
    pub size_cap: Option<usize>,
    pub robust: Option<RobustKind>,
    pub eps: Option<f64>,
    pub weights: Option<[f64; 3]>,
    pub max_evals: Option<usize>,
    pub target: Option<f64>,
}

impl OptOverrides {
    pub fn apply(&self, mut o: OptConfig) -> OptConfig {
        if let Some(v) = self.seed {
            o.seed = v;
        }
        if let Some(v) = &self.schedule_us {
            o.schedule_us = v.clone();
        }
        if let Some(v) = self.method {
            o.method = v;
        }
        if let Some(v) = self.n_starts {
            o.n_starts = v;
        }
        if let Some(v) = self.size_cap {
            o.size_cap = v;
        }
        if let Some(v) = self.robust {
            o.robustness.kind = v;
        }
        if let Some(v) = self.eps {
            o.robustness.eps = v;
        }
        if let Some(v) = self.weights {
            o.robustness.weights = v;
        }
        if let Some(v) = self.max_evals {
            o.max_evals = v;
        }
        if let Some(v) = self.target {
            o.target = v;
        }
        o
    }
}

pub struct OptimizeInputs<'a> {
    pub system: &'a str,
    pub goal: &'a str,
    pub pulse: &'a str,
    pub opt: &'a str,
}

pub struct OptimizeOutcome {
    pub record: RunRecord,
    pub params: FourierParams,
    pub exit_code: i32,
}

/// Runs the search and writes the record, the best parameters and the shape
/// file into `out_dir`. The record is written whether or not the target was
/// reached.
pub fn cmd_optimize(inputs: &OptimizeInputs<'_>, overrides: &OptOverrides, out_dir: &Path) -> CliResult<OptimizeOutcome> {
    let started_unix = crate::record::unix_now();
    let problem = Problem::parse(inputs.system, inputs.goal, inputs.pulse)?;
    let opt = overrides.apply(OptConfig::parse(inputs.opt)?);
    let objective = problem.goal.objective(&problem.system, problem.spec.duration, &opt)?;
    let plan = opt.plan(&problem.pulse)?;
    let run = optimize(&problem.system, &objective, &problem.spec, &plan)?;

    let finest = problem.spec.with_dt(*plan.schedule.steps().last().expect("schedule is non-empty"))?;
    let pulse = sample_pulse(&run.best_params, &finest);
    let plain_obj = Objective { robustness: Robustness::None, ..objective.clone() };
    let plain = par_evaluate_pulse(&Evaluator::new(&plain_obj, &problem.system, &finest)?, &pulse)?;
    let robust = match objective.robustness {
        Robustness::None => None,
        _ => Some(run.best),
    };

    std::fs::create_dir_all(out_dir).map_err(|source| crate::error::CliError::Io { path: out_dir.into(), source })?;
    let params_path = out_dir.join(PARAMS_FILE);
    let shape_path = out_dir.join(SHAPE_FILE);
    write_text(&params_path, &ParamsDoc::from_params(&run.best_params).to_toml()?)?;
    write_text(&shape_path, &write_shape(&pulse, problem.spec.max_amp))?;

    let target_reached = run.target_reached();
    let record = RunRecord {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: opt.seed,
        configs: InlineConfigs {
            system: inputs.system.into(),
            goal: inputs.goal.into(),
            pulse: inputs.pulse.into(),
            opt: opt.to_toml()?,
        },
        schedule_us: opt.schedule_us.clone(),
        n_starts: opt.n_starts,
        best_start: run.best_start,
        evals: run.evals,
        starts: RunRecord::starts_from(&run),
        final_infidelity: FinalInfidelity { objective: run.best, plain, robust },
        target: opt.target,
        target_reached,
        artifacts: vec![PARAMS_FILE.into(), SHAPE_FILE.into()],
        started_unix,
        finished_unix: crate::record::unix_now(),
    };
    write_text(&out_dir.join(RECORD_FILE), &record.to_json()?)?;
    Ok(OptimizeOutcome {
        record,
        params: run.best_params,
        exit_code: if target_reached { EXIT_OK } else { EXIT_TARGET_MISSED },
    })
}

/// A pulse given as sine-series parameters or as a shape file.
pub enum PulseSource {
    Params(FourierParams),
    Shape(SampledPulse),
}

impl PulseSource {
    pub fn params_text(text: &str) -> CliResult<Self> {
        Ok(Self::Params(ParamsDoc::parse(text)?.to_params()))
    }

    pub fn shape_text(text: &str) -> CliResult<Self> {
        Ok(Self::Shape(read_shape(text)?.0))
    }

    /// Sampled pulse and the matching spec (a shape file fixes its own step).
    pub fn resolve(&self, spec: &PulseSpec) -> CliResult<(SampledPulse, PulseSpec)> {
        match self {
            PulseSource::Params(p) => Ok((sample_pulse(p, spec), *spec)),
            PulseSource::Shape(s) => {
                if (s.duration() - spec.duration).abs() > 1e-9 * spec.duration {
                    return invalid(format!(
                        "shape lasts {} us but the pulse config says {} us",
                        s.duration() * 1e6,
                        spec.duration * 1e6
                    ));
                }
                Ok((s.clone(), spec.with_dt(s.dt)?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodChoice {
    Fast,
    Exact,
    Both,
}

impl MethodChoice {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodChoice::Fast => vec![Method::Fast],
            MethodChoice::Exact => vec![Method::Exact],
            MethodChoice::Both => vec![Method::Fast, Method::Exact],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateRow {
    pub method: Method,
    /// Plain infidelity over the configured goals (subgroup mean).
    pub objective: f64,
    /// Plain infidelity of the whole-system propagator, when subgroups are
    /// configured and the system fits under the size cap.
    pub whole_system: Option<f64>,
}

pub fn cmd_simulate(problem: &Problem, source: &PulseSource, choice: MethodChoice, cap: SizeCap) -> CliResult<Vec<SimulateRow>> {
    let (pulse, spec) = source.resolve(&problem.spec)?;
    let mut rows = Vec::new();
    for method in choice.methods() {
        let objective = problem.plain_objective(method, cap)?;
        let value = par_evaluate_pulse(&Evaluator::new(&objective, &problem.system, &spec)?, &pulse)?;
        let whole_system = if problem.goal.has_subgroups() && cap.check(problem.system.n_spins()).is_ok() {
            let goal = problem.goal.whole_system_goal(&problem.system, spec.duration, cap)?;
            let u = pulsesynth_core::propagator::total_propagator(&problem.system, &pulse, method, cap)?;
            Some(gate_infidelity(&u, &goal)?)
        } else {
            None
        };
        rows.push(SimulateRow { method, objective: value, whole_system });
    }
    Ok(rows)
}

pub fn format_simulate(rows: &[SimulateRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let name = match r.method {
            Method::Fast => "fast",
            Method::Exact => "exact",
        };
        out.push_str(&format!("{name} objective {:.9e}\n", r.objective));
        if let Some(w) = r.whole_system {
            out.push_str(&format!("{name} whole_system {w:.9e}\n"));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepKind {
    /// Pulse amplitude multiplied by the swept value.
    AmplitudeScale,
    /// Frequency offsets multiplied by the swept value.
    FrequencyScale,
    /// Every spin frequency shifted by the swept value in Hz.
    FrequencyShift,
}

/// Evenly spaced grid including both ends.
pub fn sweep_grid(from: f64, to: f64, points: usize) -> CliResult<Vec<f64>> {
    match points {
        0 => invalid("a sweep needs at least one point"),
        1 => Ok(vec![from]),
        n => Ok((0..n).map(|k| from + (to - from) * k as f64 / (n - 1) as f64).collect()),
    }
}

/// Plain infidelity against the nominal goals while the pulse or the system
/// is perturbed.
pub fn cmd_verify(
    problem: &Problem,
    source: &PulseSource,
    method: Method,
    cap: SizeCap,
    sweep: SweepKind,
    values: &[f64],
) -> CliResult<Vec<(f64, f64)>> {
    let (pulse, spec) = source.resolve(&problem.spec)?;
    let objective = problem.plain_objective(method, cap)?;
    let nominal = match sweep {
        SweepKind::AmplitudeScale => Some(Evaluator::new(&objective, &problem.system, &spec)?),
        _ => None,
    };
    values
        .iter()
        .map(|&x| {
            let f = match sweep {
                SweepKind::AmplitudeScale => par_evaluate_pulse(nominal.as_ref().expect("built above"), &pulse.scaled(x))?,
                SweepKind::FrequencyScale => {
                    let sys = problem.system.with_scaled_offsets(x);
                    par_evaluate_pulse(&Evaluator::new(&objective, &sys, &spec)?, &pulse)?
                }
                SweepKind::FrequencyShift => {
                    let sys = problem.system.with_shifted_frequencies(x);
                    par_evaluate_pulse(&Evaluator::new(&objective, &sys, &spec)?, &pulse)?
                }
            };
            Ok((x, f))
        })
        .collect()
}

/// Two-column plot data.
pub fn format_columns(rows: &[(f64, f64)]) -> String {
    rows.iter().map(|(x, y)| format!("{x:.9} {y:.9e}\n")).collect()
}

pub fn cmd_export_shape(pulse: &PulseConfig, source: &PulseSource) -> CliResult<String> {
    let spec = pulse.to_spec()?;
    let (sampled, _) = source.resolve(&spec)?;
    Ok(write_shape(&sampled, spec.max_amp))
}

/// Lattice system document; `plan` and spacing follow [`LatticeSpec`].
pub fn cmd_lattice_gen(rows: usize, cols: usize, coupling_hz: f64, spacing_hz: f64, plan: SpeciesPlan) -> CliResult<String> {
    let spec = LatticeSpec { rows, cols, coupling_hz, spacing_hz, plan };
    SystemConfig::from_lattice(&spec.layout()?, coupling_hz).to_toml()
}

pub fn default_out_dir() -> PathBuf {
    PathBuf::from("pulsesynth-out")
}
