//! JSON run records.

use serde::{Deserialize, Serialize};

use pulsesynth_core::{OptimizationRun, StageRecord};

use crate::error::CliResult;

/// Input documents copied verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InlineConfigs {
    pub system: String,
    pub goal: String,
    pub pulse: String,
    /// Optimizer settings after command-line overrides.
    pub opt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub dt_us: f64,
    pub initial: f64,
    pub best: f64,
    pub evals: usize,
    pub wall_seconds: f64,
    /// `(evaluations so far, best so far)` after each simplex iteration.
    pub trace: Vec<(usize, f64)>,
}

impl From<&StageRecord> for StageTrace {
    fn from(s: &StageRecord) -> Self {
        Self {
            dt_us: s.dt * 1e6,
            initial: s.initial,
            best: s.best,
            evals: s.evals,
            wall_seconds: s.wall_seconds,
            trace: s.trace.iter().map(|t| (t.evals, t.best)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartTrace {
    pub seed: u64,
    pub best: f64,
    pub stages: Vec<StageTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalInfidelity {
    /// The optimized objective at the finest step.
    pub objective: f64,
    /// Same goals without robustness.
    pub plain: f64,
    /// Robust value when the objective was robust.
    pub robust: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool_version: String,
    pub seed: u64,
    pub configs: InlineConfigs,
    pub schedule_us: Vec<f64>,
    pub n_starts: usize,
    pub best_start: usize,
    pub evals: usize,
    pub starts: Vec<StartTrace>,
    pub final_infidelity: FinalInfidelity,
    pub target: f64,
    pub target_reached: bool,
    /// Files written next to the record.
    pub artifacts: Vec<String>,
    pub started_unix: f64,
    pub finished_unix: f64,
}

impl RunRecord {
    pub fn starts_from(run: &OptimizationRun) -> Vec<StartTrace> {
        run.starts
            .iter()
            .map(|s| StartTrace { seed: s.seed, best: s.best, stages: s.stages.iter().map(StageTrace::from).collect() })
            .collect()
    }

    pub fn to_json(&self) -> CliResult<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn unix_now() -> f64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}
