//! Thread-parallel objective evaluation.

use std::time::Instant;

use rayon::prelude::*;

use pulsesynth_core::optimizer::optimize_pulse_with;
use pulsesynth_core::{
    subsystem_infidelity, Clock, Evaluator, FourierParams, Objective, OptimizationRun, PulseSpec, Result,
    SampledPulse, SearchPlan, SpinSystem,
};

/// Subgroups are evaluated in parallel; the mean is summed in subgroup order,
/// so the value does not depend on the thread count.
pub fn par_evaluate_pulse(ev: &Evaluator, pulse: &SampledPulse) -> Result<f64> {
    let per: Vec<f64> =
        (0..ev.subgroup_count()).into_par_iter().map(|i| ev.subgroup_infidelity(i, pulse)).collect::<Result<_>>()?;
    subsystem_infidelity(&per)
}

pub fn par_evaluate(ev: &Evaluator, params: &FourierParams) -> Result<f64> {
    par_evaluate_pulse(ev, &ev.sample(params))
}

/// Monotonic clock measured from construction.
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for WallClock {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Search with wall-clock accounting and parallel subgroup evaluation.
pub fn optimize(system: &SpinSystem, objective: &Objective, spec: &PulseSpec, plan: &SearchPlan) -> Result<OptimizationRun> {
    optimize_pulse_with(system, objective, spec, plan, &WallClock::start(), par_evaluate)
}
