//! Shaped-pulse synthesis for coupled spin-1/2 systems.
//!
//! A pulse is described by two short sine series, one for the amplitude
//! envelope and one for the phase. The series coefficients are searched with a
//! derivative-free simplex method while the gate infidelity is evaluated with a
//! split-operator propagator whose only non-diagonal factor is the q-fold
//! Hadamard tensor, applied through a Walsh-Hadamard butterfly.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line front end and thread-parallel evaluation live in the `pulsesynth`
//! crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod fidelity;
pub mod goals;
pub mod hadamard;
pub mod optimizer;
pub mod propagator;
pub mod pulse;
pub mod spin;
pub mod unitary;

pub use error::{Error, Result};
pub use fidelity::{
    gate_infidelity, robust_infidelity, subsystem_infidelity, Evaluator, Method, Objective,
    Robustness, RobustWeights, SubgroupGoal,
};
pub use goals::{Axis, RotationGoal};
pub use optimizer::{
    AnnealSchedule, Clock, NelderMeadResult, OptimizationRun, SearchPlan, SimplexConfig,
    StageRecord, StartRecord, StopReason, TracePoint,
};
pub use propagator::FastStepContext;
pub use pulse::{FourierParams, PulseSpec, SampledPulse};
pub use spin::{SizeCap, SpeciesBlock, SpeciesPlan, SpinSystem, Subgroup};
pub use unitary::Unitary;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

pub(crate) const TAU: f64 = core::f64::consts::TAU;
