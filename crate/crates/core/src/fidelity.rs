//! Infidelity objectives.
//!
//! The plain gate infidelity is `1 - |Tr(U_goal^dagger U)| / N`. The robust
//! variants take a weighted mean over three propagators whose amplitude (or
//! frequency offsets) are scaled by `1 - eps`, `1`, `1 + eps`. Several
//! subgroups are combined by an unweighted mean, robustness applied per
//! subgroup first.

use alloc::vec::Vec;

use crate::propagator::{overlaps, total_propagator, FastStepContext, Member};
use crate::pulse::{sample_pulse, FourierParams, PulseSpec, SampledPulse};
use crate::spin::{SizeCap, SpinSystem, Subgroup};
use crate::unitary::Unitary;
use crate::{Error, Result, C64};

pub use crate::propagator::Method;

pub const DEFAULT_EPSILON: f64 = 0.05;

/// Weights `(alpha_-, alpha_0, alpha_+)` of the three scaled infidelities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustWeights(pub [f64; 3]);

impl RobustWeights {
    pub fn new(w: [f64; 3]) -> Result<Self> {
        if let Some(&bad) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidWeight(bad));
        }
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::ZeroWeights);
        }
        Ok(Self(w))
    }
}

impl Default for RobustWeights {
    fn default() -> Self {
        Self([0.3, 0.4, 0.3])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Robustness {
    None,
    /// Pulse amplitude scaled by `1 -/+ eps`.
    Amplitude { eps: f64, weights: RobustWeights },
    /// Frequency offsets scaled by `1 -/+ eps`.
    Frequency { eps: f64, weights: RobustWeights },
}

impl Robustness {
    pub fn amplitude_default() -> Self {
        Robustness::Amplitude { eps: DEFAULT_EPSILON, weights: RobustWeights::default() }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Robustness::None => Ok(()),
            Robustness::Amplitude { eps, weights } | Robustness::Frequency { eps, weights } => {
                RobustWeights::new(weights.0)?;
                if !(0.0..1.0).contains(eps) {
                    return Err(Error::InvalidConfig(alloc::format!("eps = {eps} must lie in [0, 1)")));
                }
                Ok(())
            }
        }
    }
}

/// Goal unitary for one subgroup, in the subgroup's local spin order.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgroupGoal {
    pub subgroup: Subgroup,
    pub goal: Unitary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub goals: Vec<SubgroupGoal>,
    pub robustness: Robustness,
    pub method: Method,
    pub cap: SizeCap,
}

impl Objective {
    /// Plain fast-method objective over the given goals.
    pub fn new(goals: Vec<SubgroupGoal>) -> Self {
        Self { goals, robustness: Robustness::None, method: Method::Fast, cap: SizeCap::DEFAULT }
    }

    /// One goal over the whole system.
    pub fn whole_system(system: &SpinSystem, goal: Unitary) -> Self {
        Self::new(alloc::vec![SubgroupGoal { subgroup: Subgroup::all(system.n_spins()), goal }])
    }

    pub fn with_robustness(self, robustness: Robustness) -> Self {
        Self { robustness, ..self }
    }

    pub fn with_method(self, method: Method) -> Self {
        Self { method, ..self }
    }

    pub fn validate(&self, system: &SpinSystem) -> Result<()> {
        if self.goals.is_empty() {
            return Err(Error::EmptyAverage);
        }
        self.robustness.validate()?;
        for g in &self.goals {
            Subgroup::new(g.subgroup.indices().to_vec(), system.n_spins())?;
            self.cap.check(g.subgroup.len())?;
            let dim = 1usize << g.subgroup.len();
            if g.goal.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: g.goal.dim() });
            }
        }
        Ok(())
    }
}

/// `1 - |Tr(goal^dagger u)| / N`, clamped to `[0, 1]`.
pub fn gate_infidelity(u: &Unitary, goal: &Unitary) -> Result<f64> {
    Ok(infidelity_from_overlap(u.overlap_with(goal)?, goal.dim()))
}

fn infidelity_from_overlap(tr: C64, dim: usize) -> f64 {
    (1.0 - tr.norm() / dim as f64).clamp(0.0, 1.0)
}

/// Weighted mean of `(F_-, F, F_+)`.
pub fn robust_infidelity(triple: [f64; 3], weights: RobustWeights) -> Result<f64> {
    let w = RobustWeights::new(weights.0)?.0;
    Ok((w[0] * triple[0] + w[1] * triple[1] + w[2] * triple[2]) / (w[0] + w[1] + w[2]))
}

/// Unweighted mean of per-subgroup infidelities, summed in order.
pub fn subsystem_infidelity(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyAverage);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

struct Prepared {
    goal: Unitary,
    /// Restricted systems: one, or three for frequency robustness.
    systems: Vec<SpinSystem>,
    contexts: Vec<FastStepContext>,
}

/// Objective bound to a system and step length, with fast-step contexts for
/// every subgroup precomputed. Evaluation takes `&self` and allocates only
/// per-call scratch, so one evaluator can serve concurrent callers.
pub struct Evaluator {
    objective: Objective,
    spec: PulseSpec,
    parts: Vec<Prepared>,
}

impl Evaluator {
    pub fn new(objective: &Objective, system: &SpinSystem, spec: &PulseSpec) -> Result<Self> {
        objective.validate(system)?;
        spec.validate()?;
        let mut parts = Vec::with_capacity(objective.goals.len());
        for g in &objective.goals {
            let local = system.restrict(&g.subgroup)?;
            let systems = match objective.robustness {
                Robustness::Frequency { eps, .. } => {
                    alloc::vec![local.with_scaled_offsets(1.0 - eps), local.clone(), local.with_scaled_offsets(1.0 + eps)]
                }
                _ => alloc::vec![local],
            };
            let contexts = match objective.method {
                Method::Fast => systems
                    .iter()
                    .map(|s| FastStepContext::new(s, spec.dt, objective.cap))
                    .collect::<Result<Vec<_>>>()?,
                Method::Exact => Vec::new(),
            };
            parts.push(Prepared { goal: g.goal.clone(), systems, contexts });
        }
        Ok(Self { objective: objective.clone(), spec: *spec, parts })
    }

    pub fn spec(&self) -> &PulseSpec {
        &self.spec
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn subgroup_count(&self) -> usize {
        self.parts.len()
    }

    pub fn sample(&self, params: &FourierParams) -> SampledPulse {
        sample_pulse(params, &self.spec)
    }

    /// Infidelity of subgroup `i` (robust when the objective asks for it).
    pub fn subgroup_infidelity(&self, i: usize, pulse: &SampledPulse) -> Result<f64> {
        let part = &self.parts[i];
        let dim = part.goal.dim();
        let (scales, weights) = match self.objective.robustness {
            Robustness::None => (None, None),
            Robustness::Amplitude { eps, weights } => (Some([1.0 - eps, 1.0, 1.0 + eps]), Some(weights)),
            Robustness::Frequency { weights, .. } => (None, Some(weights)),
        };

        let traces: Vec<C64> = match self.objective.method {
            Method::Fast => {
                let members: Vec<Member<'_>> = match scales {
                    Some(s) => s.iter().map(|&amp_scale| Member { ctx: &part.contexts[0], amp_scale }).collect(),
                    None => part.contexts.iter().map(|ctx| Member { ctx, amp_scale: 1.0 }).collect(),
                };
                overlaps(&members, pulse, &part.goal)?
            }
            Method::Exact => {
                let mut out = Vec::with_capacity(3);
                match scales {
                    Some(s) => {
                        for k in s {
                            let u = total_propagator(&part.systems[0], &pulse.scaled(k), Method::Exact, self.objective.cap)?;
                            out.push(u.overlap_with(&part.goal)?);
                        }
                    }
                    None => {
                        for sys in &part.systems {
                            let u = total_propagator(sys, pulse, Method::Exact, self.objective.cap)?;
                            out.push(u.overlap_with(&part.goal)?);
                        }
                    }
                }
                out
            }
        };

        let f: Vec<f64> = traces.iter().map(|&t| infidelity_from_overlap(t, dim)).collect();
        match weights {
            None => Ok(f[0]),
            Some(w) => robust_infidelity([f[0], f[1], f[2]], w),
        }
    }

    pub fn evaluate_pulse(&self, pulse: &SampledPulse) -> Result<f64> {
        let per: Vec<f64> =
            (0..self.parts.len()).map(|i| self.subgroup_infidelity(i, pulse)).collect::<Result<_>>()?;
        subsystem_infidelity(&per)
    }

    pub fn evaluate(&self, params: &FourierParams) -> Result<f64> {
        self.evaluate_pulse(&self.sample(params))
    }
}

/// Samples the pulse once and returns the (robust, subgroup-averaged)
/// infidelity.
pub fn evaluate(objective: &Objective, system: &SpinSystem, params: &FourierParams, spec: &PulseSpec) -> Result<f64> {
    Evaluator::new(objective, system, spec)?.evaluate(params)
}
