//! Nelder-Mead simplex search, random initial guesses and the step-length
//! annealing driver.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fidelity::{Evaluator, Objective};
use crate::pulse::{step_count, FourierParams, PulseSpec, SineTerm};
use crate::spin::SpinSystem;
use crate::{Error, Result, TAU};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexConfig {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Objective invocations allowed per simplex run.
    pub max_evals: usize,
    /// Stop when `f_worst - f_best` falls below this.
    pub f_tol: f64,
    /// Stop as soon as a value below this is seen.
    pub target: f64,
    /// Initial vertex offset, relative to `max(|x_i|, scale_i)`.
    pub initial_step: f64,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            max_evals: 2000,
            f_tol: 1e-10,
            target: 0.0,
            initial_step: 0.2,
        }
    }
}

impl SimplexConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.reflection > 0.0
            && self.expansion > self.reflection
            && self.contraction > 0.0
            && self.contraction < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.max_evals >= 1
            && self.f_tol >= 0.0
            && self.initial_step > 0.0
            && self.initial_step.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(alloc::format!("invalid simplex config {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Target,
    Tolerance,
    MaxEvals,
}

/// Best-so-far value after a given number of evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub evals: usize,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    /// Value at the starting point.
    pub initial: f64,
    pub f: f64,
    pub evals: usize,
    pub trace: Vec<TracePoint>,
    pub stop: StopReason,
}

struct Counted<F> {
    f: F,
    evals: usize,
    max_evals: usize,
    best_x: Vec<f64>,
    best_f: f64,
}

impl<F: FnMut(&[f64]) -> Result<f64>> Counted<F> {
    fn call(&mut self, x: &[f64]) -> Result<f64> {
        let value = (self.f)(x)?;
        self.evals += 1;
        if !value.is_finite() {
            return Err(Error::NonFiniteObjective { value, evals: self.evals });
        }
        if value < self.best_f {
            self.best_f = value;
            self.best_x.clear();
            self.best_x.extend_from_slice(x);
        }
        Ok(value)
    }

    fn exhausted(&self) -> bool {
        self.evals >= self.max_evals
    }
}

/// Minimizes `f` from `x0`.
///
/// The initial simplex offsets coordinate `i` by
/// `initial_step * max(|x0_i|, scales_i)`. Vertices are ranked by value with
/// the lower slot index winning ties. The returned point is the best vertex
/// ever evaluated.
pub fn nelder_mead<F>(f: F, x0: &[f64], scales: &[f64], config: &SimplexConfig) -> Result<NelderMeadResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    config.validate()?;
    let n = x0.len();
    if scales.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: scales.len() });
    }
    if n == 0 {
        return Err(Error::ParamLength { expected: 1, got: 0 });
    }
    let mut obj = Counted { f, evals: 0, max_evals: config.max_evals, best_x: x0.to_vec(), best_f: f64::INFINITY };
    let mut trace = Vec::new();

    let finish = |obj: Counted<F>, initial, trace: Vec<TracePoint>, stop| {
        Ok(NelderMeadResult { x: obj.best_x, initial, f: obj.best_f, evals: obj.evals, trace, stop })
    };

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut vals: Vec<f64> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    let initial = obj.call(x0)?;
    vals.push(initial);
    for i in 0..n {
        if obj.best_f < config.target {
            return finish(obj, initial, trace, StopReason::Target);
        }
        if obj.exhausted() {
            return finish(obj, initial, trace, StopReason::MaxEvals);
        }
        let mut p = x0.to_vec();
        p[i] += config.initial_step * libm::fabs(x0[i]).max(scales[i]);
        vals.push(obj.call(&p)?);
        pts.push(p);
    }

    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = alloc::vec![0.0; n];
    let mut trial = alloc::vec![0.0; n];
    let mut trial2 = alloc::vec![0.0; n];

    loop {
        // Stable sort by value, so equal values keep slot order.
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
        trace.push(TracePoint { evals: obj.evals, best: obj.best_f });
        let (best, second, worst) = (order[0], order[n - 1], order[n]);

        if obj.best_f < config.target {
            return finish(obj, initial, trace, StopReason::Target);
        }
        if vals[worst] - vals[best] <= config.f_tol {
            return finish(obj, initial, trace, StopReason::Tolerance);
        }
        if obj.exhausted() {
            return finish(obj, initial, trace, StopReason::MaxEvals);
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &k in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&pts[k]) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n as f64);

        let along = |out: &mut [f64], from: &[f64], coeff: f64| {
            for ((o, c), x) in out.iter_mut().zip(&centroid).zip(from) {
                *o = c + coeff * (c - x);
            }
        };

        along(&mut trial, &pts[worst], config.reflection);
        let fr = obj.call(&trial)?;

        let mut shrink = false;
        if fr < vals[best] {
            if obj.exhausted() {
                accept(&mut pts, &mut vals, worst, &trial, fr);
                continue;
            }
            along(&mut trial2, &pts[worst], config.reflection * config.expansion);
            let fe = obj.call(&trial2)?;
            if fe < fr {
                accept(&mut pts, &mut vals, worst, &trial2, fe);
            } else {
                accept(&mut pts, &mut vals, worst, &trial, fr);
            }
        } else if fr < vals[second] {
            accept(&mut pts, &mut vals, worst, &trial, fr);
        } else if obj.exhausted() {
            if fr < vals[worst] {
                accept(&mut pts, &mut vals, worst, &trial, fr);
            }
            continue;
        } else if fr < vals[worst] {
            along(&mut trial2, &pts[worst], config.reflection * config.contraction);
            let fc = obj.call(&trial2)?;
            if fc <= fr {
                accept(&mut pts, &mut vals, worst, &trial2, fc);
            } else {
                shrink = true;
            }
        } else {
            along(&mut trial2, &pts[worst], -config.contraction);
            let fc = obj.call(&trial2)?;
            if fc < vals[worst] {
                accept(&mut pts, &mut vals, worst, &trial2, fc);
            } else {
                shrink = true;
            }
        }

        if shrink {
            let anchor = pts[best].clone();
            for &k in &order[1..] {
                if obj.exhausted() || obj.best_f < config.target {
                    break;
                }
                for (x, a) in pts[k].iter_mut().zip(&anchor) {
                    *x = a + config.shrink * (*x - a);
                }
                vals[k] = obj.call(&pts[k])?;
            }
        }
    }
}

fn accept(pts: &mut [Vec<f64>], vals: &mut [f64], slot: usize, x: &[f64], f: f64) {
    pts[slot].copy_from_slice(x);
    vals[slot] = f;
}

/// Step lengths (seconds) used one after another, coarse to fine.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealSchedule(Vec<f64>);

impl AnnealSchedule {
    pub fn new(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidConfig("empty step schedule".into()));
        }
        for w in steps.windows(2) {
            if w[1].partial_cmp(&w[0]) != Some(core::cmp::Ordering::Less) {
                return Err(Error::InvalidConfig(alloc::format!("schedule is not strictly decreasing at {}", w[1])));
            }
        }
        if let Some(bad) = steps.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::InvalidConfig(alloc::format!("step length {bad} must be positive")));
        }
        Ok(Self(steps))
    }

    /// 5, 2.5, 1.25, 0.625 microseconds.
    pub fn standard() -> Self {
        Self(alloc::vec![5e-6, 2.5e-6, 1.25e-6, 0.625e-6])
    }

    pub fn single(dt: f64) -> Result<Self> {
        Self::new(alloc::vec![dt])
    }

    pub fn steps(&self) -> &[f64] {
        &self.0
    }

    /// Every step must divide the duration.
    pub fn check_duration(&self, duration: f64) -> Result<()> {
        for &dt in &self.0 {
            step_count(duration, dt)?;
        }
        Ok(())
    }
}

/// Random initial guess.
///
/// Amplitude weights are uniform in `[0, A_max / s_A]`, frequencies in
/// `[0, 20 pi / T]` (at most ten periods), offsets in `[0, 2 pi)`, and
/// phase weights in `[0, pi]`.
pub fn random_init(s_amp: usize, s_phase: usize, spec: &PulseSpec, seed: u64) -> FourierParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_freq = 10.0 * TAU / spec.duration;
    let a_max = if s_amp == 0 { 0.0 } else { spec.max_amp / s_amp as f64 };
    let mut draw = |w_max: f64| {
        let weight = if w_max > 0.0 { rng.gen_range(0.0..=w_max) } else { 0.0 };
        SineTerm::new(weight, rng.gen_range(0.0..=max_freq), rng.gen_range(0.0..TAU))
    };
    let amp_terms = (0..s_amp).map(|_| draw(a_max)).collect();
    let phase_terms = (0..s_phase).map(|_| draw(core::f64::consts::PI)).collect();
    FourierParams { amp_terms, phase_terms }
}

/// Per-coordinate simplex scales in packed order: `A_max / s_A` for
/// amplitude weights, `2 pi / T` for frequencies, 1 for phases and phase
/// weights.
pub fn simplex_scales(s_amp: usize, s_phase: usize, spec: &PulseSpec) -> Vec<f64> {
    let freq = TAU / spec.duration;
    let amp = if s_amp == 0 { 1.0 } else { spec.max_amp / s_amp as f64 };
    let mut out = Vec::with_capacity(3 * (s_amp + s_phase));
    for _ in 0..s_amp {
        out.extend_from_slice(&[amp, freq, 1.0]);
    }
    for _ in 0..s_phase {
        out.extend_from_slice(&[1.0, freq, 1.0]);
    }
    out
}

/// Seed of start `k` derived from the run seed; start 0 uses the run seed.
pub fn start_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Wall-clock source; the core has no clock of its own.
pub trait Clock {
    fn seconds(&self) -> f64;
}

/// Clock that always reads zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub dt: f64,
    /// Objective of the warm-start point at this step length.
    pub initial: f64,
    pub best: f64,
    pub evals: usize,
    pub trace: Vec<TracePoint>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartRecord {
    pub seed: u64,
    pub best: f64,
    pub params: FourierParams,
    pub stages: Vec<StageRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationRun {
    pub seed: u64,
    pub simplex: SimplexConfig,
    pub schedule: AnnealSchedule,
    pub best_params: FourierParams,
    pub best: f64,
    pub evals: usize,
    /// Index into `starts` of the winning start.
    pub best_start: usize,
    pub starts: Vec<StartRecord>,
}

impl OptimizationRun {
    pub fn target_reached(&self) -> bool {
        self.best < self.simplex.target
    }

    pub fn best_stages(&self) -> &[StageRecord] {
        &self.starts[self.best_start].stages
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchPlan {
    pub s_amp: usize,
    pub s_phase: usize,
    pub schedule: AnnealSchedule,
    pub simplex: SimplexConfig,
    pub n_starts: usize,
    pub seed: u64,
}

impl SearchPlan {
    pub fn new(s_amp: usize, s_phase: usize, schedule: AnnealSchedule, simplex: SimplexConfig, seed: u64) -> Self {
        Self { s_amp, s_phase, schedule, simplex, n_starts: 3, seed }
    }
}

/// Runs the search with sequential evaluation and no clock.
pub fn optimize_pulse(system: &SpinSystem, objective: &Objective, spec: &PulseSpec, plan: &SearchPlan) -> Result<OptimizationRun> {
    optimize_pulse_with(system, objective, spec, plan, &NoClock, |ev, p| ev.evaluate(p))
}

/// Multi-start annealed search.
///
/// Each start draws a random guess, then runs the simplex at each step
/// length of the schedule, warm-starting from the previous stage's best.
/// A stage that converges before its budget is used is restarted from its
/// best point until a restart brings no improvement. Starts run in order
/// and the search stops once the target is met; the lowest start index wins
/// ties. `eval` computes the objective for packed parameters, which lets a
/// caller parallelize across subgroups.
pub fn optimize_pulse_with<E>(
    system: &SpinSystem,
    objective: &Objective,
    spec: &PulseSpec,
    plan: &SearchPlan,
    clock: &dyn Clock,
    eval: E,
) -> Result<OptimizationRun>
where
    E: Fn(&Evaluator, &FourierParams) -> Result<f64>,
{
    if plan.n_starts == 0 {
        return Err(Error::InvalidConfig("n_starts must be at least 1".into()));
    }
    if plan.s_amp + plan.s_phase == 0 {
        return Err(Error::ParamLength { expected: 1, got: 0 });
    }
    plan.simplex.validate()?;
    spec.validate()?;
    plan.schedule.check_duration(spec.duration)?;

    let evaluators: Vec<Evaluator> = plan
        .schedule
        .steps()
        .iter()
        .map(|&dt| Evaluator::new(objective, system, &spec.with_dt(dt)?))
        .collect::<Result<_>>()?;
    let scales = simplex_scales(plan.s_amp, plan.s_phase, spec);
    let (s_amp, s_phase) = (plan.s_amp, plan.s_phase);

    let mut starts: Vec<StartRecord> = Vec::with_capacity(plan.n_starts);
    let mut total_evals = 0usize;
    for k in 0..plan.n_starts {
        let seed = start_seed(plan.seed, k);
        let mut x = random_init(s_amp, s_phase, spec, seed).pack();
        let mut stages = Vec::with_capacity(evaluators.len());
        let mut best = f64::INFINITY;
        for (ev, &dt) in evaluators.iter().zip(plan.schedule.steps()) {
            let t0 = clock.seconds();
            let objective_fn = |v: &[f64]| eval(ev, &FourierParams::unpack(v, s_amp, s_phase)?);
            let mut stage_evals = 0usize;
            let mut stage_best = f64::INFINITY;
            let mut initial = None;
            let mut trace = Vec::new();
            loop {
                let budget = SimplexConfig { max_evals: plan.simplex.max_evals - stage_evals, ..plan.simplex };
                let res = nelder_mead(objective_fn, &x, &scales, &budget)?;
                initial.get_or_insert(res.initial);
                trace.extend(
                    res.trace.iter().map(|t| TracePoint { evals: stage_evals + t.evals, best: t.best.min(stage_best) }),
                );
                stage_evals += res.evals;
                let gain = stage_best - res.f;
                if res.f < stage_best {
                    x = res.x;
                    stage_best = res.f;
                }
                if res.stop != StopReason::Tolerance || stage_evals >= plan.simplex.max_evals || gain <= plan.simplex.f_tol {
                    break;
                }
            }
            total_evals += stage_evals;
            best = stage_best;
            stages.push(StageRecord {
                dt,
                initial: initial.unwrap_or(f64::NAN),
                best,
                evals: stage_evals,
                trace,
                wall_seconds: clock.seconds() - t0,
            });
        }
        starts.push(StartRecord { seed, best, params: FourierParams::unpack(&x, s_amp, s_phase)?, stages });
        if best < plan.simplex.target {
            break;
        }
    }

    let mut best_start = 0;
    for (i, s) in starts.iter().enumerate() {
        if s.best < starts[best_start].best {
            best_start = i;
        }
    }
    Ok(OptimizationRun {
        seed: plan.seed,
        simplex: plan.simplex,
        schedule: plan.schedule.clone(),
        best_params: starts[best_start].params.clone(),
        best: starts[best_start].best,
        evals: total_evals,
        best_start,
        starts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fidelity::Objective;
    use crate::goals::{rotation_goal, Axis, RotationGoal};
    use crate::pulse::sample_pulse;
    use core::cell::Cell;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn ok<F: Fn(&[f64]) -> f64>(f: F) -> impl FnMut(&[f64]) -> Result<f64> {
        move |x| Ok(f(x))
    }

    #[test]
    fn quadratic_bowl() {
        let cfg = SimplexConfig { max_evals: 500, f_tol: 1e-14, ..Default::default() };
        let r = nelder_mead(ok(|x| (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2)), &[0.0, 0.0], &[1.0, 1.0], &cfg).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] + 2.0).abs() < 1e-4, "{:?}", r.x);
        assert!(r.evals <= 500);
    }

    #[test]
    fn constant_stops_at_start() {
        let r = nelder_mead(ok(|_| 3.0), &[0.5, -0.25, 2.0], &[1.0; 3], &SimplexConfig::default()).unwrap();
        assert_eq!(r.stop, StopReason::Tolerance);
        assert_eq!(r.x, [0.5, -0.25, 2.0]);
        assert_eq!(r.evals, 4);
    }

    #[test]
    fn rosenbrock() {
        let cfg = SimplexConfig { max_evals: 2000, f_tol: 1e-16, ..Default::default() };
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(ok(f), &[-1.2, 1.0], &[1.0, 1.0], &cfg).unwrap();
        assert!(r.f < 1e-6, "f = {} after {}", r.f, r.evals);
        assert!(r.evals <= 2000);
    }

    #[test]
    fn target_and_budget_stops() {
        let bowl = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let cfg = SimplexConfig { target: 0.5, ..Default::default() };
        let r = nelder_mead(ok(bowl), &[1.0, 1.0], &[1.0, 1.0], &cfg).unwrap();
        assert_eq!(r.stop, StopReason::Target);
        assert!(r.f < 0.5);

        for max_evals in [1, 2, 3, 7, 50] {
            let cfg = SimplexConfig { max_evals, f_tol: 0.0, ..Default::default() };
            let calls = Cell::new(0usize);
            let r = nelder_mead(|x: &[f64]| { calls.set(calls.get() + 1); Ok(bowl(x)) }, &[1.0, 2.0, 3.0], &[1.0; 3], &cfg).unwrap();
            assert_eq!(r.stop, StopReason::MaxEvals);
            assert_eq!(r.evals, max_evals);
            assert_eq!(calls.get(), max_evals);
        }
    }

    #[test]
    fn non_finite_aborts() {
        let r = nelder_mead(ok(|x| if x[0] > 0.5 { f64::NAN } else { x[0] }), &[0.0], &[1.0], &SimplexConfig {
            initial_step: 1.0,
            ..Default::default()
        });
        assert!(matches!(r, Err(Error::NonFiniteObjective { evals: 2, .. })));
    }

    #[test]
    fn config_validation() {
        let d = SimplexConfig::default();
        assert!(d.validate().is_ok());
        for bad in [
            SimplexConfig { reflection: 0.0, ..d },
            SimplexConfig { expansion: 1.0, ..d },
            SimplexConfig { contraction: 1.0, ..d },
            SimplexConfig { shrink: 0.0, ..d },
            SimplexConfig { max_evals: 0, ..d },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn schedules() {
        assert_eq!(AnnealSchedule::standard().steps(), &[5e-6, 2.5e-6, 1.25e-6, 0.625e-6]);
        assert!(AnnealSchedule::standard().check_duration(1e-3).is_ok());
        assert!(AnnealSchedule::standard().check_duration(12e-6).is_err());
        assert!(AnnealSchedule::new(alloc::vec![]).is_err());
        assert!(AnnealSchedule::new(alloc::vec![1e-6, 2e-6]).is_err());
        assert!(AnnealSchedule::new(alloc::vec![1e-6, 1e-6]).is_err());
    }

    #[test]
    fn param_scales_layout() {
        let spec = PulseSpec::new(100e-6, 2.0 * PI * 1e4, 1e-6).unwrap();
        let s = simplex_scales(2, 1, &spec);
        assert_eq!(s.len(), 9);
        assert_eq!(s[0], spec.max_amp / 2.0);
        assert_eq!(s[1], TAU / 100e-6);
        assert_eq!(&s[6..], &[1.0, TAU / 100e-6, 1.0]);
    }

    #[test]
    fn init_is_seeded() {
        let spec = PulseSpec::new(100e-6, 2.0 * PI * 1e4, 1e-6).unwrap();
        assert_eq!(random_init(3, 4, &spec, 9), random_init(3, 4, &spec, 9));
        assert_ne!(random_init(3, 4, &spec, 9), random_init(3, 4, &spec, 10));
        assert_ne!(start_seed(9, 1), start_seed(9, 0));
        assert_eq!(start_seed(9, 0), 9);
    }

    proptest! {
        #[test]
        fn init_ranges_and_bounds(seed in any::<u64>()) {
            let spec = PulseSpec::new(100e-6, 2.0 * PI * 1e4, 1e-6).unwrap();
            let p = random_init(7, 14, &spec, seed);
            let fmax = 20.0 * PI / spec.duration;
            for t in &p.amp_terms {
                prop_assert!((0.0..=spec.max_amp / 7.0).contains(&t.weight));
                prop_assert!((0.0..=fmax).contains(&t.freq) && (0.0..TAU).contains(&t.offset));
            }
            for t in &p.phase_terms {
                prop_assert!((0.0..=PI).contains(&t.weight));
                prop_assert!((0.0..=fmax).contains(&t.freq) && (0.0..TAU).contains(&t.offset));
            }
            let pulse = sample_pulse(&p, &spec);
            prop_assert!(pulse.amp.iter().all(|&a| (0.0..=spec.max_amp).contains(&a)));
        }

        #[test]
        fn best_never_exceeds_any_evaluation(a in -3.0f64..3.0, b in -3.0f64..3.0, evals in 1usize..80) {
            let seen = core::cell::RefCell::new(alloc::vec::Vec::new());
            let f = |x: &[f64]| { let v = (x[0] - 0.3).powi(2) + 2.0 * (x[1] + x[0]).powi(4) + 0.1 * libm::sin(5.0 * x[1]); seen.borrow_mut().push(v); Ok(v) };
            let r = nelder_mead(f, &[a, b], &[1.0, 1.0], &SimplexConfig { max_evals: evals, ..Default::default() }).unwrap();
            let min = seen.borrow().iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(r.f, min);
            prop_assert_eq!(r.evals, seen.borrow().len());
            prop_assert!(r.trace.windows(2).all(|w| w[1].best <= w[0].best));
        }
    }

    fn single_spin_problem() -> (SpinSystem, Objective, PulseSpec) {
        let system = SpinSystem::from_hz(&[0.0], &[], None, None).unwrap();
        let goal = rotation_goal(1, &RotationGoal { targets: alloc::vec![0], axis: Axis::X, angle: PI / 2.0 }).unwrap();
        let spec = PulseSpec::new(100e-6, 2.0 * PI * 1e4, 1e-6).unwrap();
        (system.clone(), Objective::whole_system(&system, goal), spec)
    }

    #[test]
    fn single_spin_end_to_end() {
        let (system, objective, spec) = single_spin_problem();
        let schedule = AnnealSchedule::new(alloc::vec![5e-6, 1e-6]).unwrap();
        let simplex = SimplexConfig { max_evals: 600, target: 1e-3, ..Default::default() };
        let plan = SearchPlan::new(2, 2, schedule, simplex, 1);
        let run = optimize_pulse(&system, &objective, &spec, &plan).unwrap();
        assert!(run.best < 1e-3, "best {}", run.best);
        assert!(run.target_reached());
        let stages = run.best_stages();
        assert_eq!(stages.last().unwrap().dt, 1e-6);
        // Reported value is the objective at the finest step.
        let check = Evaluator::new(&objective, &system, &spec.with_dt(1e-6).unwrap()).unwrap();
        assert_eq!(check.evaluate(&run.best_params).unwrap(), run.best);

        let again = optimize_pulse(&system, &objective, &spec, &plan).unwrap();
        assert_eq!(again, run);
    }

    #[test]
    fn eval_accounting_and_trace() {
        let (system, objective, spec) = single_spin_problem();
        let simplex = SimplexConfig { max_evals: 40, target: 0.0, ..Default::default() };
        let mut plan = SearchPlan::new(1, 1, AnnealSchedule::new(alloc::vec![5e-6, 2.5e-6]).unwrap(), simplex, 3);
        plan.n_starts = 2;
        let calls = Cell::new(0usize);
        let run = optimize_pulse_with(&system, &objective, &spec, &plan, &NoClock, |ev, p| {
            calls.set(calls.get() + 1);
            ev.evaluate(p)
        })
        .unwrap();
        assert_eq!(run.evals, calls.get());
        assert_eq!(run.starts.len(), 2);
        let stage_sum: usize = run.starts.iter().flat_map(|s| s.stages.iter().map(|st| st.evals)).sum();
        assert_eq!(stage_sum, run.evals);
        for st in run.starts.iter().flat_map(|s| &s.stages) {
            assert!(st.evals <= 40);
            assert!(st.trace.windows(2).all(|w| w[1].best <= w[0].best));
            assert!(st.best <= st.initial);
        }
        assert!(run.best <= run.starts.iter().map(|s| s.best).fold(f64::INFINITY, f64::min));

        plan.n_starts = 0;
        assert!(optimize_pulse(&system, &objective, &spec, &plan).is_err());
    }
}
