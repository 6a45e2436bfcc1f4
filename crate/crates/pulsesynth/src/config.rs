//! TOML input documents. Spin indices in every document are 1-based.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use pulsesynth_core::goals::{drift_goal, goal_from_entries, rotation_goal};
use pulsesynth_core::optimizer::{AnnealSchedule, SearchPlan, SimplexConfig};
use pulsesynth_core::pulse::SineTerm;
use pulsesynth_core::spin::{lattice_tiling, LatticeLayout};
use pulsesynth_core::{
    Axis, FourierParams, Method, Objective, PulseSpec, RobustWeights, Robustness, RotationGoal, SizeCap,
    SpinSystem, Subgroup, SubgroupGoal, Unitary, C64,
};

use crate::error::{invalid, CliResult};

pub const SYSTEM_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub version: u32,
    pub frequencies_hz: Vec<f64>,
    #[serde(default)]
    pub couplings: Vec<Coupling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub species: Option<Vec<String>>,
    /// Rotating-frame frequency per species label.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub frame_hz: BTreeMap<String, f64>,
}

impl SystemConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn to_system(&self) -> CliResult<SpinSystem> {
        if self.version != SYSTEM_VERSION {
            return invalid(format!("unsupported system config version {}", self.version));
        }
        let mut couplings = Vec::with_capacity(self.couplings.len());
        for c in &self.couplings {
            if c.i == 0 || c.j == 0 {
                return invalid("spin indices are 1-based");
            }
            couplings.push((c.i - 1, c.j - 1, c.hz));
        }
        let frames: Vec<(String, f64)> = self.frame_hz.iter().map(|(k, v)| (k.clone(), *v)).collect();
        let frames = if self.frame_hz.is_empty() { None } else { Some(frames.as_slice()) };
        Ok(SpinSystem::from_hz(&self.frequencies_hz, &couplings, self.species.as_deref(), frames)?)
    }

    pub fn from_lattice(layout: &LatticeLayout, coupling_hz: f64) -> Self {
        let single = layout.frame_hz.len() == 1 && layout.species.iter().all(|s| s == pulsesynth_core::spin::SINGLE_CHANNEL_LABEL);
        Self {
            version: SYSTEM_VERSION,
            frequencies_hz: layout.frequencies_hz.clone(),
            couplings: layout.edges.iter().map(|&(i, j)| Coupling { i: i + 1, j: j + 1, hz: coupling_hz }).collect(),
            species: if single { None } else { Some(layout.species.clone()) },
            frame_hz: layout.frame_hz.iter().cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub duration_us: f64,
    /// Peak Rabi frequency; the amplitude bound in rad/s is `2 pi` times this.
    pub max_amp_hz: f64,
    #[serde(default = "default_dt_us")]
    pub dt_us: f64,
    pub s_amp: usize,
    pub s_phase: usize,
    #[serde(default = "default_zeta")]
    pub zeta1: f64,
    #[serde(default = "default_zeta")]
    pub zeta2: f64,
}

fn default_dt_us() -> f64 {
    1.0
}

fn default_zeta() -> f64 {
    2.0
}

impl PulseConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_spec(&self) -> CliResult<PulseSpec> {
        let mut spec = PulseSpec::new(self.duration_us * 1e-6, TAU * self.max_amp_hz, self.dt_us * 1e-6)?;
        spec.zeta1 = self.zeta1;
        spec.zeta2 = self.zeta2;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RobustKind {
    #[default]
    None,
    Amplitude,
    Frequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessConfig {
    #[serde(default)]
    pub kind: RobustKind,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_weights")]
    pub weights: [f64; 3],
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        Self { kind: RobustKind::None, eps: default_eps(), weights: default_weights() }
    }
}

fn default_eps() -> f64 {
    pulsesynth_core::fidelity::DEFAULT_EPSILON
}

fn default_weights() -> [f64; 3] {
    RobustWeights::default().0
}

impl RobustnessConfig {
    pub fn to_robustness(&self) -> CliResult<Robustness> {
        let weights = RobustWeights::new(self.weights)?;
        Ok(match self.kind {
            RobustKind::None => Robustness::None,
            RobustKind::Amplitude => Robustness::Amplitude { eps: self.eps, weights },
            RobustKind::Frequency => Robustness::Frequency { eps: self.eps, weights },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    #[default]
    Fast,
    Exact,
}

impl From<MethodName> for Method {
    fn from(m: MethodName) -> Self {
        match m {
            MethodName::Fast => Method::Fast,
            MethodName::Exact => Method::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_starts")]
    pub n_starts: usize,
    #[serde(default = "default_schedule")]
    pub schedule_us: Vec<f64>,
    /// Objective evaluations per schedule stage.
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
    #[serde(default = "default_target")]
    pub target: f64,
    #[serde(default = "default_f_tol")]
    pub f_tol: f64,
    #[serde(default = "default_initial_step")]
    pub initial_step: f64,
    #[serde(default)]
    pub method: MethodName,
    #[serde(default = "default_cap")]
    pub size_cap: usize,
    #[serde(default)]
    pub robustness: RobustnessConfig,
}

fn default_starts() -> usize {
    3
}

fn default_schedule() -> Vec<f64> {
    vec![5.0, 2.5, 1.25, 0.625]
}

fn default_max_evals() -> usize {
    SimplexConfig::default().max_evals
}

fn default_target() -> f64 {
    1e-3
}

fn default_f_tol() -> f64 {
    SimplexConfig::default().f_tol
}

fn default_initial_step() -> f64 {
    SimplexConfig::default().initial_step
}

fn default_cap() -> usize {
    SizeCap::DEFAULT.0
}

impl Default for OptConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

impl OptConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn simplex(&self) -> SimplexConfig {
        SimplexConfig {
            max_evals: self.max_evals,
            f_tol: self.f_tol,
            target: self.target,
            initial_step: self.initial_step,
            ..SimplexConfig::default()
        }
    }

    pub fn schedule(&self) -> CliResult<AnnealSchedule> {
        Ok(AnnealSchedule::new(self.schedule_us.iter().map(|d| d * 1e-6).collect())?)
    }

    pub fn plan(&self, pulse: &PulseConfig) -> CliResult<SearchPlan> {
        let mut plan = SearchPlan::new(pulse.s_amp, pulse.s_phase, self.schedule()?, self.simplex(), self.seed);
        plan.n_starts = self.n_starts;
        Ok(plan)
    }

    pub fn cap(&self) -> SizeCap {
        SizeCap(self.size_cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalKind {
    Rotation,
    Drift,
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisName {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Targets {
    /// `"all"` or `"odd"` (odd 1-based indices).
    Keyword(String),
    List(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixEntries {
    pub dim: usize,
    /// Row-major real parts.
    pub re: Vec<f64>,
    /// Row-major imaginary parts.
    pub im: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalConfig {
    pub kind: GoalKind,
    #[serde(default = "default_targets")]
    pub targets: Targets,
    #[serde(default = "default_axis")]
    pub axis: AxisName,
    /// In-plane axis `cos(p) X + sin(p) Y`; overrides `axis`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis_phase_deg: Option<f64>,
    #[serde(default = "default_angle")]
    pub angle_deg: f64,
    /// Explicit subgroups of 1-based spin indices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgroups: Option<Vec<Vec<usize>>>,
    /// Default tiling of a `[rows, cols]` lattice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tiling: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixEntries>,
}

fn default_targets() -> Targets {
    Targets::Keyword("all".into())
}

fn default_axis() -> AxisName {
    AxisName::X
}

fn default_angle() -> f64 {
    90.0
}

impl GoalConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        Ok(toml::from_str(text)?)
    }

    fn axis(&self) -> Axis {
        match (self.axis_phase_deg, self.axis) {
            (Some(p), _) => Axis::InPlane(p.to_radians()),
            (None, AxisName::X) => Axis::X,
            (None, AxisName::Y) => Axis::Y,
            (None, AxisName::Z) => Axis::Z,
        }
    }

    /// 0-based rotated spins of an `n`-spin system.
    fn target_set(&self, n: usize) -> CliResult<Vec<usize>> {
        match &self.targets {
            Targets::Keyword(k) if k == "all" => Ok((0..n).collect()),
            Targets::Keyword(k) if k == "odd" => Ok((0..n).step_by(2).collect()),
            Targets::Keyword(k) => invalid(format!("unknown target keyword `{k}` (expected \"all\" or \"odd\")")),
            Targets::List(list) => {
                if list.iter().any(|&t| t == 0 || t > n) {
                    return invalid(format!("targets must lie in 1..={n}"));
                }
                Ok(list.iter().map(|t| t - 1).collect())
            }
        }
    }

    pub fn subgroups(&self, n: usize) -> CliResult<Vec<Subgroup>> {
        match (&self.subgroups, self.tiling) {
            (Some(_), Some(_)) => invalid("give either `subgroups` or `tiling`, not both"),
            (Some(groups), None) => groups
                .iter()
                .map(|g| {
                    if g.contains(&0) {
                        return invalid("spin indices are 1-based");
                    }
                    Ok(Subgroup::new(g.iter().map(|i| i - 1).collect(), n)?)
                })
                .collect(),
            (None, Some([rows, cols])) => {
                if rows * cols != n {
                    return invalid(format!("tiling {rows}x{cols} does not match {n} spins"));
                }
                Ok(lattice_tiling(rows, cols))
            }
            (None, None) => Ok(vec![Subgroup::all(n)]),
        }
    }

    pub fn has_subgroups(&self) -> bool {
        self.subgroups.is_some() || self.tiling.is_some()
    }

    fn local_goal(&self, system: &SpinSystem, group: &Subgroup, duration: f64, cap: SizeCap) -> CliResult<Unitary> {
        cap.check(group.len())?;
        let q = group.len();
        match self.kind {
            GoalKind::Rotation => {
                let global = self.target_set(system.n_spins())?;
                let targets: Vec<usize> =
                    group.indices().iter().enumerate().filter(|(_, g)| global.contains(g)).map(|(l, _)| l).collect();
                if targets.is_empty() {
                    return Ok(Unitary::identity(1 << q));
                }
                Ok(rotation_goal(q, &RotationGoal { targets, axis: self.axis(), angle: self.angle_deg.to_radians() })?)
            }
            GoalKind::Drift => Ok(drift_goal(&system.restrict(group)?, duration, cap)?),
            GoalKind::Matrix => {
                let Some(m) = &self.matrix else {
                    return invalid("matrix goal needs a [matrix] table");
                };
                if m.re.len() != m.im.len() {
                    return invalid("matrix `re` and `im` differ in length");
                }
                if m.dim != 1 << q {
                    return invalid(format!("matrix dimension {} does not match {q} spins", m.dim));
                }
                let entries: Vec<C64> = m.re.iter().zip(&m.im).map(|(&r, &i)| C64::new(r, i)).collect();
                Ok(goal_from_entries(m.dim, &entries)?)
            }
        }
    }

    /// Per-subgroup goals for the objective.
    pub fn goals(&self, system: &SpinSystem, duration: f64, cap: SizeCap) -> CliResult<Vec<SubgroupGoal>> {
        if self.kind == GoalKind::Matrix && self.has_subgroups() {
            return invalid("matrix goals apply to the whole system only");
        }
        self.subgroups(system.n_spins())?
            .into_iter()
            .map(|subgroup| {
                let goal = self.local_goal(system, &subgroup, duration, cap)?;
                Ok(SubgroupGoal { subgroup, goal })
            })
            .collect()
    }

    /// The same goal stated on the whole system, used for full-system checks.
    pub fn whole_system_goal(&self, system: &SpinSystem, duration: f64, cap: SizeCap) -> CliResult<Unitary> {
        self.local_goal(system, &Subgroup::all(system.n_spins()), duration, cap)
    }

    pub fn objective(&self, system: &SpinSystem, duration: f64, opt: &OptConfig) -> CliResult<Objective> {
        let goals = self.goals(system, duration, opt.cap())?;
        Ok(Objective { goals, robustness: opt.robustness.to_robustness()?, method: opt.method.into(), cap: opt.cap() })
    }
}

/// Best-parameter document: `[a, b, c]` per amplitude term, `[d, f, g]` per
/// phase term (weight, angular frequency in rad/s, offset in rad).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDoc {
    pub amp: Vec<[f64; 3]>,
    pub phase: Vec<[f64; 3]>,
}

impl ParamsDoc {
    pub fn parse(text: &str) -> CliResult<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_params(p: &FourierParams) -> Self {
        let row = |t: &SineTerm| [t.weight, t.freq, t.offset];
        Self { amp: p.amp_terms.iter().map(row).collect(), phase: p.phase_terms.iter().map(row).collect() }
    }

    pub fn to_params(&self) -> FourierParams {
        let term = |r: &[f64; 3]| SineTerm::new(r[0], r[1], r[2]);
        FourierParams { amp_terms: self.amp.iter().map(term).collect(), phase_terms: self.phase.iter().map(term).collect() }
    }
}
