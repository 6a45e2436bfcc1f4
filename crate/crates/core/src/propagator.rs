//! Step and total propagators.
//!
//! Each step Hamiltonian is `H0 + (Omega/2) sum_l (cos(phi) X_l + sin(phi) Y_l)`.
//! The exact step exponentiates it through a Hermitian eigendecomposition.
//! The fast step uses
//!
//! ```text
//! U_k ~ e^{-i phi G} W1 e^{-i Omega G dt} W2 e^{i phi G}
//! W1 = e^{-i H0 dt/2} H_q,   W2 = H_q e^{-i H0 dt/2},   G = sum_l Z_l / 2
//! ```
//!
//! where `H_q` is the normalized Hadamard tensor. Every factor except `H_q` is
//! diagonal and `G` takes only `q + 1` distinct values, so a step costs two
//! butterflies and a few elementwise products per vector. Over a whole pulse
//! the trailing diagonal of one step and the leading diagonal of the next are
//! fused into `e^{-i H0 dt} e^{i (phi_{k+1} - phi_k) G}`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use nalgebra::DMatrix;

use crate::hadamard::fwht_unnormalized;
use crate::pulse::SampledPulse;
use crate::spin::{drift_diagonal, SizeCap, SpinSystem};
use crate::unitary::{trace_overlap, Unitary};
use crate::{Error, Result, C64};

/// Propagation route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Product of exact step exponentials.
    Exact,
    /// Split-operator step with Walsh-Hadamard butterflies.
    Fast,
}

#[inline]
fn cis(theta: f64) -> C64 {
    C64::new(libm::cos(theta), libm::sin(theta))
}

/// Work elements per column chunk when streaming a trace.
const CHUNK_ELEMS: usize = 1 << 16;

/// Per-system data for the fast step, computed once per step length.
#[derive(Debug, Clone, PartialEq)]
pub struct FastStepContext {
    q: usize,
    dt: f64,
    gamma: Vec<f64>,
    /// Number of spin-down qubits per basis index; `G = (q - 2 level) / 2`.
    level: Vec<u32>,
    w_half: Vec<C64>,
    w_full: Vec<C64>,
}

impl FastStepContext {
    pub fn new(system: &SpinSystem, dt: f64, cap: SizeCap) -> Result<Self> {
        let drift = drift_diagonal(system, cap)?;
        Ok(Self::from_drift(&drift, system.n_spins(), dt))
    }

    fn from_drift(drift: &[f64], q: usize, dt: f64) -> Self {
        let level: Vec<u32> = (0..drift.len()).map(|j| (j as u32).count_ones()).collect();
        let gamma = level.iter().map(|&l| (q as f64 - 2.0 * l as f64) / 2.0).collect();
        let w_half = drift.iter().map(|&h| cis(-h * dt / 2.0)).collect();
        let w_full = drift.iter().map(|&h| cis(-h * dt)).collect();
        Self { q, dt, gamma, level, w_half, w_full }
    }

    pub fn n_qubits(&self) -> usize {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Diagonal of `G`.
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Diagonal of `exp(-i H0 dt / 2)`.
    pub fn w_half(&self) -> &[C64] {
        &self.w_half
    }

    /// `exp(i * sign * theta * G)` for each of the `q + 1` levels.
    fn level_phases(&self, theta: f64, scale: C64) -> Vec<C64> {
        (0..=self.q).map(|l| cis(theta * (self.q as f64 - 2.0 * l as f64) / 2.0) * scale).collect()
    }

    fn expand(&self, per_level: &[C64], base: &[C64], out: &mut [C64]) {
        for ((o, &l), &b) in out.iter_mut().zip(&self.level).zip(base) {
            *o = b * per_level[l as usize];
        }
    }

    fn expand_levels(&self, per_level: &[C64], out: &mut [C64]) {
        for (o, &l) in out.iter_mut().zip(&self.level) {
            *o = per_level[l as usize];
        }
    }
}

fn apply_diag(block: &mut [C64], diag: &[C64]) {
    for v in block.chunks_exact_mut(diag.len()) {
        for (x, d) in v.iter_mut().zip(diag) {
            *x *= d;
        }
    }
}

fn fwht_block(block: &mut [C64], dim: usize) {
    for v in block.chunks_exact_mut(dim) {
        fwht_unnormalized(v);
    }
}

fn check_block(ctx: &FastStepContext, block: &[C64]) -> Result<()> {
    if block.is_empty() || !block.len().is_multiple_of(ctx.dim()) {
        return Err(Error::DimensionMismatch { expected: ctx.dim(), got: block.len() });
    }
    Ok(())
}

/// Applies one fast step with controls `(amp, phase)` to every length-`2^q`
/// vector stored contiguously in `block`.
pub fn fast_step_apply(ctx: &FastStepContext, amp: f64, phase: f64, block: &mut [C64]) -> Result<()> {
    check_block(ctx, block)?;
    let n = ctx.dim();
    let one = C64::new(1.0, 0.0);
    let mut diag = vec![C64::new(0.0, 0.0); n];

    ctx.expand(&ctx.level_phases(phase, one), &ctx.w_half, &mut diag);
    apply_diag(block, &diag);
    fwht_block(block, n);
    ctx.expand_levels(&ctx.level_phases(-amp * ctx.dt, C64::new(1.0 / n as f64, 0.0)), &mut diag);
    apply_diag(block, &diag);
    fwht_block(block, n);
    ctx.expand(&ctx.level_phases(-phase, one), &ctx.w_half, &mut diag);
    apply_diag(block, &diag);
    Ok(())
}

/// One member of a jointly propagated family: its own context (drift) and
/// amplitude scale, sharing the pulse with the others.
#[derive(Debug, Clone, Copy)]
pub struct Member<'a> {
    pub ctx: &'a FastStepContext,
    pub amp_scale: f64,
}

/// Propagates `blocks[m]` through the whole pulse for member `m`. Phase
/// factors are computed once per step for all members, and the fused drift
/// diagonal once per distinct context.
pub fn propagate_members(members: &[Member<'_>], pulse: &SampledPulse, blocks: &mut [Vec<C64>]) -> Result<()> {
    let Some(first) = members.first() else {
        return Ok(());
    };
    let n = first.ctx.dim();
    if blocks.len() != members.len() {
        return Err(Error::DimensionMismatch { expected: members.len(), got: blocks.len() });
    }
    for (m, block) in members.iter().zip(blocks.iter()) {
        if m.ctx.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: m.ctx.dim() });
        }
        if libm::fabs(m.ctx.dt - pulse.dt) > 1e-12 * pulse.dt {
            return Err(Error::InvalidConfig(alloc::format!(
                "pulse step {} s does not match propagator step {} s",
                pulse.dt,
                m.ctx.dt
            )));
        }
        check_block(m.ctx, block)?;
    }

    // Members sharing a context share the fused diagonal.
    let owner: Vec<usize> = (0..members.len())
        .map(|i| (0..i).find(|&j| core::ptr::eq(members[j].ctx, members[i].ctx)).unwrap_or(i))
        .collect();

    let one = C64::new(1.0, 0.0);
    let inv_n = C64::new(1.0 / n as f64, 0.0);
    let mut diags = vec![vec![C64::new(0.0, 0.0); n]; members.len()];
    let mut rot = vec![C64::new(0.0, 0.0); n];
    let dt = pulse.dt;

    for k in 0..pulse.n_steps() {
        let phi = pulse.phase[k];
        let dphi = if k == 0 { phi } else { phi - pulse.phase[k - 1] };
        let plev = first.ctx.level_phases(dphi, one);
        for i in 0..members.len() {
            if owner[i] == i {
                let base = if k == 0 { &members[i].ctx.w_half } else { &members[i].ctx.w_full };
                members[i].ctx.expand(&plev, base, &mut diags[i]);
            }
        }
        for (i, m) in members.iter().enumerate() {
            let block = &mut blocks[i];
            apply_diag(block, &diags[owner[i]]);
            fwht_block(block, n);
            let olev = m.ctx.level_phases(-pulse.amp[k] * m.amp_scale * dt, inv_n);
            m.ctx.expand_levels(&olev, &mut rot);
            apply_diag(block, &rot);
            fwht_block(block, n);
        }
    }

    if let Some(&last) = pulse.phase.last() {
        let plev = first.ctx.level_phases(-last, one);
        for i in 0..members.len() {
            if owner[i] == i {
                members[i].ctx.expand(&plev, &members[i].ctx.w_half, &mut diags[i]);
            }
        }
        for (i, block) in blocks.iter_mut().enumerate() {
            apply_diag(block, &diags[owner[i]]);
        }
    }
    Ok(())
}

fn basis_block(dim: usize, cols: Range<usize>) -> Vec<C64> {
    let mut block = vec![C64::new(0.0, 0.0); dim * cols.len()];
    for (c, j) in cols.enumerate() {
        block[c * dim + j] = C64::new(1.0, 0.0);
    }
    block
}

/// Partial traces `sum_{j in cols} <goal_j | U_m | j>` for every member.
///
/// Only `|cols| * 2^q` amplitudes per member are held at once, so disjoint
/// column ranges can be processed independently and summed.
pub fn overlap_columns(
    members: &[Member<'_>],
    pulse: &SampledPulse,
    goal: &Unitary,
    cols: Range<usize>,
) -> Result<Vec<C64>> {
    let Some(first) = members.first() else {
        return Ok(Vec::new());
    };
    let n = first.ctx.dim();
    if goal.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: goal.dim() });
    }
    if cols.end > n {
        return Err(Error::DimensionMismatch { expected: n, got: cols.end });
    }
    let mut sums = vec![C64::new(0.0, 0.0); members.len()];
    let chunk = (CHUNK_ELEMS / n).clamp(1, n);
    let mut start = cols.start;
    while start < cols.end {
        let range = start..(start + chunk).min(cols.end);
        let mut blocks = vec![basis_block(n, range.clone()); members.len()];
        propagate_members(members, pulse, &mut blocks)?;
        for (sum, block) in sums.iter_mut().zip(&blocks) {
            for (c, j) in range.clone().enumerate() {
                let g = goal.matrix().column(j);
                let col = &block[c * n..(c + 1) * n];
                *sum += g.iter().zip(col).map(|(g, u)| g.conj() * u).sum::<C64>();
            }
        }
        start = range.end;
    }
    Ok(sums)
}

/// Full traces `Tr(goal^dagger U_m)` for every member.
pub fn overlaps(members: &[Member<'_>], pulse: &SampledPulse, goal: &Unitary) -> Result<Vec<C64>> {
    overlap_columns(members, pulse, goal, 0..goal.dim())
}

/// Dense step Hamiltonian (rad/s).
pub fn step_hamiltonian(system: &SpinSystem, amp: f64, phase: f64, cap: SizeCap) -> Result<DMatrix<C64>> {
    let drift = drift_diagonal(system, cap)?;
    let q = system.n_spins();
    let n = drift.len();
    let mut h = DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(drift[i], 0.0) } else { C64::new(0.0, 0.0) });
    // (cos X + sin Y)|0> = e^{i phi}|1>, |1> -> e^{-i phi}|0>
    let up = cis(phase) * (amp / 2.0);
    let down = up.conj();
    for l in 0..q {
        let bit = 1 << (q - 1 - l);
        for j in 0..n {
            h[(j ^ bit, j)] += if j & bit == 0 { up } else { down };
        }
    }
    Ok(h)
}

/// `exp(-i H dt)` for a Hermitian `h`.
pub(crate) fn expm_hermitian(h: DMatrix<C64>, dt: f64) -> Unitary {
    let eig = nalgebra::SymmetricEigen::new(h);
    let phases = DMatrix::from_fn(eig.eigenvalues.len(), 1, |i, _| cis(-eig.eigenvalues[i] * dt));
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    Unitary::from_matrix(scaled * v.adjoint()).expect("square by construction")
}

/// Exact step unitary `exp(-i (H0 + H_C) dt)`.
pub fn exact_step(system: &SpinSystem, amp: f64, phase: f64, dt: f64, cap: SizeCap) -> Result<Unitary> {
    Ok(expm_hermitian(step_hamiltonian(system, amp, phase, cap)?, dt))
}

fn exact_total(system: &SpinSystem, pulse: &SampledPulse, cap: SizeCap) -> Result<Unitary> {
    cap.check(system.n_spins())?;
    let mut u = Unitary::identity(1 << system.n_spins());
    for (&a, &p) in pulse.amp.iter().zip(&pulse.phase) {
        let step = exact_step(system, a, p, pulse.dt, cap)?;
        u = &step * &u;
    }
    Ok(u)
}

fn fast_totals(members: &[Member<'_>], pulse: &SampledPulse) -> Result<Vec<Unitary>> {
    let n = members.first().map_or(1, |m| m.ctx.dim());
    let mut blocks = vec![basis_block(n, 0..n); members.len()];
    propagate_members(members, pulse, &mut blocks)?;
    Ok(blocks.iter().map(|b| Unitary::from_columns(n, b)).collect())
}

/// Ordered product of all step propagators.
pub fn total_propagator(system: &SpinSystem, pulse: &SampledPulse, method: Method, cap: SizeCap) -> Result<Unitary> {
    match method {
        Method::Exact => exact_total(system, pulse, cap),
        Method::Fast => {
            let ctx = FastStepContext::new(system, pulse.dt, cap)?;
            Ok(fast_totals(&[Member { ctx: &ctx, amp_scale: 1.0 }], pulse)?.remove(0))
        }
    }
}

/// Applies the fast total propagator to one state vector in place.
pub fn propagate_state(system: &SpinSystem, pulse: &SampledPulse, state: &mut [C64], cap: SizeCap) -> Result<()> {
    let ctx = FastStepContext::new(system, pulse.dt, cap)?;
    let mut blocks = vec![state.to_vec()];
    propagate_members(&[Member { ctx: &ctx, amp_scale: 1.0 }], pulse, &mut blocks)?;
    state.copy_from_slice(&blocks[0]);
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&libm::fabs(eps)) {
        return Err(Error::InvalidConfig(alloc::format!("calibration error {eps} must satisfy |eps| < 1")));
    }
    Ok(())
}

/// `(U_-, U, U_+)` for amplitudes `(1 - eps) Omega`, `Omega`, `(1 + eps) Omega`.
pub fn scaled_triple(
    system: &SpinSystem,
    pulse: &SampledPulse,
    eps: f64,
    method: Method,
    cap: SizeCap,
) -> Result<[Unitary; 3]> {
    check_eps(eps)?;
    let scales = [1.0 - eps, 1.0, 1.0 + eps];
    let v = match method {
        Method::Exact => {
            let mut out = Vec::with_capacity(3);
            for s in scales {
                out.push(exact_total(system, &pulse.scaled(s), cap)?);
            }
            out
        }
        Method::Fast => {
            let ctx = FastStepContext::new(system, pulse.dt, cap)?;
            let members = scales.map(|s| Member { ctx: &ctx, amp_scale: s });
            fast_totals(&members, pulse)?
        }
    };
    Ok(v.try_into().expect("three members"))
}

/// `(U_-, U, U_+)` with every offset `w_k - w_R` scaled by `(1 - eps)`, `1`,
/// `(1 + eps)`. Only the drift diagonals differ between members.
pub fn frequency_scaled_propagator(
    system: &SpinSystem,
    pulse: &SampledPulse,
    eps: f64,
    method: Method,
    cap: SizeCap,
) -> Result<[Unitary; 3]> {
    check_eps(eps)?;
    let systems = [system.with_scaled_offsets(1.0 - eps), system.clone(), system.with_scaled_offsets(1.0 + eps)];
    let v = match method {
        Method::Exact => {
            let mut out = Vec::with_capacity(3);
            for s in &systems {
                out.push(exact_total(s, pulse, cap)?);
            }
            out
        }
        Method::Fast => {
            let mut ctxs = Vec::with_capacity(3);
            for s in &systems {
                ctxs.push(FastStepContext::new(s, pulse.dt, cap)?);
            }
            let members: Vec<Member<'_>> = ctxs.iter().map(|c| Member { ctx: c, amp_scale: 1.0 }).collect();
            fast_totals(&members, pulse)?
        }
    };
    Ok(v.try_into().expect("three members"))
}

/// `Tr(goal^dagger U)` from a dense propagator.
pub fn dense_overlap(u: &Unitary, goal: &Unitary) -> Result<C64> {
    trace_overlap(goal, u.matrix())
}
