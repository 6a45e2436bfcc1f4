//! Sine-series pulse model.
//!
//! Amplitude `Omega(t) = sum_k a_k sin(b_k t + c_k)` and phase
//! `phi(t) = sum_k d_k sin(f_k t + g_k)`. The amplitude is shifted so its
//! minimum over the sample grid is zero, rescaled into `[0, A_max]` when it
//! overshoots, and finally multiplied by the tanh edge envelope.

use alloc::vec::Vec;

use crate::{Error, Result};

/// One `weight * sin(freq * t + offset)` term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineTerm {
    pub weight: f64,
    pub freq: f64,
    pub offset: f64,
}

impl SineTerm {
    pub fn new(weight: f64, freq: f64, offset: f64) -> Self {
        Self { weight, freq, offset }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.weight * libm::sin(self.freq * t + self.offset)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierParams {
    /// `(a_k [rad/s], b_k [rad/s], c_k [rad])`
    pub amp_terms: Vec<SineTerm>,
    /// `(d_k [rad], f_k [rad/s], g_k [rad])`
    pub phase_terms: Vec<SineTerm>,
}

/// Free parameters for `s_amp` amplitude and `s_phase` phase terms.
pub const fn param_count(s_amp: usize, s_phase: usize) -> usize {
    3 * (s_amp + s_phase)
}

impl FourierParams {
    pub fn zeros(s_amp: usize, s_phase: usize) -> Self {
        Self {
            amp_terms: alloc::vec![SineTerm::new(0.0, 0.0, 0.0); s_amp],
            phase_terms: alloc::vec![SineTerm::new(0.0, 0.0, 0.0); s_phase],
        }
    }

    pub fn s_amp(&self) -> usize {
        self.amp_terms.len()
    }

    pub fn s_phase(&self) -> usize {
        self.phase_terms.len()
    }

    pub fn len(&self) -> usize {
        param_count(self.s_amp(), self.s_phase())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat vector: every amplitude triple `(a, b, c)`, then every phase
    /// triple `(d, f, g)`.
    pub fn pack(&self) -> Vec<f64> {
        self.amp_terms
            .iter()
            .chain(&self.phase_terms)
            .flat_map(|t| [t.weight, t.freq, t.offset])
            .collect()
    }

    pub fn unpack(flat: &[f64], s_amp: usize, s_phase: usize) -> Result<Self> {
        let expected = param_count(s_amp, s_phase);
        if flat.len() != expected {
            return Err(Error::ParamLength { expected, got: flat.len() });
        }
        let terms: Vec<SineTerm> = flat.chunks_exact(3).map(|c| SineTerm::new(c[0], c[1], c[2])).collect();
        let (amp, phase) = terms.split_at(s_amp);
        Ok(Self { amp_terms: amp.to_vec(), phase_terms: phase.to_vec() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    /// Pulse length in seconds.
    pub duration: f64,
    /// Amplitude ceiling in rad/s.
    pub max_amp: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    /// Step length in seconds.
    pub dt: f64,
}

impl PulseSpec {
    pub fn new(duration: f64, max_amp: f64, dt: f64) -> Result<Self> {
        let spec = Self { duration, max_amp, zeta1: 2.0, zeta2: 2.0, dt };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        let spec = Self { dt, ..*self };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.duration) || !positive(self.max_amp) || !positive(self.dt) {
            return Err(Error::InvalidConfig(alloc::format!(
                "duration, max amplitude and step must be positive (got {}, {}, {})",
                self.duration,
                self.max_amp,
                self.dt
            )));
        }
        if !positive(self.zeta1) || !positive(self.zeta2) {
            return Err(Error::InvalidConfig("envelope constants must be positive".into()));
        }
        step_count(self.duration, self.dt).map(|_| ())
    }

    pub fn n_steps(&self) -> usize {
        step_count(self.duration, self.dt).unwrap_or(0)
    }

    /// Step midpoints `(k + 1/2) dt`.
    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.n_steps()).map(|k| (k as f64 + 0.5) * self.dt).collect()
    }
}

/// `duration / dt` when it is a positive integer (relative tolerance 1e-9).
pub fn step_count(duration: f64, dt: f64) -> Result<usize> {
    let ratio = duration / dt;
    let m = libm::round(ratio);
    if m < 1.0 || libm::fabs(ratio - m) > 1e-9 * m {
        return Err(Error::InvalidConfig(alloc::format!(
            "duration {duration} s is not a whole number of {dt} s steps"
        )));
    }
    Ok(m as usize)
}

/// Per-step controls on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPulse {
    /// Amplitude per step, rad/s.
    pub amp: Vec<f64>,
    /// Phase per step, rad, not wrapped.
    pub phase: Vec<f64>,
    /// Step length, seconds.
    pub dt: f64,
}

impl SampledPulse {
    pub fn new(amp: Vec<f64>, phase: Vec<f64>, dt: f64) -> Result<Self> {
        if amp.len() != phase.len() {
            return Err(Error::DimensionMismatch { expected: amp.len(), got: phase.len() });
        }
        if amp.is_empty() || !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidConfig("a pulse needs at least one step of positive length".into()));
        }
        Ok(Self { amp, phase, dt })
    }

    /// Zero-amplitude pulse of `n_steps` steps.
    pub fn silent(n_steps: usize, dt: f64) -> Self {
        Self { amp: alloc::vec![0.0; n_steps], phase: alloc::vec![0.0; n_steps], dt }
    }

    /// Constant controls.
    pub fn constant(amp: f64, phase: f64, n_steps: usize, dt: f64) -> Self {
        Self { amp: alloc::vec![amp; n_steps], phase: alloc::vec![phase; n_steps], dt }
    }

    pub fn n_steps(&self) -> usize {
        self.amp.len()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.n_steps() as f64
    }

    /// Copy with every amplitude multiplied by `scale`.
    pub fn scaled(&self, scale: f64) -> Self {
        Self { amp: self.amp.iter().map(|a| a * scale).collect(), ..self.clone() }
    }
}

/// Shifted and, when needed, rescaled amplitude series on `grid`, before the
/// envelope. The minimum over the grid becomes exactly zero; if the shifted
/// maximum exceeds `max_amp` the whole waveform is scaled down to it.
pub fn amplitude_waveform(params: &FourierParams, grid: &[f64], max_amp: f64) -> Vec<f64> {
    let mut out: Vec<f64> = grid.iter().map(|&t| params.amp_terms.iter().map(|s| s.eval(t)).sum()).collect();
    let lowest = out.iter().copied().fold(f64::INFINITY, f64::min);
    if !lowest.is_finite() {
        return out;
    }
    for x in &mut out {
        *x -= lowest;
    }
    let highest = out.iter().copied().fold(0.0, f64::max);
    if highest > max_amp {
        let k = max_amp / highest;
        for x in &mut out {
            *x = (*x * k).min(max_amp);
        }
    }
    out
}

pub fn phase_waveform(params: &FourierParams, grid: &[f64]) -> Vec<f64> {
    grid.iter().map(|&t| params.phase_terms.iter().map(|s| s.eval(t)).sum()).collect()
}

/// `-tanh(zeta1 t / T) tanh(zeta2 (t - T) / T)`, defined on `[0, T]`.
pub fn edge_envelope(t: f64, duration: f64, zeta1: f64, zeta2: f64) -> Result<f64> {
    if !(0.0..=duration).contains(&t) {
        return Err(Error::InvalidConfig(alloc::format!("envelope time {t} outside [0, {duration}]")));
    }
    Ok(-libm::tanh(zeta1 * t / duration) * libm::tanh(zeta2 * (t - duration) / duration))
}

/// Samples amplitude and phase at step midpoints. The envelope is applied
/// after the shift and rescale, so the `[0, A_max]` bound survives it.
pub fn sample_pulse(params: &FourierParams, spec: &PulseSpec) -> SampledPulse {
    let grid = spec.midpoints();
    let mut amp = amplitude_waveform(params, &grid, spec.max_amp);
    for (a, &t) in amp.iter_mut().zip(&grid) {
        // Midpoints are strictly inside (0, T).
        *a *= edge_envelope(t, spec.duration, spec.zeta1, spec.zeta2).unwrap_or(0.0);
    }
    SampledPulse { amp, phase: phase_waveform(params, &grid), dt: spec.dt }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    #[test]
    fn counts() {
        assert_eq!(param_count(7, 14), 63);
        assert_eq!(param_count(5, 8), 39);
        assert_eq!(param_count(10, 16), 78);
    }

    fn one_amp_term(a: f64, b: f64, c: f64) -> FourierParams {
        FourierParams { amp_terms: alloc::vec![SineTerm::new(a, b, c)], phase_terms: alloc::vec![] }
    }

    fn full_period_grid(tau: f64, m: usize) -> Vec<f64> {
        // includes the minimum at 3/4 of the period
        (0..=m).map(|k| tau * k as f64 / m as f64).collect()
    }

    #[test]
    fn shift_without_rescale() {
        let tau = 1e-3;
        let grid = full_period_grid(tau, 400);
        let w = amplitude_waveform(&one_amp_term(1.0, 2.0 * PI / tau, 0.0), &grid, 2.0);
        let (lo, hi) = (w.iter().copied().fold(f64::INFINITY, f64::min), w.iter().copied().fold(0.0, f64::max));
        assert_eq!(lo, 0.0);
        assert_relative_eq!(hi, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn rescale_halves() {
        let tau = 1e-3;
        let grid = full_period_grid(tau, 400);
        let p = one_amp_term(1.0, 2.0 * PI / tau, 0.0);
        let unclipped = amplitude_waveform(&p, &grid, 2.0);
        let clipped = amplitude_waveform(&p, &grid, 1.0);
        assert_relative_eq!(clipped.iter().copied().fold(0.0, f64::max), 1.0, max_relative = 1e-15);
        for (a, b) in clipped.iter().zip(&unclipped) {
            assert_relative_eq!(*a, b / 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_and_constant_amplitude_collapse() {
        let grid = [0.1, 0.2, 0.3];
        assert_eq!(amplitude_waveform(&one_amp_term(0.0, 3.0, 1.0), &grid, 1.0), alloc::vec![0.0; 3]);
        // b = 0 gives a constant, which the shift removes entirely.
        assert_eq!(amplitude_waveform(&one_amp_term(5.0, 0.0, 1.0), &grid, 1.0), alloc::vec![0.0; 3]);
    }

    #[test]
    fn phase_series() {
        let zero = FourierParams::zeros(1, 2);
        assert_eq!(phase_waveform(&zero, &[0.0, 1.0]), alloc::vec![0.0, 0.0]);

        let constant = FourierParams { amp_terms: alloc::vec![], phase_terms: alloc::vec![SineTerm::new(PI, 0.0, PI / 2.0)] };
        assert_eq!(phase_waveform(&constant, &[0.0, 7.0]), alloc::vec![PI, PI]);

        let two = FourierParams {
            amp_terms: alloc::vec![],
            phase_terms: alloc::vec![SineTerm::new(0.3, 5.0, 0.2), SineTerm::new(-1.1, 2.0, 1.4)],
        };
        assert_relative_eq!(phase_waveform(&two, &[0.0])[0], 0.3 * 0.2f64.sin() - 1.1 * 1.4f64.sin());
    }

    #[test]
    fn envelope_values() {
        assert_eq!(edge_envelope(0.0, 1.0, 2.0, 2.0).unwrap(), 0.0);
        assert_eq!(edge_envelope(1.0, 1.0, 2.0, 2.0).unwrap(), 0.0);
        let mid = edge_envelope(0.5, 1.0, 2.0, 2.0).unwrap();
        assert_relative_eq!(mid, 1.0f64.tanh().powi(2), max_relative = 1e-15);
        assert!((mid - 0.580).abs() < 5e-4);
        assert!(edge_envelope(1.5, 1.0, 2.0, 2.0).is_err());
        assert!(edge_envelope(-0.1, 1.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn sampling_zero_params() {
        let spec = PulseSpec::new(500e-6, 2.0 * PI * 1e4, 0.5e-6).unwrap();
        assert_eq!(spec.n_steps(), 1000);
        let p = sample_pulse(&FourierParams::zeros(7, 14), &spec);
        assert_eq!(p.n_steps(), 1000);
        assert!(p.amp.iter().all(|&a| a == 0.0));
        assert!(p.phase.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn non_integral_steps_rejected() {
        assert!(PulseSpec::new(1e-3, 1.0, 0.3e-3).is_err());
        assert!(PulseSpec::new(1e-3, 1.0, 0.625e-6).is_ok());
        assert!(PulseSpec::new(1e-3, -1.0, 1e-6).is_err());
    }

    #[test]
    fn pack_layout_and_errors() {
        let p = FourierParams {
            amp_terms: alloc::vec![SineTerm::new(1.0, 2.0, 3.0)],
            phase_terms: alloc::vec![SineTerm::new(4.0, 5.0, 6.0)],
        };
        assert_eq!(p.pack(), alloc::vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(FourierParams::unpack(&[0.0; 62], 7, 14), Err(Error::ParamLength { expected: 63, got: 62 }));
    }

    proptest! {
        #[test]
        fn pack_unpack_round_trip(v in prop::collection::vec(-1e6f64..1e6, 63)) {
            let p = FourierParams::unpack(&v, 7, 14).unwrap();
            prop_assert_eq!(p.pack(), v);
        }

        #[test]
        fn sampled_amplitude_bounds(v in prop::collection::vec(-1e5f64..1e5, 12), amax in 1e3f64..1e5) {
            let spec = PulseSpec::new(200e-6, amax, 1e-6).unwrap();
            let p = sample_pulse(&FourierParams::unpack(&v, 2, 2).unwrap(), &spec);
            let edge = edge_envelope(spec.dt / 2.0, spec.duration, 2.0, 2.0).unwrap() * amax;
            prop_assert!(p.amp.iter().all(|&a| (0.0..=amax).contains(&a)));
            prop_assert!(p.amp[0] <= edge * (1.0 + 1e-12));
            prop_assert!(*p.amp.last().unwrap() <= edge * (1.0 + 1e-12));
        }

        #[test]
        fn rescale_iff_overshoot(v in prop::collection::vec(-10f64..10.0, 6), amax in 0.5f64..20.0) {
            let p = FourierParams::unpack(&v, 2, 0).unwrap();
            let grid: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
            let raw: Vec<f64> = grid.iter().map(|&t| p.amp_terms.iter().map(|s| s.eval(t)).sum()).collect();
            let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
            let shifted_max = raw.iter().map(|x| x - lo).fold(0.0, f64::max);
            let w = amplitude_waveform(&p, &grid, amax);
            let max = w.iter().copied().fold(0.0, f64::max);
            if shifted_max > amax {
                prop_assert!((max - amax).abs() <= 1e-12 * amax);
            } else {
                prop_assert_eq!(w.iter().copied().fold(f64::INFINITY, f64::min), 0.0);
                prop_assert!((max - shifted_max).abs() <= 1e-12 * (1.0 + shifted_max));
            }
        }

        #[test]
        fn envelope_inside_unit_interval(frac in 1e-6f64..(1.0 - 1e-6), z1 in 0.5f64..5.0, z2 in 0.5f64..5.0) {
            let v = edge_envelope(frac, 1.0, z1, z2).unwrap();
            prop_assert!(v > 0.0 && v < 1.0);
        }
    }
}
