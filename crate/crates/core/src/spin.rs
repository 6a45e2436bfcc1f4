//! Coupled spin-1/2 systems in the isotropic-liquid approximation.
//!
//! The drift Hamiltonian is diagonal in the computational basis: chemical
//! shift offsets `(w_k - w_R) Z_k / 2` plus scalar couplings
//! `sum_{k != n} pi J_kn Z_k Z_n / 4`, the second sum running over ordered
//! pairs. Spin 0 is the most significant bit of a basis index, so basis
//! ordering matches the Kronecker product `spin_0 (x) spin_1 (x) ...`.
//!
//! Frequencies are stored in rad/s, couplings in Hz.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result, TAU};

/// Largest spin count for which 2^n-sized objects may be materialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeCap(pub usize);

impl SizeCap {
    pub const DEFAULT: SizeCap = SizeCap(14);

    pub fn check(self, n_spins: usize) -> Result<()> {
        if n_spins > self.0 {
            Err(Error::SizeCapExceeded { n_spins, cap: self.0 })
        } else {
            Ok(())
        }
    }
}

impl Default for SizeCap {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    freq: Vec<f64>,
    couplings: Vec<f64>,
    species: Vec<usize>,
    channels: Vec<String>,
    frame_freq: Vec<f64>,
}

impl SpinSystem {
    /// Builds a system from frequencies and couplings given in Hz.
    ///
    /// Coupling triples use 0-based spin indices. A pair may be listed in both
    /// orders only with the same value. Without `species` every spin sits on
    /// one channel. Channels missing from `frame_hz` (or all channels, when it
    /// is `None`) get a frame at the mean of their lowest and highest spin
    /// frequency; a `frame_hz` label no spin uses is an error.
    pub fn from_hz(
        frequencies_hz: &[f64],
        couplings_hz: &[(usize, usize, f64)],
        species: Option<&[String]>,
        frame_hz: Option<&[(String, f64)]>,
    ) -> Result<Self> {
        let n = frequencies_hz.len();
        if n == 0 {
            return Err(Error::InvalidConfig("a spin system needs at least one spin".into()));
        }
        if let Some(bad) = frequencies_hz.iter().find(|f| !f.is_finite()) {
            return Err(Error::InvalidConfig(alloc::format!("non-finite frequency {bad}")));
        }

        let mut table = vec![0.0; n * n];
        let mut seen = vec![false; n * n];
        for &(i, j, jhz) in couplings_hz {
            for idx in [i, j] {
                if idx >= n {
                    return Err(Error::SpinIndexOutOfRange { index: idx, n_spins: n });
                }
            }
            if i == j {
                return Err(Error::SelfCoupling(i));
            }
            if !jhz.is_finite() {
                return Err(Error::InvalidConfig(alloc::format!("non-finite coupling {jhz}")));
            }
            for (a, b) in [(i, j), (j, i)] {
                if seen[a * n + b] && table[a * n + b] != jhz {
                    let (a_val, b_val) = if a == i {
                        (jhz, table[a * n + b])
                    } else {
                        (table[a * n + b], jhz)
                    };
                    return Err(Error::AsymmetricCoupling { i, j, a: a_val, b: b_val });
                }
            }
            table[i * n + j] = jhz;
            table[j * n + i] = jhz;
            seen[i * n + j] = true;
            seen[j * n + i] = true;
        }

        let (species_idx, channels) = match species {
            None => (vec![0; n], vec![String::from("default")]),
            Some(labels) => {
                if labels.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
                }
                let mut channels: Vec<String> = Vec::new();
                let idx = labels
                    .iter()
                    .map(|l| match channels.iter().position(|c| c == l) {
                        Some(p) => p,
                        None => {
                            channels.push(l.clone());
                            channels.len() - 1
                        }
                    })
                    .collect();
                (idx, channels)
            }
        };

        let mut frame = Vec::with_capacity(channels.len());
        for (c, label) in channels.iter().enumerate() {
            let given = frame_hz.and_then(|f| f.iter().find(|(l, _)| l == label).map(|x| x.1));
            let hz = match given {
                Some(hz) => hz,
                None => {
                    let members = species_idx.iter().zip(frequencies_hz).filter(|(s, _)| **s == c);
                    let (lo, hi) = members.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &f)| {
                        (lo.min(f), hi.max(f))
                    });
                    (lo + hi) / 2.0
                }
            };
            frame.push(TAU * hz);
        }
        if let Some(frames) = frame_hz {
            if let Some((label, _)) = frames.iter().find(|(l, _)| !channels.contains(l)) {
                return Err(Error::UnknownSpecies(label.clone()));
            }
        }

        Ok(Self {
            freq: frequencies_hz.iter().map(|f| TAU * f).collect(),
            couplings: table,
            species: species_idx,
            channels,
            frame_freq: frame,
        })
    }

    pub fn n_spins(&self) -> usize {
        self.freq.len()
    }

    /// Resonance frequency of spin `k` in rad/s.
    pub fn freq(&self, k: usize) -> f64 {
        self.freq[k]
    }

    /// Scalar coupling between spins `i` and `j` in Hz.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i * self.n_spins() + j]
    }

    /// Channel index of spin `k`.
    pub fn channel_of(&self, k: usize) -> usize {
        self.species[k]
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn species_label(&self, k: usize) -> &str {
        &self.channels[self.species[k]]
    }

    /// Rotating-frame frequency of channel `c` in rad/s.
    pub fn frame_freq(&self, c: usize) -> f64 {
        self.frame_freq[c]
    }

    /// Coupled pairs `(i, j, J_hz)` with `i < j` and nonzero coupling.
    pub fn coupled_pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n_spins();
        (0..n).flat_map(move |i| {
            (i + 1..n).filter_map(move |j| {
                let jhz = self.coupling(i, j);
                (jhz != 0.0).then_some((i, j, jhz))
            })
        })
    }

    /// Per-spin offset `w_k - w_R` of its channel, in rad/s.
    pub fn frame_offsets(&self) -> Vec<f64> {
        (0..self.n_spins())
            .map(|k| self.freq[k] - self.frame_freq[self.species[k]])
            .collect()
    }

    /// New system over the subgroup spins only, in subgroup order. Couplings
    /// to spins outside the subgroup are dropped.
    pub fn restrict(&self, subgroup: &Subgroup) -> Result<SpinSystem> {
        let n = self.n_spins();
        let idx = subgroup.indices();
        if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
            return Err(Error::SpinIndexOutOfRange { index: bad, n_spins: n });
        }
        let m = idx.len();
        let mut couplings = vec![0.0; m * m];
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                couplings[a * m + b] = self.coupling(i, j);
            }
        }
        // Channels are kept whole so frame frequencies stay identical.
        Ok(SpinSystem {
            freq: idx.iter().map(|&i| self.freq[i]).collect(),
            couplings,
            species: idx.iter().map(|&i| self.species[i]).collect(),
            channels: self.channels.clone(),
            frame_freq: self.frame_freq.clone(),
        })
    }

    /// Copy with every offset `w_k - w_R` multiplied by `scale`.
    pub fn with_scaled_offsets(&self, scale: f64) -> SpinSystem {
        let mut out = self.clone();
        for k in 0..self.n_spins() {
            let frame = self.frame_freq[self.species[k]];
            out.freq[k] = frame + (self.freq[k] - frame) * scale;
        }
        out
    }

    /// Copy with every resonance frequency moved by `shift_hz`.
    pub fn with_shifted_frequencies(&self, shift_hz: f64) -> SpinSystem {
        let mut out = self.clone();
        for f in &mut out.freq {
            *f += TAU * shift_hz;
        }
        out
    }
}

/// Ordered, duplicate-free list of spin indices (0-based) into a parent system.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subgroup(Vec<usize>);

impl Subgroup {
    pub fn new(indices: Vec<usize>, n_spins: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptySubgroup);
        }
        for (pos, &i) in indices.iter().enumerate() {
            if i >= n_spins {
                return Err(Error::SpinIndexOutOfRange { index: i, n_spins });
            }
            if indices[..pos].contains(&i) {
                return Err(Error::DuplicateSpin(i));
            }
        }
        Ok(Self(indices))
    }

    pub fn all(n_spins: usize) -> Self {
        Self((0..n_spins).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Diagonal of `H0` in rad/s, length `2^n`.
pub fn drift_diagonal(system: &SpinSystem, cap: SizeCap) -> Result<Vec<f64>> {
    let n = system.n_spins();
    cap.check(n)?;
    let offsets = system.frame_offsets();
    let pairs: Vec<(usize, usize, f64)> = system
        .coupled_pairs()
        .map(|(i, j, jhz)| (i, j, core::f64::consts::PI * jhz / 2.0))
        .collect();
    let dim = 1usize << n;
    let z = |j: usize, k: usize| -> f64 {
        if (j >> (n - 1 - k)) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    Ok((0..dim)
        .map(|j| {
            let shifts: f64 = offsets.iter().enumerate().map(|(k, off)| off * z(j, k) / 2.0).sum();
            let scalar: f64 = pairs.iter().map(|&(a, b, w)| w * z(j, a) * z(j, b)).sum();
            shifts + scalar
        })
        .collect())
}

/// One species block of a multi-channel lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesBlock {
    pub label: String,
    pub count: usize,
    pub base_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpeciesPlan {
    /// One channel, spin `k` at `base_hz + s (k - 1)`.
    Single { base_hz: f64 },
    /// Contiguous blocks in spin order; frequencies restart from each block's
    /// base.
    Blocks(Vec<SpeciesBlock>),
}

/// Square-lattice definition with nearest-neighbour couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
    pub coupling_hz: f64,
    pub spacing_hz: f64,
    pub plan: SpeciesPlan,
}

/// Hz-level description of a lattice, shared by the builder and by anything
/// that writes lattice configs, so both produce bit-identical systems.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeLayout {
    pub frequencies_hz: Vec<f64>,
    pub species: Vec<String>,
    pub frame_hz: Vec<(String, f64)>,
    /// 0-based nearest-neighbour pairs.
    pub edges: Vec<(usize, usize)>,
}

pub const SINGLE_CHANNEL_LABEL: &str = "default";

impl LatticeSpec {
    pub fn n_spins(&self) -> usize {
        self.rows * self.cols
    }

    pub fn layout(&self) -> Result<LatticeLayout> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidConfig("lattice needs at least one row and one column".into()));
        }
        let n = self.n_spins();
        let blocks: Vec<SpeciesBlock> = match &self.plan {
            SpeciesPlan::Single { base_hz } => vec![SpeciesBlock {
                label: SINGLE_CHANNEL_LABEL.to_string(),
                count: n,
                base_hz: *base_hz,
            }],
            SpeciesPlan::Blocks(b) => b.clone(),
        };
        let total: usize = blocks.iter().map(|b| b.count).sum();
        if total != n {
            return Err(Error::SpeciesBlockMismatch { expected: n, got: total });
        }

        let mut frequencies_hz = Vec::with_capacity(n);
        let mut species = Vec::with_capacity(n);
        let mut frame_hz = Vec::new();
        for block in blocks.iter().filter(|b| b.count > 0) {
            if frame_hz.iter().any(|(l, _): &(String, f64)| *l == block.label) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "species `{}` appears in more than one block",
                    block.label
                )));
            }
            for k in 0..block.count {
                frequencies_hz.push(block.base_hz + self.spacing_hz * k as f64);
                species.push(block.label.clone());
            }
            let first = block.base_hz;
            let last = block.base_hz + self.spacing_hz * (block.count - 1) as f64;
            frame_hz.push((block.label.clone(), (first + last) / 2.0));
        }

        Ok(LatticeLayout { frequencies_hz, species, frame_hz, edges: lattice_edges(self.rows, self.cols) })
    }
}

/// Row-major nearest-neighbour edges of a `rows x cols` grid.
pub fn lattice_edges(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(rows * cols.saturating_sub(1) + cols * rows.saturating_sub(1));
    for r in 0..rows {
        for c in 0..cols {
            let k = r * cols + c;
            if c + 1 < cols {
                edges.push((k, k + 1));
            }
            if r + 1 < rows {
                edges.push((k, k + cols));
            }
        }
    }
    edges
}

pub fn build_square_lattice(spec: &LatticeSpec) -> Result<SpinSystem> {
    let layout = spec.layout()?;
    let couplings: Vec<(usize, usize, f64)> =
        layout.edges.iter().map(|&(i, j)| (i, j, spec.coupling_hz)).collect();
    SpinSystem::from_hz(&layout.frequencies_hz, &couplings, Some(&layout.species), Some(&layout.frame_hz))
}

/// Default subgroup tiling of a `rows x cols` lattice.
///
/// Non-overlapping 2x2 blocks anchored at even coordinates (truncated at
/// ragged edges), then staggered 2x2 blocks anchored at odd coordinates that
/// fit entirely inside the grid, then one pair for every nearest-neighbour
/// edge still not contained in any group. On a 6x6 grid this gives 13 groups
/// of four and 8 pairs.
pub fn lattice_tiling(rows: usize, cols: usize) -> Vec<Subgroup> {
    let block = |r0: usize, c0: usize| -> Vec<usize> {
        let mut out = Vec::with_capacity(4);
        for r in r0..(r0 + 2).min(rows) {
            for c in c0..(c0 + 2).min(cols) {
                out.push(r * cols + c);
            }
        }
        out
    };

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for r0 in (0..rows).step_by(2) {
        for c0 in (0..cols).step_by(2) {
            groups.push(block(r0, c0));
        }
    }
    for r0 in (1..rows).step_by(2) {
        for c0 in (1..cols).step_by(2) {
            if r0 + 1 < rows && c0 + 1 < cols {
                groups.push(block(r0, c0));
            }
        }
    }
    for (i, j) in lattice_edges(rows, cols) {
        if !groups.iter().any(|g| g.contains(&i) && g.contains(&j)) {
            groups.push(vec![i, j]);
        }
    }
    groups.into_iter().map(Subgroup).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    fn two_spin() -> SpinSystem {
        SpinSystem::from_hz(&[0.0, 2000.0], &[(0, 1, 50.0)], None, None).unwrap()
    }

    fn single_lattice(rows: usize, cols: usize) -> LatticeSpec {
        LatticeSpec {
            rows,
            cols,
            coupling_hz: 50.0,
            spacing_hz: 2e3,
            plan: SpeciesPlan::Single { base_hz: 700e6 },
        }
    }

    #[test]
    fn couplings_are_mirrored() {
        let s = two_spin();
        assert_eq!(s.coupling(0, 1), 50.0);
        assert_eq!(s.coupling(1, 0), 50.0);
        assert_eq!(s.coupling(0, 0), 0.0);
    }

    #[test]
    fn asymmetric_and_self_couplings_rejected() {
        let err = SpinSystem::from_hz(&[0.0, 1.0], &[(0, 1, 50.0), (1, 0, 40.0)], None, None);
        assert!(matches!(err, Err(Error::AsymmetricCoupling { .. })));
        let err = SpinSystem::from_hz(&[0.0, 1.0], &[(1, 1, 50.0)], None, None);
        assert_eq!(err, Err(Error::SelfCoupling(1)));
        // Repeating a pair with the same value is fine.
        assert!(SpinSystem::from_hz(&[0.0, 1.0], &[(0, 1, 5.0), (1, 0, 5.0)], None, None).is_ok());
    }

    #[test]
    fn single_spin_without_couplings() {
        let s = SpinSystem::from_hz(&[123.0], &[], None, None).unwrap();
        assert_eq!(s.n_spins(), 1);
        assert_eq!(s.coupled_pairs().count(), 0);
        assert_eq!(s.frame_offsets(), vec![0.0]);
    }

    #[test]
    fn unknown_frame_label_rejected() {
        let species = [String::from("H"), String::from("C")];
        let frames = [(String::from("H"), 0.0), (String::from("N"), 1.0)];
        let err = SpinSystem::from_hz(&[0.0, 1.0], &[], Some(&species), Some(&frames));
        assert_eq!(err, Err(Error::UnknownSpecies("N".into())));
    }

    #[test]
    fn lattice_4x4_edges_and_offsets() {
        let s = build_square_lattice(&single_lattice(4, 4)).unwrap();
        assert_eq!(s.n_spins(), 16);
        let pairs: Vec<_> = s.coupled_pairs().collect();
        assert_eq!(pairs.len(), 24);
        assert!(pairs.iter().all(|p| p.2 == 50.0));
        let off = s.frame_offsets();
        assert_relative_eq!(off[0], -2.0 * PI * 15e3, max_relative = 1e-9);
        assert_relative_eq!(off[15], 2.0 * PI * 15e3, max_relative = 1e-9);
    }

    #[test]
    fn lattice_2x2_frequencies() {
        let s = build_square_lattice(&single_lattice(2, 2)).unwrap();
        assert_relative_eq!(s.freq(3), 2.0 * PI * (700e6 + 6e3), max_relative = 1e-15);
        assert_relative_eq!(s.frame_offsets()[0], -2.0 * PI * 3e3, max_relative = 1e-9);
    }

    #[test]
    fn lattice_1x1_is_a_lone_spin() {
        let s = build_square_lattice(&single_lattice(1, 1)).unwrap();
        assert_eq!(s.n_spins(), 1);
        assert_eq!(s.coupled_pairs().count(), 0);
        assert_eq!(s.frame_offsets(), vec![0.0]);
        assert_eq!(s.frame_freq(0), s.freq(0));
    }

    #[test]
    fn lattice_edge_count_formula() {
        for rows in 1..7 {
            for cols in 1..7 {
                assert_eq!(lattice_edges(rows, cols).len(), rows * (cols - 1) + cols * (rows - 1));
            }
        }
    }

    #[test]
    fn multi_species_lattice() {
        let blocks = [("H", 700e6), ("F", 658e6), ("C", 176e6), ("P", 283e6), ("N", -71e6)]
            .iter()
            .map(|&(l, b)| SpeciesBlock { label: l.into(), count: 20, base_hz: b })
            .collect();
        let spec = LatticeSpec { plan: SpeciesPlan::Blocks(blocks), ..single_lattice(10, 10) };
        let s = build_square_lattice(&spec).unwrap();
        assert_eq!(s.channels().len(), 5);
        let off = s.frame_offsets();
        assert_relative_eq!(off[0], -2.0 * PI * 19e3, max_relative = 1e-9);
        assert_relative_eq!(off[19], 2.0 * PI * 19e3, max_relative = 1e-9);
        assert_eq!(s.species_label(20), "F");
        assert_relative_eq!(off[20], -2.0 * PI * 19e3, max_relative = 1e-9);

        let bad = LatticeSpec {
            plan: SpeciesPlan::Blocks(vec![SpeciesBlock { label: "H".into(), count: 3, base_hz: 0.0 }]),
            ..single_lattice(2, 2)
        };
        assert_eq!(build_square_lattice(&bad), Err(Error::SpeciesBlockMismatch { expected: 4, got: 3 }));
    }

    #[test]
    fn restriction_keeps_internal_couplings_only() {
        let s = build_square_lattice(&single_lattice(4, 4)).unwrap();
        let adjacent = Subgroup::new(vec![0, 1], 16).unwrap();
        let r = s.restrict(&adjacent).unwrap();
        assert_eq!(r.coupled_pairs().count(), 1);
        assert_eq!(r.frame_offsets(), vec![s.frame_offsets()[0], s.frame_offsets()[1]]);

        let whole = s.restrict(&Subgroup::all(16)).unwrap();
        assert_eq!(whole, s);
    }

    #[test]
    fn subgroup_validation() {
        assert_eq!(Subgroup::new(vec![], 3), Err(Error::EmptySubgroup));
        assert_eq!(Subgroup::new(vec![0, 0], 3), Err(Error::DuplicateSpin(0)));
        assert_eq!(Subgroup::new(vec![3], 3), Err(Error::SpinIndexOutOfRange { index: 3, n_spins: 3 }));
    }

    #[test]
    fn drift_single_spin_and_pair() {
        let s = SpinSystem::from_hz(&[-100.0, 100.0], &[], None, None).unwrap();
        let r = s.restrict(&Subgroup::new(vec![0], 2).unwrap()).unwrap();
        let delta = r.frame_offsets()[0];
        assert_eq!(drift_diagonal(&r, SizeCap::DEFAULT).unwrap(), vec![delta / 2.0, -delta / 2.0]);

        // Zero offsets, J = 50 Hz: the ordered-pair sum gives pi J / 2 per pair.
        let s = SpinSystem::from_hz(&[0.0, 0.0], &[(0, 1, 50.0)], None, None).unwrap();
        let d = drift_diagonal(&s, SizeCap::DEFAULT).unwrap();
        let w = PI * 25.0;
        for (got, want) in d.iter().zip([w, -w, -w, w]) {
            assert_relative_eq!(*got, want, max_relative = 1e-15);
        }
    }

    #[test]
    fn drift_is_traceless_and_capped() {
        let s = build_square_lattice(&single_lattice(3, 3)).unwrap();
        let d = drift_diagonal(&s, SizeCap::DEFAULT).unwrap();
        let scale = d.iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(d.iter().sum::<f64>().abs() < 1e-9 * scale);

        let big = build_square_lattice(&single_lattice(3, 5)).unwrap();
        assert_eq!(
            drift_diagonal(&big, SizeCap::DEFAULT),
            Err(Error::SizeCapExceeded { n_spins: 15, cap: 14 })
        );
    }

    #[test]
    fn tiling_counts() {
        let count = |g: &[Subgroup], size: usize| g.iter().filter(|s| s.len() == size).count();
        let t6 = lattice_tiling(6, 6);
        assert_eq!((count(&t6, 4), count(&t6, 2), t6.len()), (13, 8, 21));
        let t4 = lattice_tiling(4, 4);
        assert_eq!((count(&t4, 4), count(&t4, 2)), (5, 4));
        // every edge is covered, every spin appears
        for (rows, cols) in [(4, 4), (6, 6), (3, 5), (1, 4), (10, 10)] {
            let t = lattice_tiling(rows, cols);
            for (i, j) in lattice_edges(rows, cols) {
                assert!(t.iter().any(|g| g.indices().contains(&i) && g.indices().contains(&j)));
            }
            for k in 0..rows * cols {
                assert!(t.iter().any(|g| g.indices().contains(&k)));
            }
        }
    }

    #[test]
    fn scaled_offsets_keep_frame() {
        let s = two_spin();
        let scaled = s.with_scaled_offsets(1.05);
        for (a, b) in scaled.frame_offsets().iter().zip(s.frame_offsets()) {
            assert_relative_eq!(*a, 1.05 * b, max_relative = 1e-12);
        }
    }
}
