//! In-place Walsh-Hadamard butterflies.

use crate::C64;

/// Unnormalized transform: applies `sqrt(N) H_q` to `data` (length `N = 2^q`).
///
/// The propagator folds the `1/N` of two consecutive transforms into a
/// diagonal factor, so the normalization is left to the caller.
pub fn fwht_unnormalized(data: &mut [C64]) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let mut half = 1;
    while half < n {
        for chunk in data.chunks_exact_mut(2 * half) {
            let (lo, hi) = chunk.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half *= 2;
    }
}

/// Normalized transform `H_q = H^{(x) q}`, an involution.
pub fn fwht(data: &mut [C64]) {
    fwht_unnormalized(data);
    let scale = 1.0 / libm::sqrt(data.len() as f64);
    for x in data.iter_mut() {
        *x *= scale;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    /// Dense H_q entry: (-1)^{popcount(i & j)} / sqrt(N).
    fn dense_apply(v: &[C64]) -> Vec<C64> {
        let n = v.len();
        let s = 1.0 / (n as f64).sqrt();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if (i & j).count_ones() % 2 == 0 { v[j] } else { -v[j] })
                    .sum::<C64>()
                    * s
            })
            .collect()
    }

    #[test]
    fn single_qubit_is_hadamard() {
        let mut v = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        fwht(&mut v);
        let r = core::f64::consts::FRAC_1_SQRT_2;
        assert!((v[0] - C64::new(r, 0.0)).norm() < 1e-15);
        assert!((v[1] - C64::new(r, 0.0)).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn matches_dense_and_is_involution(q in 0usize..7, seed in prop::collection::vec(-1.0f64..1.0, 256)) {
            let n = 1 << q;
            let v: Vec<C64> = (0..n).map(|i| C64::new(seed[2 * i % 256], seed[(2 * i + 1) % 256])).collect();
            let mut w = v.clone();
            fwht(&mut w);
            for (a, b) in w.iter().zip(dense_apply(&v)) {
                prop_assert!((a - b).norm() < 1e-12);
            }
            fwht(&mut w);
            for (a, b) in w.iter().zip(&v) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
