use alloc::vec::Vec;
use core::ops::Mul;

use nalgebra::DMatrix;

use crate::{Error, Result, C64};

/// Dense square complex matrix that is expected to be unitary.
///
/// Construction through [`Unitary::checked`] verifies `U^dagger U = I`;
/// the propagators build values directly and are tested for unitarity.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary(DMatrix<C64>);

impl Unitary {
    /// Wraps a matrix without checking.
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix after checking unitarity to `tol` in max norm.
    pub fn checked(m: DMatrix<C64>, tol: f64) -> Result<Self> {
        let u = Self::from_matrix(m)?;
        let deviation = u.unitarity_deviation();
        if deviation > tol || !deviation.is_finite() {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(u)
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Self(DMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { C64::new(0.0, 0.0) }))
    }

    /// Builds a matrix from its columns, each of length `dim`.
    pub(crate) fn from_columns(dim: usize, columns: &[C64]) -> Self {
        Self(DMatrix::from_column_slice(dim, dim, columns))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// Kronecker product `self (x) other`.
    pub fn kron(&self, other: &Unitary) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self(&self.0 * factor)
    }

    /// Max-norm of `U^dagger U - I`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim();
        let g = self.0.adjoint() * &self.0;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Max-norm distance to `other`.
    pub fn max_distance(&self, other: &Unitary) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Frobenius distance to `other`.
    pub fn frobenius_distance(&self, other: &Unitary) -> f64 {
        libm::sqrt(self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).norm_sqr()).sum())
    }

    /// `Tr(goal^dagger self)`.
    pub fn overlap_with(&self, goal: &Unitary) -> Result<C64> {
        trace_overlap(goal, &self.0)
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        self.0.column(j).iter().copied().collect()
    }
}

impl Mul for &Unitary {
    type Output = Unitary;
    fn mul(self, rhs: &Unitary) -> Unitary {
        Unitary(&self.0 * &rhs.0)
    }
}

/// `Tr(goal^dagger m)` without forming the product.
pub(crate) fn trace_overlap(goal: &Unitary, m: &DMatrix<C64>) -> Result<C64> {
    if goal.dim() != m.nrows() || m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: goal.dim(), got: m.nrows() });
    }
    Ok(goal.0.iter().zip(m.iter()).map(|(g, u)| g.conj() * u).sum())
}

#[cfg(test)]
pub(crate) fn pauli_x() -> DMatrix<C64> {
    let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    DMatrix::from_row_slice(2, 2, &[z, o, o, z])
}

#[cfg(test)]
pub(crate) fn pauli_y() -> DMatrix<C64> {
    let (i, z) = (C64::new(0.0, 1.0), C64::new(0.0, 0.0));
    DMatrix::from_row_slice(2, 2, &[z, -i, i, z])
}

#[cfg(test)]
pub(crate) fn pauli_z() -> DMatrix<C64> {
    let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    DMatrix::from_row_slice(2, 2, &[o, z, z, -o])
}

/// `op` acting on spin `k` of `n` (spin 0 most significant), identity elsewhere.
#[cfg(test)]
pub(crate) fn embed(op: &DMatrix<C64>, k: usize, n: usize) -> DMatrix<C64> {
    let mut out = DMatrix::<C64>::identity(1, 1);
    for l in 0..n {
        let factor = if l == k { op.clone() } else { DMatrix::identity(2, 2) };
        out = out.kronecker(&factor);
    }
    out
}
