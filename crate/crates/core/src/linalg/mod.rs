//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here is sized for desk-scale problems: a handful of qubits or
//! qutrits, total dimension at most [`MAX_DIM`] for states. Matrices are stored
//! densely through `nalgebra`; subsystem bookkeeping (tensor index layout,
//! partial trace/transpose, permutations) is done here.

pub(crate) mod random;
mod state;
pub(crate) mod subsystems;

pub use state::{fidelity_and_trace_distance, DensityMatrix, PureState};

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest total Hilbert-space dimension accepted for states.
pub const MAX_DIM: usize = 64;

/// Eigenvalues in `[-PSD_TOL, 0)` are treated as rounding noise.
pub const PSD_TOL: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// A dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    /// Builds a matrix from entries listed row by row.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, &entries)))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let entries = rows.iter().flat_map(|row| row.iter().map(|&x| C64::new(x, 0.0))).collect();
        Self::from_row_major(r, c, entries)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::new(values[i], 0.0) } else { ZERO })
    }

    /// `|v><v|` for a column vector `v`.
    pub fn outer(v: &[C64]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| v[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        (0..self.rows()).flat_map(|i| (0..self.cols()).map(move |j| (i, j))).map(|(i, j)| self.0[(i, j)]).collect()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0.map(|z| z * factor))
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `max |m_ij - conj(m_ji)|`; infinite for non-square matrices.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        hermitian_deviation(&self.0)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.0.shape(), other.0.shape(), "shape mismatch");
        self.0.iter().zip(other.0.iter()).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn apply_to_vector(&self, v: &[C64]) -> Vec<C64> {
        let out = &self.0 * DVector::from_column_slice(v);
        out.iter().copied().collect()
    }
}

impl From<DMatrix<C64>> for ComplexMatrix {
    fn from(m: DMatrix<C64>) -> Self {
        Self(m)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

pub(crate) fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `(m + m†) / 2`.
pub(crate) fn hermitize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Eigendecomposition of a Hermitian matrix without validation. Eigenvalues
/// are sorted in descending order; column `k` of the returned matrix is the
/// eigenvector for eigenvalue `k`.
pub(crate) fn eigh(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let eig = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Eigenvalues only, descending.
pub(crate) fn eigvalsh(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut values: Vec<f64> = hermitize(m).symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// `V diag(f(λ)) V†`.
pub(crate) fn spectral_map(values: &[f64], vectors: &DMatrix<C64>, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
    let n = values.len();
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let fv = f(v);
        for i in 0..n {
            scaled[(i, j)] *= fv;
        }
    }
    scaled * vectors.adjoint()
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues in descending order
/// and the matching orthonormal eigenvectors as columns.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix is not square", m.rows(), m.cols())));
    }
    let dev = m.hermitian_deviation();
    if dev > 1e-10 * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    let (values, vectors) = eigh(&m.0);
    Ok((values, ComplexMatrix(vectors)))
}

/// Sum of singular values. Hermitian input takes the eigenvalue route.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    trace_norm_raw(&m.0)
}

pub(crate) fn trace_norm_raw(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let scale = m.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    if scale == 0.0 {
        return 0.0;
    }
    if m.is_square() && hermitian_deviation(m) <= 1e-12 * scale {
        return eigvalsh(m).iter().map(|v| v.abs()).sum();
    }
    m.clone().singular_values().iter().sum()
}

/// Generalized Pauli `X^a Z^b` on dimension `d`, with `X|k> = |k+1 mod d>` and
/// `Z|k> = exp(2πik/d)|k>`.
pub fn generalized_pauli(d: usize, a: usize, b: usize) -> ComplexMatrix {
    let omega = |k: usize| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * ((b * k) % d) as f64 / d as f64);
    // (X^a Z^b)|k> = ω^{bk} |k + a>
    ComplexMatrix::from_fn(d, d, |i, k| if i == (k + a) % d { omega(k) } else { ZERO })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_hermitian(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let g = ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        (&g + &g.adjoint()).scale(0.5)
    }

    #[test]
    fn diagonal_eigenvalues_descending() {
        let (vals, _) = eig_hermitian(&ComplexMatrix::diagonal(&[1.0, 3.0])).unwrap();
        assert_eq!(vals, vec![3.0, 1.0]);
    }

    #[test]
    fn pauli_x_spectrum() {
        let x = generalized_pauli(2, 1, 0);
        let (vals, _) = eig_hermitian(&x).unwrap();
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[1], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn reconstruction_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 3, 8, 16, 32] {
            let m = random_hermitian(n, &mut rng);
            let (vals, vecs) = eig_hermitian(&m).unwrap();
            let rebuilt = ComplexMatrix(spectral_map(&vals, vecs.as_dmatrix(), |v| v));
            let err = (&m - &rebuilt).frobenius_norm();
            assert!(err <= 1e-10 * m.frobenius_norm(), "n={n} err={err}");
            let gram = &vecs.adjoint() * &vecs;
            assert!(gram.max_abs_diff(&ComplexMatrix::identity(n)) < 1e-12);
        }
    }

    #[test]
    fn trace_norm_of_zero_and_non_hermitian() {
        assert_eq!(trace_norm(&ComplexMatrix::zeros(3, 3)), 0.0);
        // singular values of [[0,2],[0,0]] are {2,0}
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 2.0], &[0.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(trace_norm(&m), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn row_major_round_trip_and_length_check() {
        let entries: Vec<C64> = (0..6).map(|k| C64::new(k as f64, -(k as f64))).collect();
        let m = ComplexMatrix::from_row_major(2, 3, entries.clone()).unwrap();
        assert_eq!(m.get(1, 0), entries[3]);
        assert_eq!(m.to_row_major(), entries);
        assert!(ComplexMatrix::from_row_major(2, 2, entries).is_err());
    }

    #[test]
    fn paulis_are_unitary_and_commute_up_to_phase() {
        for d in 2..=4 {
            for a in 0..d {
                for b in 0..d {
                    let u = generalized_pauli(d, a, b);
                    let id = &u * &u.adjoint();
                    assert!(id.max_abs_diff(&ComplexMatrix::identity(d)) < 1e-12);
                }
            }
        }
    }
}
