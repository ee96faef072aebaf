use nalgebra::DMatrix;

use super::subsystems;
use super::{eigh, eigvalsh, hermitian_deviation, hermitize, spectral_map, trace_norm_raw, ComplexMatrix, C64, MAX_DIM, ONE, PSD_TOL, ZERO};
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-12;

fn check_dims(dims: &[usize], n: usize) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::DimensionMismatch(format!("invalid subsystem dimensions {dims:?}")));
    }
    let prod: usize = dims.iter().product();
    if prod != n {
        return Err(Error::DimensionMismatch(format!("dims {dims:?} do not multiply to {n}")));
    }
    if n > MAX_DIM {
        return Err(Error::TooLarge { dim: n, max: MAX_DIM });
    }
    Ok(())
}

/// A unit-norm state vector on a tensor-product space.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
    dims: Vec<usize>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, amplitudes.len())?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("state vector has norm {norm}")));
        }
        Ok(Self { amplitudes, dims })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Self::new(amplitudes.into_iter().map(|a| a / norm).collect(), dims)
    }

    pub fn basis(dims: Vec<usize>, index: usize) -> Result<Self> {
        let n: usize = dims.iter().product();
        if index >= n {
            return Err(Error::OutOfRange(format!("basis index {index} >= {n}")));
        }
        let mut amps = vec![ZERO; n];
        amps[index] = ONE;
        Self::new(amps, dims)
    }

    /// `sum_k |kk> / sqrt(d)`.
    pub fn maximally_entangled(d: usize) -> Result<Self> {
        let mut amps = vec![ZERO; d * d];
        let a = 1.0 / (d as f64).sqrt();
        for k in 0..d {
            amps[k * d + k] = C64::new(a, 0.0);
        }
        Self::new(amps, vec![d, d])
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix { matrix: ComplexMatrix::outer(&self.amplitudes), dims: self.dims.clone() }
    }
}

/// A Hermitian, positive semidefinite, unit-trace matrix with its subsystem
/// layout.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!("{}x{} matrix is not square", matrix.rows(), matrix.cols())));
        }
        check_dims(&dims, matrix.rows())?;
        let dev = matrix.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let m = hermitize(matrix.as_dmatrix());
        let tr = m.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min_eig = eigvalsh(&m).last().copied().unwrap_or(0.0);
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self { matrix: ComplexMatrix::from(m), dims })
    }

    /// Normalizes a positive semidefinite operator by its trace.
    pub fn from_unnormalized(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        let tr = matrix.trace().re;
        if tr.is_nan() || tr <= 0.0 || !tr.is_finite() {
            return Err(Error::InvalidState(format!("cannot normalize operator with trace {tr}")));
        }
        let dev = matrix.hermitian_deviation();
        if dev > HERMITIAN_TOL * tr.max(1.0) {
            return Err(Error::NotHermitian(dev));
        }
        let m = hermitize(matrix.as_dmatrix()) / C64::new(tr, 0.0);
        Self::new(ComplexMatrix::from(m), dims)
    }

    /// Internal constructor for operators that are valid by construction; only
    /// the Hermitian part is kept.
    pub(crate) fn from_raw(m: DMatrix<C64>, dims: Vec<usize>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), m.nrows());
        Self { matrix: ComplexMatrix::from(hermitize(&m)), dims }
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Result<Self> {
        let n: usize = dims.iter().product();
        check_dims(&dims, n)?;
        Ok(Self { matrix: ComplexMatrix::identity(n).scale(1.0 / n as f64), dims })
    }

    /// `φ_d = |Φ><Φ|` with `|Φ> = sum_k |kk>/sqrt(d)`, dims `[d, d]`.
    pub fn maximally_entangled(d: usize) -> Result<Self> {
        Ok(PureState::maximally_entangled(d)?.density())
    }

    pub fn basis(dims: Vec<usize>, index: usize) -> Result<Self> {
        Ok(PureState::basis(dims, index)?.density())
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub(crate) fn raw(&self) -> &DMatrix<C64> {
        self.matrix.as_dmatrix()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Eigenvalues in descending order, with rounding noise below zero clipped.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigvalsh(self.raw()).into_iter().map(|v| v.max(0.0)).collect()
    }

    pub fn purity(&self) -> f64 {
        (self.raw() * self.raw()).trace().re
    }

    /// Kronecker product; subsystem lists are concatenated.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let dims: Vec<usize> = self.dims.iter().chain(&other.dims).copied().collect();
        check_dims(&dims, self.dim() * other.dim())?;
        Ok(Self { matrix: self.matrix.kron(&other.matrix), dims })
    }

    /// Reduced state on the subsystems in `keep` (in original order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let keep = subsystems::normalize_indices(keep, self.dims.len())?;
        let dims: Vec<usize> = keep.iter().map(|&k| self.dims[k]).collect();
        if dims.is_empty() {
            return Err(Error::DimensionMismatch("cannot trace out every subsystem".into()));
        }
        Ok(Self::from_raw(subsystems::partial_trace(self.raw(), &self.dims, &keep), dims))
    }

    /// Transpose on the subsystems in `part`; the result need not be positive.
    pub fn partial_transpose(&self, part: &[usize]) -> Result<ComplexMatrix> {
        let part = subsystems::normalize_indices(part, self.dims.len())?;
        Ok(ComplexMatrix::from(subsystems::partial_transpose(self.raw(), &self.dims, &part)))
    }

    /// New subsystem `k` is old subsystem `order[k]`.
    pub fn permute(&self, order: &[usize]) -> Result<DensityMatrix> {
        let sorted = subsystems::normalize_indices(order, self.dims.len())?;
        if sorted.len() != self.dims.len() {
            return Err(Error::DimensionMismatch(format!("{order:?} is not a permutation")));
        }
        let dims = order.iter().map(|&k| self.dims[k]).collect();
        Ok(Self::from_raw(subsystems::permute(self.raw(), &self.dims, order), dims))
    }

    /// Mixture `weight * self + (1 - weight) * other`.
    pub fn mix(&self, weight: f64, other: &DensityMatrix) -> Result<DensityMatrix> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", self.dims, other.dims)));
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::OutOfRange(format!("mixing weight {weight}")));
        }
        let m = self.raw() * C64::new(weight, 0.0) + other.raw() * C64::new(1.0 - weight, 0.0);
        Ok(Self::from_raw(m, self.dims.clone()))
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        Ok(fidelity_and_trace_distance(self, other)?.1)
    }
}

fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let (vals, vecs) = eigh(m);
    spectral_map(&vals, &vecs, |v| v.max(0.0).sqrt())
}

/// Returns `(F, T)` with Uhlmann fidelity `F = ||sqrt(a) sqrt(b)||_1^2` and
/// trace distance `T = ||a - b||_1 / 2`.
pub fn fidelity_and_trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<(f64, f64)> {
    if a.dims != b.dims {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", a.dims, b.dims)));
    }
    let diff = a.raw() - b.raw();
    let distance = (0.5 * trace_norm_raw(&diff)).clamp(0.0, 1.0);
    let root = psd_sqrt(a.raw()) * psd_sqrt(b.raw());
    let fidelity = trace_norm_raw(&root).powi(2).clamp(0.0, 1.0);
    debug_assert!(hermitian_deviation(&diff) < 1e-9);
    Ok((fidelity, distance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eig_hermitian, trace_norm};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_state(dims: Vec<usize>, rng: &mut impl Rng) -> DensityMatrix {
        let n: usize = dims.iter().product();
        let g = ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        DensityMatrix::from_unnormalized(&g * &g.adjoint(), dims).unwrap()
    }

    #[test]
    fn tensor_of_maximally_mixed_qubits() {
        let half = DensityMatrix::maximally_mixed(vec![2]).unwrap();
        let t = half.tensor(&half).unwrap();
        assert_eq!(t.dims(), &[2, 2]);
        assert!(t.matrix().max_abs_diff(&ComplexMatrix::identity(4).scale(0.25)) < 1e-15);
    }

    #[test]
    fn tensor_of_basis_states() {
        let zero = DensityMatrix::basis(vec![2], 0).unwrap();
        let one = DensityMatrix::basis(vec![2], 1).unwrap();
        let t = zero.tensor(&one).unwrap();
        assert_eq!(t, DensityMatrix::basis(vec![2, 2], 1).unwrap());
    }

    #[test]
    fn tensor_of_two_bell_pairs_is_rank_one() {
        let phi = DensityMatrix::maximally_entangled(2).unwrap();
        let t = phi.tensor(&phi).unwrap();
        assert_eq!(t.dim(), 16);
        assert_abs_diff_eq!(t.matrix().trace().re, 1.0, epsilon = 1e-14);
        let eig = t.eigenvalues();
        assert_abs_diff_eq!(eig[0], 1.0, epsilon = 1e-12);
        assert!(eig[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn marginals() {
        let phi = DensityMatrix::maximally_entangled(2).unwrap();
        let a = phi.partial_trace(&[0]).unwrap();
        assert!(a.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);

        let state01 = DensityMatrix::basis(vec![2, 2], 1).unwrap();
        assert_eq!(state01.partial_trace(&[1]).unwrap(), DensityMatrix::basis(vec![2], 1).unwrap());
        assert!(matches!(state01.partial_trace(&[2]), Err(Error::InvalidSubsystem { .. })));
    }

    #[test]
    fn bell_partial_transpose_spectrum() {
        let phi = DensityMatrix::maximally_entangled(2).unwrap();
        let pt = phi.partial_transpose(&[1]).unwrap();
        let (vals, _) = eig_hermitian(&pt).unwrap();
        let expected = [0.5, 0.5, 0.5, -0.5];
        for (v, e) in vals.iter().zip(expected) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(trace_norm(&pt), 2.0, epsilon = 1e-14);
        assert!(phi.partial_transpose(&[5]).is_err());
    }

    #[test]
    fn partial_transpose_of_product_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_state(vec![2], &mut rng);
        let b = random_state(vec![3], &mut rng);
        let ab = a.tensor(&b).unwrap();
        let expected = a.matrix().kron(&b.matrix().transpose());
        assert!(ab.partial_transpose(&[1]).unwrap().max_abs_diff(&expected) < 1e-15);

        let mixed = DensityMatrix::maximally_mixed(vec![2, 2]).unwrap();
        assert_eq!(&mixed.partial_transpose(&[1]).unwrap(), mixed.matrix());
    }

    #[test]
    fn fidelity_and_distance_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_state(vec![3], &mut rng);
        let (f, t) = fidelity_and_trace_distance(&rho, &rho).unwrap();
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(t, 0.0, epsilon = 1e-14);

        let zero = DensityMatrix::basis(vec![2], 0).unwrap();
        let one = DensityMatrix::basis(vec![2], 1).unwrap();
        let (f, t) = fidelity_and_trace_distance(&zero, &one).unwrap();
        assert_abs_diff_eq!(f, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(t, 1.0, epsilon = 1e-14);

        // φ - I/4 has eigenvalues {3/4, -1/4, -1/4, -1/4}
        let phi = DensityMatrix::maximally_entangled(2).unwrap();
        let mixed = DensityMatrix::maximally_mixed(vec![2, 2]).unwrap();
        let (_, t) = fidelity_and_trace_distance(&phi, &mixed).unwrap();
        assert_abs_diff_eq!(t, 0.75, epsilon = 1e-14);

        assert!(fidelity_and_trace_distance(&zero, &mixed).is_err());
    }

    #[test]
    fn rejects_invalid_matrices() {
        let not_psd = ComplexMatrix::diagonal(&[1.5, -0.5]);
        assert!(DensityMatrix::new(not_psd, vec![2]).is_err());
        let bad_trace = ComplexMatrix::diagonal(&[0.5, 0.4]);
        assert!(DensityMatrix::new(bad_trace, vec![2]).is_err());
        assert!(matches!(
            DensityMatrix::maximally_mixed(vec![2; 7]),
            Err(Error::TooLarge { dim: 128, max: 64 })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn trace_of_tensor_recovers_factor(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_state(vec![da], &mut rng);
            let b = random_state(vec![db], &mut rng);
            let ab = a.tensor(&b).unwrap();
            prop_assert!(ab.partial_trace(&[0]).unwrap().matrix().max_abs_diff(a.matrix()) < 1e-12);
            prop_assert!(ab.partial_trace(&[1]).unwrap().matrix().max_abs_diff(b.matrix()) < 1e-12);
        }

        #[test]
        fn density_matrices_have_unit_trace_norm(seed in any::<u64>(), d in 1usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_state(vec![d], &mut rng);
            prop_assert!((trace_norm(rho.matrix()) - 1.0).abs() < 1e-12);
        }
    }
}
