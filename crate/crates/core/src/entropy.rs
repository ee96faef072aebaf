//! Entropies (base 2) and the single-letter channel quantities built from
//! them: coherent information and reverse coherent information.

use nalgebra::DMatrix;

use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{eigh, eigvalsh, spectral_map, DensityMatrix, C64, ZERO};
use crate::optimize::{multistart_minimize, multistart_points, NelderMeadOptions};

/// Eigenvalues below this are left out of entropy sums.
const EIGEN_CUTOFF: f64 = 1e-12;
/// Weight of `ρ` outside the support of `σ` above which `D(ρ‖σ)` is infinite.
const SUPPORT_TOL: f64 = 1e-10;

const INPUT_STARTS: usize = 8;
const INPUT_SEED: u64 = 0x1c0_4e7;

pub(crate) fn entropy_of_spectrum(values: &[f64]) -> f64 {
    values.iter().filter(|&&v| v > EIGEN_CUTOFF).map(|&v| -v * v.log2()).sum::<f64>().max(0.0)
}

pub(crate) fn entropy_raw(m: &DMatrix<C64>) -> f64 {
    entropy_of_spectrum(&eigvalsh(m))
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_raw(rho.raw())
}

pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("p={p} is not in [0, 1]")));
    }
    Ok(entropy_of_spectrum(&[p, 1.0 - p]))
}

/// `Tr ρ (log ρ - log σ)` in bits; `+∞` when `ρ` has weight outside the
/// support of `σ`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dims() != sigma.dims() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", rho.dims(), sigma.dims())));
    }
    Ok(relative_entropy_raw(rho.raw(), sigma.raw()))
}

pub(crate) fn relative_entropy_raw(rho: &DMatrix<C64>, sigma: &DMatrix<C64>) -> f64 {
    let (values, vectors) = eigh(sigma);
    // ρ in the eigenbasis of σ: only the diagonal enters Tr ρ log σ
    let rotated = vectors.adjoint() * rho * &vectors;
    let mut cross = 0.0;
    let mut outside = 0.0;
    for (k, &v) in values.iter().enumerate() {
        let weight = rotated[(k, k)].re;
        if v > EIGEN_CUTOFF {
            cross += weight * v.log2();
        } else {
            outside += weight;
        }
    }
    if outside > SUPPORT_TOL {
        return f64::INFINITY;
    }
    (-entropy_raw(rho) - cross).max(0.0)
}

fn bipartite_entropies(rho: &DensityMatrix) -> Result<(f64, f64, f64)> {
    if rho.dims().len() != 2 {
        return Err(Error::DimensionMismatch(format!("expected a bipartite state, got dims {:?}", rho.dims())));
    }
    let a = von_neumann_entropy(&rho.partial_trace(&[0])?);
    let b = von_neumann_entropy(&rho.partial_trace(&[1])?);
    Ok((a, b, von_neumann_entropy(rho)))
}

/// `I_c(A⟩B) = S(B) - S(AB)`.
pub fn coherent_information_state(rho: &DensityMatrix) -> Result<f64> {
    let (_, b, ab) = bipartite_entropies(rho)?;
    Ok(b - ab)
}

/// `I_c(B⟩A) = S(A) - S(AB)`.
pub fn reverse_coherent_information_state(rho: &DensityMatrix) -> Result<f64> {
    let (a, _, ab) = bipartite_entropies(rho)?;
    Ok(a - ab)
}

/// Number of real parameters describing a `d`-dimensional input.
pub(crate) fn input_param_count(d: usize) -> usize {
    d * d
}

/// Parameters of the maximally mixed input (`L = I`).
pub(crate) fn maximally_mixed_params(d: usize) -> Vec<f64> {
    let mut x = vec![0.0; input_param_count(d)];
    x[..d].fill(1.0);
    x
}

/// `ρ = L L† / Tr(L L†)` where `L` is lower triangular with a real diagonal
/// taken from `x[..d]` and complex entries below it from the rest of `x`.
pub(crate) fn input_from_params(d: usize, x: &[f64]) -> DMatrix<C64> {
    let mut l = DMatrix::from_element(d, d, ZERO);
    let mut k = d;
    for i in 0..d {
        l[(i, i)] = C64::new(x[i], 0.0);
        for j in 0..i {
            l[(i, j)] = C64::new(x[k], x[k + 1]);
            k += 2;
        }
    }
    let rho = &l * l.adjoint();
    let tr = rho.trace().re;
    if tr <= 1e-300 {
        return DMatrix::identity(d, d).map(|z: C64| z / d as f64);
    }
    rho.map(|z| z / tr)
}

/// Entropies of the input, the channel output and the environment output.
/// The environment state is the Gram matrix `W_ij = Tr(K_i ρ K_j†)`.
pub(crate) fn channel_entropies(channel: &QuantumChannel, input: &DMatrix<C64>) -> (f64, f64, f64) {
    let kraus: Vec<&DMatrix<C64>> = channel.kraus().iter().map(|k| k.as_dmatrix()).collect();
    let applied: Vec<DMatrix<C64>> = kraus.iter().map(|k| *k * input).collect();
    let output = channel.apply_operator(input);
    let r = kraus.len();
    let gram = DMatrix::from_fn(r, r, |i, j| (&applied[i] * kraus[j].adjoint()).trace());
    (entropy_raw(input), entropy_raw(&output), entropy_raw(&gram))
}

/// `(id ⊗ N)(ψ)` for the canonical purification `ψ = (I ⊗ √ρ) Σ_k |kk>`,
/// with dims `[in_dim, out_dim]`.
pub(crate) fn purified_output(channel: &QuantumChannel, input: &DMatrix<C64>) -> DMatrix<C64> {
    let d = channel.in_dim();
    let (values, vectors) = eigh(input);
    let root = spectral_map(&values, &vectors, |v| v.max(0.0).sqrt());
    let psi: Vec<C64> = (0..d * d).map(|idx| root[(idx % d, idx / d)]).collect();
    let joint = DMatrix::from_fn(d * d, d * d, |i, j| psi[i] * psi[j].conj());
    channel.apply_raw(&joint, &[d, d], 1)
}

/// Best input found by the multi-start search and the value it attains.
#[derive(Clone, Debug)]
pub struct InputOptimum {
    pub value: f64,
    pub input: DensityMatrix,
}

/// Maximizes `objective` over input density matrices of `channel` using the
/// maximally mixed input plus seeded random starts.
pub(crate) fn maximize_over_inputs<F>(channel: &QuantumChannel, opts: &NelderMeadOptions, objective: F) -> InputOptimum
where
    F: Fn(&DMatrix<C64>) -> f64 + Sync,
{
    let d = channel.in_dim();
    let starts = multistart_points(maximally_mixed_params(d), INPUT_STARTS, INPUT_SEED);
    let best = multistart_minimize(|x: &[f64]| -objective(&input_from_params(d, x)), &starts, opts);
    InputOptimum { value: -best.value, input: DensityMatrix::from_raw(input_from_params(d, &best.x), vec![d]) }
}

/// Maximizer of `S(B) - S(AB)` over channel inputs.
pub fn optimize_coherent_information(channel: &QuantumChannel) -> InputOptimum {
    maximize_over_inputs(channel, &NelderMeadOptions::default(), |rho| {
        let (_, out, env) = channel_entropies(channel, rho);
        out - env
    })
}

/// Maximizer of `S(A) - S(AB)` over channel inputs.
pub fn optimize_reverse_coherent_information(channel: &QuantumChannel) -> InputOptimum {
    maximize_over_inputs(channel, &NelderMeadOptions::default(), |rho| {
        let (input, _, env) = channel_entropies(channel, rho);
        input - env
    })
}

/// `I_c(N)`, a lower bound on the quantum capacity. Pure inputs give zero, so
/// the value is never negative.
pub fn coherent_information_channel(channel: &QuantumChannel) -> f64 {
    optimize_coherent_information(channel).value.max(0.0)
}

/// `I_R(N)`, a lower bound on the two-way assisted capacity.
pub fn reverse_coherent_information_channel(channel: &QuantumChannel) -> f64 {
    optimize_reverse_coherent_information(channel).value
}
