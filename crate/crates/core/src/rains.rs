//! Rains relative entropy: `min D(ρ‖σ)` over `σ ⪰ 0` with `‖σ^{T_B}‖₁ ≤ 1`,
//! solved by projected gradient, and its maximization over channel inputs.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::channels::QuantumChannel;
use crate::entropy::{entropy_raw, input_from_params, maximally_mixed_params, purified_output};
use crate::error::{Error, Result};
use crate::linalg::subsystems::{apply_entry_map, normalize_indices, partial_transpose_map};
use crate::linalg::{eigh, eigvalsh, spectral_map, ComplexMatrix, DensityMatrix, C64};
use crate::optimize::{lbfgs, multistart_points, nelder_mead, LbfgsOptions, NelderMeadOptions};

/// Largest total dimension handled by the solver.
pub const MAX_RAINS_DIM: usize = 16;

const BARRIER_EPS: f64 = 1e-9;
const EIGEN_CUTOFF: f64 = 1e-12;
const SUPPORT_TOL: f64 = 1e-10;

const OUTER_STARTS: usize = 3;
const OUTER_SEED: u64 = 0x4a1_75ee;

/// Solver settings.
#[derive(Clone, Copy, Debug)]
pub struct RainsOptions {
    /// A run is accepted once the sampled linearization gap is at most this.
    pub gap_tol: f64,
    /// Iteration cap for each smoothing stage.
    pub max_iters: usize,
}

impl Default for RainsOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-5, max_iters: 500 }
    }
}

/// Value and certificate data of a Rains relative entropy computation.
#[derive(Clone, Debug, Serialize)]
pub struct RainsResult {
    /// Bits.
    pub value: f64,
    #[serde(skip)]
    pub minimizer: ComplexMatrix,
    pub gap_estimate: f64,
    pub iterations: usize,
}

/// Problem data shared by every step of one solve.
struct Problem<'a> {
    rho: &'a DMatrix<C64>,
    transpose_map: Vec<usize>,
    neg_entropy: f64,
}

impl Problem<'_> {
    fn transpose(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        apply_entry_map(m, &self.transpose_map)
    }

    fn transposed_norm(&self, m: &DMatrix<C64>) -> f64 {
        eigvalsh(&self.transpose(m)).iter().map(|v| v.abs()).sum()
    }

    /// `D(ρ‖σ)` in bits and, unless `σ` misses the support of `ρ`, the
    /// gradient of `σ ↦ -Tr ρ log₂ σ` evaluated at the slightly mixed
    /// `(1-ε)σ + ε I/n`.
    fn relative_entropy(&self, sigma: &DMatrix<C64>) -> (f64, Option<DMatrix<C64>>) {
        let n = sigma.nrows();
        let (values, vectors) = eigh(sigma);
        let rotated = vectors.adjoint() * self.rho * &vectors;
        let mut cross = 0.0;
        for (k, &v) in values.iter().enumerate() {
            let w = rotated[(k, k)].re;
            if v > EIGEN_CUTOFF {
                cross += w * v.log2();
            } else if w > SUPPORT_TOL {
                return (f64::INFINITY, None);
            }
        }
        let mixed: Vec<f64> = values.iter().map(|&v| (1.0 - BARRIER_EPS) * v.max(0.0) + BARRIER_EPS / n as f64).collect();
        // divided differences of ln
        let weighted = DMatrix::from_fn(n, n, |i, j| {
            let (a, b) = (mixed[i], mixed[j]);
            let dd = if (a - b).abs() <= 1e-12 * a.max(b) { 2.0 / (a + b) } else { (a.ln() - b.ln()) / (a - b) };
            rotated[(i, j)] * dd
        });
        let grad = (&vectors * weighted * vectors.adjoint()).map(|z| -z / LN_2);
        (self.neg_entropy - cross, Some(grad))
    }

    /// Scale-invariant form `D(ρ‖σ) + log₂ ‖σ^Γ‖₁` at `σ = A A†`, with the
    /// trace norm smoothed to `Σ √(λ² + μ²)`, and its gradient in `A`.
    fn smoothed(&self, a: &DMatrix<C64>, mu: f64) -> (f64, Option<DMatrix<C64>>) {
        let sigma = a * a.adjoint();
        let (value, grad) = self.relative_entropy(&sigma);
        let Some(grad) = grad else { return (value, None) };
        let (values, vectors) = eigh(&self.transpose(&sigma));
        let smooth: Vec<f64> = values.iter().map(|v| (v * v + mu * mu).sqrt()).collect();
        let norm: f64 = smooth.iter().sum();
        let slope = spectral_map(
            &values.iter().zip(&smooth).map(|(v, s)| v / s).collect::<Vec<_>>(),
            &vectors,
            |v| v / (norm * LN_2),
        );
        let total = grad + self.transpose(&slope);
        (value + norm.log2(), Some((total * a).map(|z| z * 2.0)))
    }

    /// Clips to the PSD cone, then scales into the trace-norm ball, giving an
    /// exactly feasible point.
    fn restore(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let psd = project_psd(m);
        let norm = self.transposed_norm(&psd);
        if norm > 1.0 {
            psd.map(|z| z / norm)
        } else {
            psd
        }
    }

    /// Largest `Tr G (σ - s)` over a sample of feasible points `s`, where `G`
    /// is the gradient of the objective at `σ`.
    fn sampled_gap(&self, sigma: &DMatrix<C64>, grad: &DMatrix<C64>) -> f64 {
        let n = sigma.nrows();
        let mut candidates = Vec::new();
        for t in [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0] {
            candidates.push(self.restore(&(sigma - grad.map(|z| z * t))));
        }
        let (_, vectors) = eigh(grad);
        let lowest = vectors.column(n - 1).clone_owned();
        candidates.push(self.restore(&(&lowest * lowest.adjoint())));
        let (_, tvectors) = eigh(&self.transpose(grad));
        for k in [0, n - 1] {
            let v = tvectors.column(k).clone_owned();
            candidates.push(self.restore(&self.transpose(&(&v * v.adjoint()))));
        }
        let norm = self.transposed_norm(sigma);
        if norm > 0.0 {
            candidates.push(sigma.map(|z| z / norm));
        }
        candidates.iter().map(|s| inner(grad, &(sigma - s))).fold(0.0, f64::max)
    }
}

/// `Re Tr(A† B)`.
fn inner(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

fn project_psd(m: &DMatrix<C64>) -> DMatrix<C64> {
    let (values, vectors) = eigh(m);
    if values.last().is_none_or(|&v| v >= 0.0) {
        return crate::linalg::hermitize(m);
    }
    spectral_map(&values, &vectors, |v| v.max(0.0))
}

fn to_params(a: &DMatrix<C64>) -> Vec<f64> {
    a.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn from_params(n: usize, x: &[f64]) -> DMatrix<C64> {
    DMatrix::from_iterator(n, n, x.chunks_exact(2).map(|c| C64::new(c[0], c[1])))
}

/// Factor `A` with `A A† = (1-δ) σ + δ I/n`.
fn mixed_root(sigma: &DMatrix<C64>, delta: f64) -> DMatrix<C64> {
    let n = sigma.nrows();
    let (values, vectors) = eigh(sigma);
    spectral_map(&values, &vectors, |v| ((1.0 - delta) * v.max(0.0) + delta / n as f64).sqrt())
}

pub(crate) fn solve(
    rho: &DMatrix<C64>,
    dims: &[usize],
    part: &[usize],
    warm_start: Option<&DMatrix<C64>>,
    opts: &RainsOptions,
) -> RainsResult {
    let problem = Problem { rho, transpose_map: partial_transpose_map(dims, part), neg_entropy: -entropy_raw(rho) };
    let n = rho.nrows();
    if problem.transposed_norm(rho) <= 1.0 + 1e-12 {
        // ρ itself is in the set
        return RainsResult { value: 0.0, minimizer: ComplexMatrix::from(problem.restore(rho)), gap_estimate: 0.0, iterations: 0 };
    }

    // Minimizing D(ρ‖σ) + log₂‖σ^Γ‖₁ over σ = A A† is equivalent to the
    // constrained problem: D(ρ‖cσ) = D(ρ‖σ) - log₂ c, so the optimum sits on
    // ‖σ^Γ‖₁ = 1 and normalizing any σ gives a feasible point of equal value.
    let (start, schedule): (DMatrix<C64>, &[f64]) = match warm_start.filter(|w| w.shape() == rho.shape()) {
        Some(warm) => (mixed_root(warm, 1e-6), &[1e-6]),
        None => (mixed_root(rho, 0.05), &[1e-3, 1e-6]),
    };
    let mut x = to_params(&start);
    let mut iterations = 0;
    let lbfgs_opts = LbfgsOptions { max_iters: opts.max_iters, ..LbfgsOptions::default() };
    let mut run_stage = |x: &mut Vec<f64>, mu: f64| {
        let f = |x: &[f64]| match problem.smoothed(&from_params(n, x), mu) {
            (value, Some(grad)) => (value, to_params(&grad)),
            (value, None) => (value, vec![0.0; x.len()]),
        };
        let m = lbfgs(&f, x, &lbfgs_opts);
        iterations += m.evals;
        *x = m.x;
    };
    for &mu in schedule {
        run_stage(&mut x, mu);
    }
    let finish = |x: &[f64]| {
        let a = from_params(n, x);
        let sigma = problem.restore(&(&a * a.adjoint()));
        let sigma = sigma.map(|z| z / problem.transposed_norm(&sigma).max(f64::MIN_POSITIVE));
        let (value, grad) = problem.relative_entropy(&sigma);
        let gap = grad.map_or(f64::INFINITY, |g| problem.sampled_gap(&sigma, &g));
        (sigma, value, gap)
    };
    let (mut sigma, mut value, mut gap) = finish(&x);
    for _ in 0..2 {
        if gap <= opts.gap_tol {
            break;
        }
        run_stage(&mut x, 1e-8);
        (sigma, value, gap) = finish(&x);
    }
    RainsResult { value: value.max(0.0), minimizer: ComplexMatrix::from(sigma), gap_estimate: gap, iterations }
}

fn check_problem(rho: &DensityMatrix, b_side: &[usize]) -> Result<Vec<usize>> {
    if rho.dim() > MAX_RAINS_DIM {
        return Err(Error::TooLarge { dim: rho.dim(), max: MAX_RAINS_DIM });
    }
    let part = normalize_indices(b_side, rho.dims().len())?;
    if part.is_empty() || part.len() == rho.dims().len() {
        return Err(Error::DimensionMismatch("bipartition must leave both sides nonempty".into()));
    }
    Ok(part)
}

/// Rains relative entropy of `rho` across the cut separating the subsystems
/// in `b_side` from the rest.
pub fn rains_relative_entropy(rho: &DensityMatrix, b_side: &[usize]) -> Result<RainsResult> {
    rains_relative_entropy_with(rho, b_side, &RainsOptions::default())
}

pub fn rains_relative_entropy_with(rho: &DensityMatrix, b_side: &[usize], opts: &RainsOptions) -> Result<RainsResult> {
    let part = check_problem(rho, b_side)?;
    Ok(solve(rho.raw(), rho.dims(), &part, None, opts))
}

/// Rains information `max_ρ R(A;B)` over inputs of `channel`, with the
/// output across the input/output cut.
pub fn rains_information_channel(channel: &QuantumChannel) -> Result<f64> {
    Ok(rains_information_optimum(channel)?.value)
}

/// Rains information together with the maximizing input.
pub fn rains_information_optimum(channel: &QuantumChannel) -> Result<crate::entropy::InputOptimum> {
    let d = channel.in_dim();
    let dims = [d, channel.out_dim()];
    let total = d * channel.out_dim();
    if total > MAX_RAINS_DIM {
        return Err(Error::TooLarge { dim: total, max: MAX_RAINS_DIM });
    }
    let opts = RainsOptions::default();
    let outer = NelderMeadOptions { tol: 1e-4, initial_step: 0.3, max_evals: 400 };
    let starts = multistart_points(maximally_mixed_params(d), OUTER_STARTS, OUTER_SEED);

    // Starts run sequentially so each inner solve can warm-start from the
    // previous minimizer; the inner problem is convex so the warm start only
    // changes the iteration count, not the value beyond solver tolerance.
    let mut best: Option<(f64, Vec<f64>)> = None;
    let warm = std::cell::RefCell::new(None::<DMatrix<C64>>);
    for x0 in &starts {
        let f = |x: &[f64]| {
            let input = input_from_params(d, x);
            let joint = purified_output(channel, &input);
            let result = solve(&joint, &dims, &[1], warm.borrow().as_ref(), &opts);
            *warm.borrow_mut() = Some(result.minimizer.into_dmatrix());
            -result.value
        };
        let m = nelder_mead(&f, x0, &outer);
        if best.as_ref().is_none_or(|(v, _)| -m.value > *v) {
            best = Some((-m.value, m.x));
        }
    }
    let (value, x) = best.expect("at least one start");
    Ok(crate::entropy::InputOptimum { value, input: DensityMatrix::from_raw(input_from_params(d, &x), vec![d]) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{make_channel, ChannelParams};
    use approx::assert_abs_diff_eq;

    #[test]
    fn bell_state_has_one_bit() {
        let phi = DensityMatrix::maximally_entangled(2).unwrap();
        let r = rains_relative_entropy(&phi, &[1]).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-5);
        assert!(r.gap_estimate <= 1e-5);
    }

    #[test]
    fn product_state_has_zero() {
        let a = DensityMatrix::basis(vec![2], 0).unwrap();
        let b = DensityMatrix::maximally_mixed(vec![2]).unwrap();
        let r = rains_relative_entropy(&a.tensor(&b).unwrap(), &[1]).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn erased_bell_pair() {
        let ch = make_channel(&ChannelParams::Erasure { p: 0.3, d: 2 }).unwrap();
        let r = rains_relative_entropy(&ch.choi_state().unwrap(), &[1]).unwrap();
        assert_abs_diff_eq!(r.value, 0.7, epsilon = 1e-5);
    }

    #[test]
    fn rejects_large_states() {
        let rho = DensityMatrix::maximally_mixed(vec![3, 3, 2]).unwrap();
        assert!(matches!(rains_relative_entropy(&rho, &[2]), Err(Error::TooLarge { .. })));
        let rho = DensityMatrix::maximally_mixed(vec![2, 2]).unwrap();
        assert!(rains_relative_entropy(&rho, &[0, 1]).is_err());
    }
}
