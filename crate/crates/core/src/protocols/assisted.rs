//! Single-copy entanglement of assistance of `J₁ ⊗ J₂` by search over
//! rank-one projective measurements on the helper pair `S₁S₂`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channels::{ChannelParams, QuantumChannel};
use crate::entropy::entropy_raw;
use crate::error::{Error, Result};
use crate::linalg::random::random_unitary;
use crate::linalg::{eigh, subsystems, ComplexMatrix, C64, ONE, ZERO};

const MAX_HELPER_DIM: usize = 2;
const REFINE_STEPS: usize = 200;
const INITIAL_STEP: f64 = 0.1;
const MIN_PROBABILITY: f64 = 1e-14;

/// A rank-one projective measurement given by an orthonormal basis.
#[derive(Clone, Debug)]
pub struct MeasurementFamily {
    operators: Vec<ComplexMatrix>,
}

impl MeasurementFamily {
    /// Checks `Σ M_i = I` and `M_i ⪰ 0`, both within `1e-10`.
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = operators.first() else {
            return Err(Error::InvalidState("empty measurement".into()));
        };
        let n = first.rows();
        let mut sum = DMatrix::from_element(n, n, ZERO);
        for m in &operators {
            if m.rows() != n || m.cols() != n {
                return Err(Error::DimensionMismatch(format!("measurement operator is {}x{}, expected {n}x{n}", m.rows(), m.cols())));
            }
            let dev = m.hermitian_deviation();
            if dev > 1e-10 {
                return Err(Error::NotHermitian(dev));
            }
            let (values, _) = eigh(m.as_dmatrix());
            if values.last().is_some_and(|&v| v < -1e-10) {
                return Err(Error::InvalidState("measurement operator is not positive".into()));
            }
            sum += m.as_dmatrix();
        }
        let dev = (sum - DMatrix::identity(n, n)).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        if dev > 1e-10 {
            return Err(Error::InvalidState(format!("measurement is not complete (deviation {dev:e})")));
        }
        Ok(Self { operators })
    }

    fn from_basis(u: &DMatrix<C64>) -> Self {
        let operators = (0..u.ncols())
            .map(|j| {
                let v: Vec<C64> = u.column(j).iter().copied().collect();
                ComplexMatrix::outer(&v)
            })
            .collect();
        Self { operators }
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }
}

/// Best measurement found and its average distillable rate.
#[derive(Clone, Debug)]
pub struct AssistedSearch {
    pub value: f64,
    pub measurement: MeasurementFamily,
}

/// `J₁ ⊗ J₂` rearranged to `[S₁, S₂, A₁, A₂]`, viewed as a grid of
/// `out₁·out₂`-sized blocks indexed by the helper basis.
struct Assisted {
    joint: DMatrix<C64>,
    helper: usize,
    outputs: [usize; 2],
    sectors: [Vec<Vec<usize>>; 2],
}

/// Output index sets a receiver can distinguish locally without disturbing
/// the state within each set: the erasure flag is split off, other channels
/// have a single sector.
fn output_sectors(channel: &QuantumChannel) -> Vec<Vec<usize>> {
    match channel.params() {
        Some(&ChannelParams::Erasure { d, .. }) => vec![(0..d).collect(), vec![d]],
        _ => vec![(0..channel.out_dim()).collect()],
    }
}

impl Assisted {
    fn new(ch1: &QuantumChannel, ch2: &QuantumChannel) -> Result<Self> {
        for ch in [ch1, ch2] {
            if ch.in_dim() > MAX_HELPER_DIM {
                return Err(Error::TooLarge { dim: ch.in_dim(), max: MAX_HELPER_DIM });
            }
        }
        let j = ch1.choi_state()?.tensor(&ch2.choi_state()?)?;
        let joint = j.permute(&[0, 2, 1, 3])?;
        Ok(Self {
            joint: joint.raw().clone(),
            helper: ch1.in_dim() * ch2.in_dim(),
            outputs: [ch1.out_dim(), ch2.out_dim()],
            sectors: [output_sectors(ch1), output_sectors(ch2)],
        })
    }

    /// Unnormalized `<b|J|b>` on `A₁A₂`.
    fn conditional(&self, b: &[C64]) -> DMatrix<C64> {
        let a = self.outputs[0] * self.outputs[1];
        let mut out = DMatrix::from_element(a, a, ZERO);
        for s in 0..self.helper {
            for t in 0..self.helper {
                let w = b[s].conj() * b[t];
                if w == ZERO {
                    continue;
                }
                out += self.joint.view((s * a, t * a), (a, a)) * w;
            }
        }
        out
    }

    /// Hashing yield of an unnormalized state on `A₁A₂` after both receivers
    /// measure their sector and announce it.
    fn conditioned_yield(&self, sigma: &DMatrix<C64>) -> f64 {
        let n2 = self.outputs[1];
        let mut total = 0.0;
        for s1 in &self.sectors[0] {
            for s2 in &self.sectors[1] {
                let index: Vec<usize> = s1.iter().flat_map(|&a| s2.iter().map(move |&b| a * n2 + b)).collect();
                let block = DMatrix::from_fn(index.len(), index.len(), |i, j| sigma[(index[i], index[j])]);
                let p = block.trace().re;
                if p < MIN_PROBABILITY {
                    continue;
                }
                let block = block / C64::new(p, 0.0);
                let dims = [s1.len(), s2.len()];
                let ab = entropy_raw(&block);
                let e1 = entropy_raw(&subsystems::partial_trace(&block, &dims, &[0]));
                let e2 = entropy_raw(&subsystems::partial_trace(&block, &dims, &[1]));
                total += p * (e2 - ab).max(e1 - ab).max(0.0);
            }
        }
        total
    }

    /// `Σ_i p_i max(I_c(A₁⟩A₂), I_c(A₂⟩A₁), 0)` over outcomes of the basis in
    /// the columns of `u`, each outcome further resolved by output sector.
    fn objective(&self, u: &DMatrix<C64>) -> f64 {
        (0..u.ncols())
            .map(|j| {
                let b: Vec<C64> = u.column(j).iter().copied().collect();
                self.conditioned_yield(&self.conditional(&b))
            })
            .sum()
    }
}

/// Hermitian generators of `u(n)`: symmetric and antisymmetric off-diagonal
/// pairs, then diagonal units.
fn generators(n: usize) -> Vec<DMatrix<C64>> {
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in j + 1..n {
            let mut sym = DMatrix::from_element(n, n, ZERO);
            sym[(j, k)] = ONE;
            sym[(k, j)] = ONE;
            out.push(sym);
            let mut anti = DMatrix::from_element(n, n, ZERO);
            anti[(j, k)] = C64::new(0.0, -1.0);
            anti[(k, j)] = C64::new(0.0, 1.0);
            out.push(anti);
        }
    }
    for j in 0..n {
        let mut diag = DMatrix::from_element(n, n, ZERO);
        diag[(j, j)] = ONE;
        out.push(diag);
    }
    out
}

/// `exp(iθH)` for Hermitian `H`.
fn rotation(h: &DMatrix<C64>, theta: f64) -> DMatrix<C64> {
    let (values, vectors) = eigh(h);
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let phase = C64::from_polar(1.0, theta * v);
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    scaled * vectors.adjoint()
}

/// Coordinate search over `u ← u·exp(±iθH_c)`, cycling through the
/// generators; the step halves after a full cycle without improvement.
fn refine(problem: &Assisted, mut u: DMatrix<C64>, gens: &[DMatrix<C64>]) -> (f64, DMatrix<C64>) {
    let mut best = problem.objective(&u);
    let mut theta = INITIAL_STEP;
    let mut since_improvement = 0;
    for step in 0..REFINE_STEPS {
        let h = &gens[step % gens.len()];
        let mut improved = false;
        for sign in [1.0, -1.0] {
            let trial = &u * rotation(h, sign * theta);
            let value = problem.objective(&trial);
            if value > best {
                best = value;
                u = trial;
                improved = true;
                break;
            }
        }
        since_improvement = if improved { 0 } else { since_improvement + 1 };
        if since_improvement >= gens.len() {
            theta *= 0.5;
            since_improvement = 0;
        }
    }
    (best, u)
}

fn bell_basis() -> DMatrix<C64> {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    #[rustfmt::skip]
    let cols = [
        [s, ZERO, ZERO, s],
        [s, ZERO, ZERO, -s],
        [ZERO, s, s, ZERO],
        [ZERO, s, -s, ZERO],
    ];
    DMatrix::from_fn(4, 4, |i, j| cols[j][i])
}

/// Starting basis for candidate `index`: the Bell basis (when the helper is
/// two qubits), the computational basis, then Haar-random bases from
/// independent streams of `seed`.
fn candidate_basis(helper: usize, index: usize, seed: u64) -> DMatrix<C64> {
    match index {
        0 if helper == 4 => bell_basis(),
        0 | 1 => DMatrix::identity(helper, helper),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            random_unitary(helper, &mut rng)
        }
    }
}

/// Best of `n_measurements` refined candidate measurements. Candidates are
/// independent, so the value is nondecreasing in `n_measurements`.
pub fn assisted_distillation_search(ch1: &QuantumChannel, ch2: &QuantumChannel, n_measurements: usize, seed: u64) -> Result<AssistedSearch> {
    let problem = Assisted::new(ch1, ch2)?;
    let n = problem.helper;
    let gens = generators(n);
    let results: Vec<(f64, DMatrix<C64>)> = (0..n_measurements.max(1))
        .into_par_iter()
        .map(|i| refine(&problem, candidate_basis(n, i, seed), &gens))
        .collect();
    let mut best: Option<(f64, DMatrix<C64>)> = None;
    for r in results {
        if best.as_ref().is_none_or(|b| r.0 > b.0) {
            best = Some(r);
        }
    }
    let (value, u) = best.expect("at least one candidate");
    Ok(AssistedSearch { value, measurement: MeasurementFamily::from_basis(&u) })
}

/// Lower bound on the single-copy entanglement of assistance of the two
/// Choi states, hence on the distribution capacity of a
/// teleportation-covariant pair.
pub fn assisted_distillation_lower_bound(ch1: &QuantumChannel, ch2: &QuantumChannel, n_measurements: usize, seed: u64) -> Result<f64> {
    Ok(assisted_distillation_search(ch1, ch2, n_measurements, seed)?.value)
}
