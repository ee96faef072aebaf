//! Finite-n sampling of the distribution protocols.
//!
//! Every random draw comes from a ChaCha8 stream selected by `(seed, index)`,
//! where the index names a chunk, block or input. Work units run in parallel
//! and are combined in index order, so reports are identical bit for bit
//! whatever the thread count.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{branches_with, is_teleportation_covariant, make_channel, ChannelParams, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::random::random_pure_vector;
use crate::linalg::{trace_norm_raw, DensityMatrix, PureState, C64, ZERO};
use crate::protocols::{erasure_capacity, hashing_rate, multirail_rate, MAX_RAILS, MIN_RAILS};

const ERASURE_CHUNK: usize = 4096;
const JACKKNIFE_GROUPS: usize = 20;
/// Bell-measurement outcomes drawn per input in the teleportation check.
pub const TELEPORT_SAMPLES: usize = 64;

/// Outcome of a protocol simulation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub n_uses: usize,
    pub empirical_rate: f64,
    /// Standard error of `empirical_rate`.
    pub stderr: f64,
    pub success_prob_hat: f64,
    /// Binomial standard error of `success_prob_hat`.
    pub success_stderr: f64,
    pub analytic_rate: f64,
    pub seed: u64,
}

fn stream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn binomial_stderr(q: f64, n: usize) -> f64 {
    (q * (1.0 - q) / n as f64).max(0.0).sqrt()
}

/// Sends `n` pairs through two erasure channels and keeps the pairs where
/// neither flag fired.
pub fn simulate_erasure_protocol(p1: f64, p2: f64, d: usize, n: usize, seed: u64) -> Result<SimReport> {
    let analytic_rate = erasure_capacity(p1, p2, d)?;
    if n == 0 {
        return Err(Error::OutOfRange("n must be at least 1".into()));
    }
    let chunks = n.div_ceil(ERASURE_CHUNK);
    let successes: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, c);
            let len = ERASURE_CHUNK.min(n - c * ERASURE_CHUNK);
            (0..len)
                .filter(|_| {
                    let erased1 = rng.random::<f64>() < p1;
                    let erased2 = rng.random::<f64>() < p2;
                    !erased1 && !erased2
                })
                .count()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let q = successes as f64 / n as f64;
    let log_d = (d as f64).log2();
    let se = binomial_stderr(q, n);
    Ok(SimReport {
        n_uses: n,
        empirical_rate: q * log_d,
        stderr: se * log_d,
        success_prob_hat: q,
        success_stderr: se,
        analytic_rate,
        seed,
    })
}

/// Applies a single-qubit operator to qubit `q` (0 is most significant) of an
/// `n`-qubit state vector.
fn apply_qubit(op: &DMatrix<C64>, psi: &[C64], q: usize, n: usize) -> Vec<C64> {
    let mask = 1usize << (n - 1 - q);
    let mut out = vec![ZERO; psi.len()];
    for i in 0..psi.len() {
        if i & mask != 0 {
            continue;
        }
        let (a0, a1) = (psi[i], psi[i | mask]);
        out[i] = op[(0, 0)] * a0 + op[(0, 1)] * a1;
        out[i | mask] = op[(1, 0)] * a0 + op[(1, 1)] * a1;
    }
    out
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Per-group tallies of the multi-rail simulation: success count and the sum
/// of successful branch states.
struct RailTally {
    blocks: usize,
    successes: usize,
    state_sum: DMatrix<C64>,
}

/// One block: `ψ_k` through `2k` sampled Kraus trajectories and the sector
/// measurement on both sides. Returns the normalized logical branch on
/// success.
fn multirail_block(kraus: [&[DMatrix<C64>]; 2], k: usize, rng: &mut ChaCha8Rng) -> Option<Vec<C64>> {
    let n = 2 * k;
    let mut psi = vec![ZERO; 1 << n];
    let amp = C64::new(1.0 / (k as f64).sqrt(), 0.0);
    let rails: Vec<usize> = (0..k).map(|j| 1usize << (k - 1 - j)).collect();
    for &e in &rails {
        psi[(e << k) | e] = amp;
    }
    for q in 0..n {
        let ops = kraus[usize::from(q >= k)];
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = None;
        let mut last = None;
        for op in ops {
            let branch = apply_qubit(op, &psi, q, n);
            let w = norm_sqr(&branch);
            if w == 0.0 {
                continue;
            }
            acc += w;
            if u < acc {
                chosen = Some((branch, w));
                break;
            }
            last = Some((branch, w));
        }
        // rounding can leave u just above the accumulated total
        let (branch, w) = chosen.or(last).expect("Kraus branches are complete");
        let scale = 1.0 / w.sqrt();
        psi = branch.into_iter().map(|z| z * scale).collect();
    }
    let psi = &psi;
    let logical: Vec<C64> = rails.iter().flat_map(|&a| rails.iter().map(move |&b| psi[(a << k) | b])).collect();
    let p = norm_sqr(&logical);
    if p <= 0.0 || rng.random::<f64>() >= p {
        return None;
    }
    let scale = 1.0 / p.sqrt();
    Some(logical.into_iter().map(|z| z * scale).collect())
}

fn rail_kraus(gamma: f64, t: f64) -> Result<Vec<DMatrix<C64>>> {
    let channel = make_channel(&ChannelParams::Gadc { gamma, t })?;
    Ok(channel.kraus().iter().map(|m| m.as_dmatrix().clone()).collect())
}

/// `q · I_c(ρ̄) / k` from tallies, with `ρ̄` the mean successful branch.
fn rail_estimate(blocks: usize, successes: usize, state_sum: &DMatrix<C64>, k: usize) -> Result<f64> {
    if successes == 0 {
        return Ok(0.0);
    }
    let mean = DensityMatrix::from_raw(state_sum / C64::new(successes as f64, 0.0), vec![k, k]);
    Ok(successes as f64 / blocks as f64 * hashing_rate(&mean)? / k as f64)
}

/// Simulates `n_blocks` uses of the k-rail protocol by Kraus-trajectory
/// sampling. The rate estimate applies the hashing rate to the average of the
/// successful branch states, the state the receivers actually hold; its
/// standard error is a grouped jackknife.
pub fn simulate_multirail(gamma1: f64, gamma2: f64, t1: f64, t2: f64, k: usize, n_blocks: usize, seed: u64) -> Result<SimReport> {
    if !(MIN_RAILS..=MAX_RAILS).contains(&k) {
        return Err(Error::OutOfRange(format!("k={k} is not in [{MIN_RAILS}, {MAX_RAILS}]")));
    }
    if n_blocks == 0 {
        return Err(Error::OutOfRange("n_blocks must be at least 1".into()));
    }
    let analytic_rate = multirail_rate(gamma1, gamma2, t1, t2, k)?;
    let kraus = [rail_kraus(gamma1, t1)?, rail_kraus(gamma2, t2)?];
    let groups = JACKKNIFE_GROUPS.min(n_blocks);
    let tallies: Vec<RailTally> = (0..groups)
        .into_par_iter()
        .map(|g| {
            let start = g * n_blocks / groups;
            let end = (g + 1) * n_blocks / groups;
            let mut tally = RailTally { blocks: end - start, successes: 0, state_sum: DMatrix::from_element(k * k, k * k, ZERO) };
            for block in start..end {
                let mut rng = stream(seed, block);
                if let Some(branch) = multirail_block([&kraus[0], &kraus[1]], k, &mut rng) {
                    tally.successes += 1;
                    tally.state_sum += DMatrix::from_fn(k * k, k * k, |i, j| branch[i] * branch[j].conj());
                }
            }
            tally
        })
        .collect();

    let successes: usize = tallies.iter().map(|t| t.successes).sum();
    let state_sum = tallies.iter().fold(DMatrix::from_element(k * k, k * k, ZERO), |acc, t| acc + &t.state_sum);
    let rate = rail_estimate(n_blocks, successes, &state_sum, k)?;
    let stderr = if groups < 2 {
        0.0
    } else {
        let leave_out: Vec<f64> = tallies
            .iter()
            .map(|t| rail_estimate(n_blocks - t.blocks, successes - t.successes, &(&state_sum - &t.state_sum), k))
            .collect::<Result<_>>()?;
        let g = groups as f64;
        let mean = leave_out.iter().sum::<f64>() / g;
        ((g - 1.0) / g * leave_out.iter().map(|v| (v - mean).powi(2)).sum::<f64>()).sqrt()
    };
    let q = successes as f64 / n_blocks as f64;
    Ok(SimReport {
        n_uses: n_blocks,
        empirical_rate: rate,
        stderr,
        success_prob_hat: q,
        success_stderr: binomial_stderr(q, n_blocks),
        analytic_rate,
        seed,
    })
}

fn sample_index(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Largest trace distance, over `n_inputs` random pure inputs, between the
/// channel output and the average of corrected outputs over sampled
/// Bell-measurement outcomes of the Choi-state simulation.
pub fn simulate_teleportation_check(params: &ChannelParams, n_inputs: usize, seed: u64) -> Result<f64> {
    let channel: QuantumChannel = make_channel(params)?;
    let corrections = is_teleportation_covariant(&channel).corrections.ok_or_else(|| Error::NotCovariant(params.to_string()))?;
    let d = channel.in_dim();
    let n = channel.out_dim();
    let distances: Vec<f64> = (0..n_inputs)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let input = PureState::new(random_pure_vector(d, &mut rng), vec![d])?.density();
            let branches = branches_with(&channel, &corrections, &input)?;
            let weights: Vec<f64> = branches.iter().map(|b| b.probability.max(0.0)).collect();
            let mut acc = DMatrix::from_element(n, n, ZERO);
            for _ in 0..TELEPORT_SAMPLES {
                acc += branches[sample_index(&weights, &mut rng)].state.raw();
            }
            acc /= C64::new(TELEPORT_SAMPLES as f64, 0.0);
            let direct = channel.apply(&input, 0)?;
            Ok(0.5 * trace_norm_raw(&(acc - direct.raw())))
        })
        .collect::<Result<_>>()?;
    Ok(distances.into_iter().fold(0.0, f64::max))
}
