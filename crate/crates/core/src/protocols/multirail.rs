//! Multi-rail encoding over generalized amplitude damping channels with
//! one-particle-sector post-selection on both sides.

use nalgebra::DMatrix;

use crate::channels::{make_channel, ChannelParams, QuantumChannel};
use crate::entropy::{coherent_information_state, reverse_coherent_information_state};
use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, C64, ZERO};

pub const MIN_RAILS: usize = 2;
pub const MAX_RAILS: usize = 6;

pub(crate) fn check_rails(k: usize) -> Result<()> {
    if !(MIN_RAILS..=MAX_RAILS).contains(&k) {
        return Err(Error::OutOfRange(format!("k={k} is not in [{MIN_RAILS}, {MAX_RAILS}]")));
    }
    Ok(())
}

pub(crate) fn gadc(gamma: f64, t: f64) -> Result<QuantumChannel> {
    make_channel(&ChannelParams::Gadc { gamma, t })
}

/// `N(|x><y|)` for `x, y ∈ {0, 1}`, indexed `[x][y]`.
fn unit_images(channel: &QuantumChannel) -> [[DMatrix<C64>; 2]; 2] {
    let image = |x: usize, y: usize| {
        let mut unit = DMatrix::from_element(2, 2, ZERO);
        unit[(x, y)] = C64::new(1.0, 0.0);
        channel.apply_operator(&unit)
    };
    [[image(0, 0), image(0, 1)], [image(1, 0), image(1, 1)]]
}

/// `<e_a| N^{⊗k}(|e_j><e_l|) |e_b>` for weight-one bit strings, as
/// `blocks[j][l][(a, b)]`. Rail `m` of `e_j` is excited iff `m == j`.
fn sector_blocks(channel: &QuantumChannel, k: usize) -> Vec<Vec<DMatrix<C64>>> {
    let n = unit_images(channel);
    let bit = |j: usize, m: usize| usize::from(j == m);
    (0..k)
        .map(|j| {
            (0..k)
                .map(|l| {
                    DMatrix::from_fn(k, k, |a, b| {
                        (0..k).fold(C64::new(1.0, 0.0), |acc, m| acc * n[bit(j, m)][bit(l, m)][(bit(a, m), bit(b, m))])
                    })
                })
                .collect()
        })
        .collect()
}

/// Success probability and post-selected logical state (dims `[k, k]`) of
/// the k-rail protocol.
pub fn multirail_postselected(gamma1: f64, gamma2: f64, t1: f64, t2: f64, k: usize) -> Result<(f64, DensityMatrix)> {
    check_rails(k)?;
    let first = sector_blocks(&gadc(gamma1, t1)?, k);
    let second = sector_blocks(&gadc(gamma2, t2)?, k);
    let mut rho = DMatrix::from_element(k * k, k * k, ZERO);
    for j in 0..k {
        for l in 0..k {
            rho += first[j][l].kronecker(&second[j][l]);
        }
    }
    rho /= C64::new(k as f64, 0.0);
    let q = rho.trace().re;
    if q <= 1e-300 {
        return Ok((0.0, DensityMatrix::maximally_mixed(vec![k, k])?));
    }
    let state = DensityMatrix::from_raw(rho / C64::new(q, 0.0), vec![k, k]);
    Ok((q, state))
}

/// Hashing rate of a post-selected state: the better coherent-information
/// direction, clamped at zero.
pub(crate) fn hashing_rate(state: &DensityMatrix) -> Result<f64> {
    let forward = coherent_information_state(state)?;
    let backward = reverse_coherent_information_state(state)?;
    Ok(forward.max(backward).max(0.0))
}

/// Achievable rate `q · I_c(ρ') / k` of the k-rail protocol, in ebits per
/// channel use.
pub fn multirail_rate(gamma1: f64, gamma2: f64, t1: f64, t2: f64, k: usize) -> Result<f64> {
    let (q, state) = multirail_postselected(gamma1, gamma2, t1, t2, k)?;
    if q == 0.0 {
        return Ok(0.0);
    }
    Ok(q * hashing_rate(&state)? / k as f64)
}

/// Best multi-rail rate over `k ∈ [2, 6]` and the rail count attaining it
/// (smallest on ties).
pub fn best_multirail_rate(gamma1: f64, gamma2: f64, t1: f64, t2: f64) -> Result<(f64, usize)> {
    let mut best = (f64::NEG_INFINITY, MIN_RAILS);
    for k in MIN_RAILS..=MAX_RAILS {
        let rate = multirail_rate(gamma1, gamma2, t1, t2, k)?;
        if rate > best.0 {
            best = (rate, k);
        }
    }
    Ok(best)
}
