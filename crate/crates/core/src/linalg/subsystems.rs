//! Index bookkeeping for operators on tensor-product spaces.
//!
//! Subsystem 0 is the most significant digit of a flat index, so the layout
//! matches `kron` in concatenation order.

use nalgebra::DMatrix;

use super::{C64, ZERO};
use crate::error::{Error, Result};

pub(crate) fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (k, &d) in dims.iter().enumerate().rev() {
        out[k] = index % d;
        index /= d;
    }
    out
}

pub(crate) fn flat(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Validates an index set against `count` subsystems and returns it sorted.
pub(crate) fn normalize_indices(indices: &[usize], count: usize) -> Result<Vec<usize>> {
    let mut out = indices.to_vec();
    out.sort_unstable();
    out.dedup();
    if out.len() != indices.len() {
        return Err(Error::DimensionMismatch(format!("repeated subsystem index in {indices:?}")));
    }
    if let Some(&bad) = out.iter().find(|&&i| i >= count) {
        return Err(Error::InvalidSubsystem { index: bad, count });
    }
    Ok(out)
}

/// Traces out every subsystem not listed in `keep` (which must be sorted).
pub(crate) fn partial_trace(m: &DMatrix<C64>, dims: &[usize], keep: &[usize]) -> DMatrix<C64> {
    let n = m.nrows();
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let out_dim: usize = kept_dims.iter().product();

    // (kept index, traced index) for every flat index
    let split: Vec<(usize, usize)> = (0..n)
        .map(|i| {
            let dg = digits(i, dims);
            let kd: Vec<usize> = keep.iter().map(|&k| dg[k]).collect();
            let td: Vec<usize> = traced.iter().map(|&k| dg[k]).collect();
            (flat(&kd, &kept_dims), flat(&td, &traced_dims))
        })
        .collect();

    let mut out = DMatrix::from_element(out_dim, out_dim, ZERO);
    for r in 0..n {
        let (kr, tr) = split[r];
        for c in 0..n {
            let (kc, tc) = split[c];
            if tr == tc {
                out[(kr, kc)] += m[(r, c)];
            }
        }
    }
    out
}

/// Transposes the listed subsystems.
pub(crate) fn partial_transpose(m: &DMatrix<C64>, dims: &[usize], part: &[usize]) -> DMatrix<C64> {
    apply_entry_map(m, &partial_transpose_map(dims, part))
}

/// For each column-major entry of an operator, the column-major position it
/// moves to under partial transposition of `part`.
pub(crate) fn partial_transpose_map(dims: &[usize], part: &[usize]) -> Vec<usize> {
    let n: usize = dims.iter().product();
    let all: Vec<Vec<usize>> = (0..n).map(|i| digits(i, dims)).collect();
    let mut map = vec![0; n * n];
    for c in 0..n {
        for r in 0..n {
            let mut dr = all[r].clone();
            let mut dc = all[c].clone();
            for &k in part {
                std::mem::swap(&mut dr[k], &mut dc[k]);
            }
            map[c * n + r] = flat(&dc, dims) * n + flat(&dr, dims);
        }
    }
    map
}

pub(crate) fn apply_entry_map(m: &DMatrix<C64>, map: &[usize]) -> DMatrix<C64> {
    let n = m.nrows();
    let mut out = DMatrix::from_element(n, n, ZERO);
    let dst = out.as_mut_slice();
    for (src, &to) in m.as_slice().iter().zip(map) {
        dst[to] = *src;
    }
    out
}

/// Reorders subsystems: new subsystem `k` is old subsystem `order[k]`.
pub(crate) fn permute(m: &DMatrix<C64>, dims: &[usize], order: &[usize]) -> DMatrix<C64> {
    let n = m.nrows();
    let new_dims: Vec<usize> = order.iter().map(|&k| dims[k]).collect();
    let map: Vec<usize> = (0..n)
        .map(|i| {
            let dg = digits(i, dims);
            let nd: Vec<usize> = order.iter().map(|&k| dg[k]).collect();
            flat(&nd, &new_dims)
        })
        .collect();
    let mut out = DMatrix::from_element(n, n, ZERO);
    for r in 0..n {
        for c in 0..n {
            out[(map[r], map[c])] = m[(r, c)];
        }
    }
    out
}

/// `I ⊗ op ⊗ I` with `op` acting on `subsystem`; `op` may be rectangular.
pub(crate) fn embed(op: &DMatrix<C64>, dims: &[usize], subsystem: usize) -> DMatrix<C64> {
    let left: usize = dims[..subsystem].iter().product();
    let right: usize = dims[subsystem + 1..].iter().product();
    DMatrix::<C64>::identity(left, left).kronecker(op).kronecker(&DMatrix::<C64>::identity(right, right))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digits_and_flat_are_inverse() {
        let dims = [2, 3, 4];
        for i in 0..24 {
            assert_eq!(flat(&digits(i, &dims), &dims), i);
        }
        assert_eq!(digits(23, &dims), vec![1, 2, 3]);
    }

    #[test]
    fn normalize_rejects_bad_indices() {
        assert_eq!(normalize_indices(&[1, 0], 2).unwrap(), vec![0, 1]);
        assert!(matches!(normalize_indices(&[2], 2), Err(Error::InvalidSubsystem { index: 2, count: 2 })));
        assert!(normalize_indices(&[0, 0], 2).is_err());
    }

    #[test]
    fn permute_swaps_kron_factors() {
        let a = DMatrix::from_fn(2, 2, |i, j| C64::new((i * 2 + j) as f64, 0.0));
        let b = DMatrix::from_fn(3, 3, |i, j| C64::new(0.0, (i * 3 + j) as f64));
        let ab = a.kronecker(&b);
        let ba = b.kronecker(&a);
        assert_eq!(permute(&ab, &[2, 3], &[1, 0]), ba);
    }
}
