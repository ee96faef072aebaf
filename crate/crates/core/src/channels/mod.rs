//! Quantum channels in Kraus form.
//!
//! Supported families: qudit erasure (flag on the last output index),
//! qubit dephasing, generalized amplitude damping, qubit Pauli channels and
//! the identity. Channel parameters parse from strings such as
//! `erasure:p=0.1,d=2` or `gadc:gamma=0.3,T=0.1`.

mod covariance;

pub(crate) use covariance::branches_with;
pub use covariance::{is_teleportation_covariant, simulate_via_choi, teleportation_branches, CovarianceCheck, TeleportationBranch};

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{subsystems, ComplexMatrix, DensityMatrix, C64, ZERO};

const KRAUS_TOL: f64 = 1e-10;
const MAX_INPUT_DIM: usize = 8;

/// Parameters of one of the supported channel families.
#[derive(Clone, Debug, PartialEq)]
pub enum ChannelParams {
    Erasure { p: f64, d: usize },
    Dephasing { p: f64 },
    Gadc { gamma: f64, t: f64 },
    Pauli { px: f64, py: f64, pz: f64 },
    Identity { d: usize },
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange(format!("{name}={v} is not in [0, 1]")));
    }
    Ok(())
}

fn check_dimension(d: usize) -> Result<()> {
    if !(2..=MAX_INPUT_DIM).contains(&d) {
        return Err(Error::OutOfRange(format!("d={d} is not in [2, {MAX_INPUT_DIM}]")));
    }
    Ok(())
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Erasure { p, d } => {
                check_probability("p", p)?;
                check_dimension(d)
            }
            Self::Dephasing { p } => check_probability("p", p),
            Self::Gadc { gamma, t } => {
                check_probability("gamma", gamma)?;
                check_probability("T", t)
            }
            Self::Pauli { px, py, pz } => {
                check_probability("px", px)?;
                check_probability("py", py)?;
                check_probability("pz", pz)?;
                if px + py + pz > 1.0 + 1e-12 {
                    return Err(Error::OutOfRange(format!("px+py+pz={} exceeds 1", px + py + pz)));
                }
                Ok(())
            }
            Self::Identity { d } => check_dimension(d),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Erasure { .. } => "erasure",
            Self::Dephasing { .. } => "dephasing",
            Self::Gadc { .. } => "gadc",
            Self::Pauli { .. } => "pauli",
            Self::Identity { .. } => "identity",
        }
    }

    pub fn input_dim(&self) -> usize {
        match *self {
            Self::Erasure { d, .. } | Self::Identity { d } => d,
            _ => 2,
        }
    }

    /// Returns a copy with parameter `key` replaced by `value`.
    pub fn with_param(&self, key: &str, value: f64) -> Result<Self> {
        let mut pairs = self.pairs();
        match pairs.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => {
                return Err(Error::Parse { token: key.into(), reason: format!("{} has no parameter `{key}`", self.kind()) })
            }
        }
        let map: Vec<(String, f64)> = pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        Self::from_pairs(self.kind(), &map)
    }

    fn pairs(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Self::Erasure { p, d } => vec![("p", p), ("d", d as f64)],
            Self::Dephasing { p } => vec![("p", p)],
            Self::Gadc { gamma, t } => vec![("gamma", gamma), ("T", t)],
            Self::Pauli { px, py, pz } => vec![("px", px), ("py", py), ("pz", pz)],
            Self::Identity { d } => vec![("d", d as f64)],
        }
    }

    fn from_pairs(kind: &str, pairs: &[(String, f64)]) -> Result<Self> {
        let allowed: &[&str] = match kind {
            "erasure" => &["p", "d"],
            "dephasing" => &["p"],
            "gadc" => &["gamma", "T"],
            "pauli" => &["px", "py", "pz"],
            "identity" => &["d"],
            _ => return Err(Error::Parse { token: kind.into(), reason: "unknown channel kind".into() }),
        };
        for (k, _) in pairs {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Parse { token: k.clone(), reason: format!("unknown parameter for {kind}") });
            }
        }
        let get = |key: &str| pairs.iter().rev().find(|(k, _)| k == key).map(|&(_, v)| v);
        let require = |key: &str| {
            get(key).ok_or_else(|| Error::Parse { token: kind.into(), reason: format!("missing parameter `{key}`") })
        };
        let dim = |key: &str| -> Result<usize> {
            let v = get(key).unwrap_or(2.0);
            if v.fract() != 0.0 || v < 0.0 {
                return Err(Error::Parse { token: format!("{key}={v}"), reason: "dimension must be an integer".into() });
            }
            Ok(v as usize)
        };
        let params = match kind {
            "erasure" => Self::Erasure { p: require("p")?, d: dim("d")? },
            "dephasing" => Self::Dephasing { p: require("p")? },
            "gadc" => Self::Gadc { gamma: require("gamma")?, t: require("T")? },
            "pauli" => Self::Pauli { px: get("px").unwrap_or(0.0), py: get("py").unwrap_or(0.0), pz: get("pz").unwrap_or(0.0) },
            _ => Self::Identity { d: dim("d")? },
        };
        params.validate()?;
        Ok(params)
    }
}

/// Accepts plain decimals such as `0.25`, `1`, `.5`.
pub(crate) fn parse_decimal(token: &str) -> Result<f64> {
    let digits = token.chars().filter(|c| c.is_ascii_digit()).count();
    let dots = token.chars().filter(|&c| c == '.').count();
    let valid = digits > 0 && dots <= 1 && token.chars().all(|c| c.is_ascii_digit() || c == '.');
    if !valid {
        return Err(Error::Parse { token: token.into(), reason: "expected a decimal number".into() });
    }
    token.parse().map_err(|_| Error::Parse { token: token.into(), reason: "expected a decimal number".into() })
}

/// Splits `kind:key=value,...` into the kind and its raw key/value tokens.
pub(crate) fn split_spec(s: &str) -> Result<(&str, Vec<(&str, &str)>)> {
    let (kind, rest) = s
        .split_once(':')
        .ok_or_else(|| Error::Parse { token: s.into(), reason: "expected `kind:key=value,...`".into() })?;
    let kind = kind.trim();
    let mut pairs = Vec::new();
    for item in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse { token: item.into(), reason: "expected `key=value`".into() })?;
        pairs.push((k.trim(), v.trim()));
    }
    Ok((kind, pairs))
}

impl FromStr for ChannelParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, raw) = split_spec(s)?;
        let pairs = raw.into_iter().map(|(k, v)| Ok((k.to_string(), parse_decimal(v)?))).collect::<Result<Vec<_>>>()?;
        Self::from_pairs(kind, &pairs)
    }
}

impl fmt::Display for ChannelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self
            .pairs()
            .into_iter()
            .map(|(k, v)| if k == "d" { format!("{k}={}", v as usize) } else { format!("{k}={v}") })
            .collect();
        write!(f, "{}:{}", self.kind(), body.join(","))
    }
}

/// A channel `ρ ↦ Σ K ρ K†` with `out_dim × in_dim` Kraus operators.
#[derive(Clone, Debug)]
pub struct QuantumChannel {
    kraus: Vec<ComplexMatrix>,
    in_dim: usize,
    out_dim: usize,
    label: String,
    params: Option<ChannelParams>,
}

impl QuantumChannel {
    /// Builds a channel from explicit Kraus operators, checking completeness.
    pub fn from_kraus(kraus: Vec<ComplexMatrix>, label: impl Into<String>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::DimensionMismatch("no Kraus operators".into()))?;
        let (out_dim, in_dim) = (first.rows(), first.cols());
        if kraus.iter().any(|k| k.rows() != out_dim || k.cols() != in_dim) {
            return Err(Error::DimensionMismatch("Kraus operators differ in shape".into()));
        }
        let mut sum = ComplexMatrix::zeros(in_dim, in_dim);
        for k in &kraus {
            sum = &sum + &(&k.adjoint() * k);
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(in_dim));
        if dev > KRAUS_TOL {
            return Err(Error::IncompleteKraus(dev));
        }
        Ok(Self { kraus, in_dim, out_dim, label: label.into(), params: None })
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn params(&self) -> Option<&ChannelParams> {
        self.params.as_ref()
    }

    /// Applies the channel to subsystem `subsystem` of `rho`.
    pub fn apply(&self, rho: &DensityMatrix, subsystem: usize) -> Result<DensityMatrix> {
        let dims = rho.dims();
        if subsystem >= dims.len() {
            return Err(Error::InvalidSubsystem { index: subsystem, count: dims.len() });
        }
        if dims[subsystem] != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "channel input dimension {} but subsystem {subsystem} has dimension {}",
                self.in_dim, dims[subsystem]
            )));
        }
        let mut out_dims = dims.to_vec();
        out_dims[subsystem] = self.out_dim;
        let total: usize = out_dims.iter().product();
        if total > crate::linalg::MAX_DIM {
            return Err(Error::TooLarge { dim: total, max: crate::linalg::MAX_DIM });
        }
        let out = self.apply_raw(rho.raw(), dims, subsystem);
        Ok(DensityMatrix::from_raw(out, out_dims))
    }

    pub(crate) fn apply_raw(&self, m: &DMatrix<C64>, dims: &[usize], subsystem: usize) -> DMatrix<C64> {
        let mut out: Option<DMatrix<C64>> = None;
        for k in &self.kraus {
            let big = subsystems::embed(k.as_dmatrix(), dims, subsystem);
            let term = &big * m * big.adjoint();
            out = Some(match out {
                Some(acc) => acc + term,
                None => term,
            });
        }
        out.expect("channel has Kraus operators")
    }

    /// Action on a single-system operator (not necessarily Hermitian).
    pub(crate) fn apply_operator(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::from_element(self.out_dim, self.out_dim, ZERO);
        for k in &self.kraus {
            let k = k.as_dmatrix();
            out += k * m * k.adjoint();
        }
        out
    }

    /// `J = (id ⊗ N)(φ_d)` with dims `[in_dim, out_dim]`.
    pub fn choi_state(&self) -> Result<DensityMatrix> {
        let phi = DensityMatrix::maximally_entangled(self.in_dim)?;
        self.apply(&phi, 1)
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn real_matrix(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |i, j| c(f(i, j)))
}

/// Constructs the Kraus representation for `params`.
pub fn make_channel(params: &ChannelParams) -> Result<QuantumChannel> {
    params.validate()?;
    let kraus = match *params {
        ChannelParams::Identity { d } => vec![ComplexMatrix::identity(d)],
        ChannelParams::Erasure { p, d } => {
            // intact branch embeds into the first d levels; flag is index d
            let mut ops = vec![real_matrix(d + 1, d, |i, j| if i == j { (1.0 - p).sqrt() } else { 0.0 })];
            for k in 0..d {
                ops.push(real_matrix(d + 1, d, |i, j| if i == d && j == k { p.sqrt() } else { 0.0 }));
            }
            ops
        }
        ChannelParams::Dephasing { p } => {
            vec![ComplexMatrix::diagonal(&[(1.0 - p).sqrt(), (1.0 - p).sqrt()]), ComplexMatrix::diagonal(&[p.sqrt(), -p.sqrt()])]
        }
        ChannelParams::Gadc { gamma, t } => {
            let k1 = ComplexMatrix::diagonal(&[(1.0 - t).sqrt(), ((1.0 - t) * (1.0 - gamma)).sqrt()]);
            let k2 = real_matrix(2, 2, |i, j| if (i, j) == (0, 1) { (gamma * (1.0 - t)).sqrt() } else { 0.0 });
            let k3 = ComplexMatrix::diagonal(&[(t * (1.0 - gamma)).sqrt(), t.sqrt()]);
            let k4 = real_matrix(2, 2, |i, j| if (i, j) == (1, 0) { (gamma * t).sqrt() } else { 0.0 });
            vec![k1, k2, k3, k4]
        }
        ChannelParams::Pauli { px, py, pz } => {
            let p0 = (1.0 - px - py - pz).max(0.0);
            let x = crate::linalg::generalized_pauli(2, 1, 0);
            let z = crate::linalg::generalized_pauli(2, 0, 1);
            let y = ComplexMatrix::from_row_major(2, 2, vec![ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO])?;
            vec![ComplexMatrix::identity(2).scale(p0.sqrt()), x.scale(px.sqrt()), y.scale(py.sqrt()), z.scale(pz.sqrt())]
        }
    };
    let mut channel = QuantumChannel::from_kraus(kraus, params.to_string())?;
    channel.params = Some(params.clone());
    Ok(channel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::PureState;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(d: usize, rng: &mut impl Rng) -> DensityMatrix {
        let g = ComplexMatrix::from_fn(d, d, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        DensityMatrix::from_unnormalized(&g * &g.adjoint(), vec![d]).unwrap()
    }

    fn kraus_deviation(ch: &QuantumChannel) -> f64 {
        let mut sum = ComplexMatrix::zeros(ch.in_dim(), ch.in_dim());
        for k in ch.kraus() {
            sum = &sum + &(&k.adjoint() * k);
        }
        sum.max_abs_diff(&ComplexMatrix::identity(ch.in_dim()))
    }

    #[test]
    fn parses_spec_strings() {
        assert_eq!("erasure:p=0.1,d=2".parse::<ChannelParams>().unwrap(), ChannelParams::Erasure { p: 0.1, d: 2 });
        assert_eq!("gadc:gamma=0.3,T=0.1".parse::<ChannelParams>().unwrap(), ChannelParams::Gadc { gamma: 0.3, t: 0.1 });
        assert_eq!("dephasing:p=0.05".parse::<ChannelParams>().unwrap(), ChannelParams::Dephasing { p: 0.05 });
        assert_eq!(
            "pauli:px=0.1,py=0.1,pz=0.1".parse::<ChannelParams>().unwrap(),
            ChannelParams::Pauli { px: 0.1, py: 0.1, pz: 0.1 }
        );
        assert_eq!("identity:d=3".parse::<ChannelParams>().unwrap(), ChannelParams::Identity { d: 3 });
    }

    #[test]
    fn parse_errors_name_the_token() {
        let err = "gadc:gamma=0.3,T=abc".parse::<ChannelParams>().unwrap_err();
        assert!(matches!(&err, Error::Parse { token, .. } if token == "abc"), "{err}");
        let err = "gadc:gamma=0.3,temp=0.1".parse::<ChannelParams>().unwrap_err();
        assert!(matches!(&err, Error::Parse { token, .. } if token == "temp"));
        let err = "bitflip:p=0.1".parse::<ChannelParams>().unwrap_err();
        assert!(matches!(&err, Error::Parse { token, .. } if token == "bitflip"));
        assert!("dephasing".parse::<ChannelParams>().is_err());
        assert!("dephasing:p=1e-3".parse::<ChannelParams>().is_err());
        assert!(matches!("dephasing:p=1.5".parse::<ChannelParams>(), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn display_round_trips() {
        for s in ["erasure:p=0.1,d=3", "gadc:gamma=0.3,T=0", "pauli:px=0.1,py=0,pz=0.2", "identity:d=2"] {
            let p: ChannelParams = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
            assert_eq!(p.to_string().parse::<ChannelParams>().unwrap(), p);
        }
    }

    #[test]
    fn amplitude_damping_limit_has_vanishing_thermal_kraus() {
        let ch = make_channel(&ChannelParams::Gadc { gamma: 0.4, t: 0.0 }).unwrap();
        assert_eq!(ch.kraus().len(), 4);
        assert_eq!(ch.kraus()[2].max_abs(), 0.0);
        assert_eq!(ch.kraus()[3].max_abs(), 0.0);
    }

    #[test]
    fn gadc_kraus_completeness() {
        let ch = make_channel(&ChannelParams::Gadc { gamma: 0.3, t: 0.2 }).unwrap();
        assert!(kraus_deviation(&ch) < 1e-12);
    }

    #[test]
    fn noiseless_erasure_is_an_embedding() {
        let ch = make_channel(&ChannelParams::Erasure { p: 0.0, d: 2 }).unwrap();
        assert_eq!(ch.out_dim(), 3);
        let plus = PureState::normalized(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)], vec![2]).unwrap().density();
        let out = ch.apply(&plus, 0).unwrap();
        assert_abs_diff_eq!(out.matrix().get(2, 2).re, 0.0);
        assert_abs_diff_eq!(out.matrix().get(0, 1).re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn total_erasure_outputs_flag() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ctx = random_state(2, &mut rng);
        let rho = random_state(2, &mut rng).tensor(&ctx).unwrap();
        let ch = make_channel(&ChannelParams::Erasure { p: 1.0, d: 2 }).unwrap();
        let out = ch.apply(&rho, 0).unwrap();
        let expected = DensityMatrix::basis(vec![3], 2).unwrap().tensor(&ctx).unwrap();
        assert!(out.matrix().max_abs_diff(expected.matrix()) < 1e-14);
    }

    #[test]
    fn identity_leaves_state_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_state(3, &mut rng);
        let ch = make_channel(&ChannelParams::Identity { d: 3 }).unwrap();
        assert!(ch.apply(&rho, 0).unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn apply_rejects_dimension_mismatch() {
        let rho = DensityMatrix::maximally_mixed(vec![3]).unwrap();
        let ch = make_channel(&ChannelParams::Dephasing { p: 0.1 }).unwrap();
        assert!(matches!(ch.apply(&rho, 0), Err(Error::DimensionMismatch(_))));
        assert!(matches!(ch.apply(&rho, 1), Err(Error::InvalidSubsystem { .. })));
    }

    #[test]
    fn dual_rail_output_matches_closed_form() {
        let (g1, g2) = (0.3, 0.45);
        // |ψ2> = (|01>|01> + |10>|10>)/√2 over qubits S1a S1b S2a S2b
        let mut amps = vec![ZERO; 16];
        amps[0b0101] = c(1.0 / 2f64.sqrt());
        amps[0b1010] = c(1.0 / 2f64.sqrt());
        let psi = PureState::new(amps, vec![2; 4]).unwrap();
        let a1 = make_channel(&ChannelParams::Gadc { gamma: g1, t: 0.0 }).unwrap();
        let a2 = make_channel(&ChannelParams::Gadc { gamma: g2, t: 0.0 }).unwrap();
        let mut rho = psi.density();
        for (q, ch) in [(0, &a1), (1, &a1), (2, &a2), (3, &a2)] {
            rho = ch.apply(&rho, q).unwrap();
        }
        let proj = |i: usize| DensityMatrix::basis(vec![2; 4], i).unwrap().matrix().clone();
        let mut expected = psi.density().matrix().scale((1.0 - g1) * (1.0 - g2));
        expected = &expected + &(&proj(0b0001) + &proj(0b0010)).scale(g1 * (1.0 - g2) / 2.0);
        expected = &expected + &(&proj(0b0100) + &proj(0b1000)).scale((1.0 - g1) * g2 / 2.0);
        expected = &expected + &proj(0).scale(g1 * g2);
        assert!(rho.matrix().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn choi_states() {
        let id = make_channel(&ChannelParams::Identity { d: 2 }).unwrap();
        assert!(id.choi_state().unwrap().matrix().max_abs_diff(DensityMatrix::maximally_entangled(2).unwrap().matrix()) < 1e-15);

        let p = 0.3;
        let er = make_channel(&ChannelParams::Erasure { p, d: 2 }).unwrap();
        let j = er.choi_state().unwrap();
        // (1-p) φ2 embedded in 2x3 plus p I/2 ⊗ |e><e|
        let mut expected = ComplexMatrix::zeros(6, 6);
        let phi_idx = [0, 4]; // |0,0> and |1,1> in the 2x3 layout
        for &r in &phi_idx {
            for &s in &phi_idx {
                expected = &expected + &ComplexMatrix::from_fn(6, 6, |i, k| if i == r && k == s { c((1.0 - p) / 2.0) } else { ZERO });
            }
        }
        for flag in [2, 5] {
            expected = &expected + &ComplexMatrix::from_fn(6, 6, |i, k| if i == flag && k == flag { c(p / 2.0) } else { ZERO });
        }
        assert!(j.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn dephasing_half_choi_is_ppt() {
        let ch = make_channel(&ChannelParams::Dephasing { p: 0.5 }).unwrap();
        let j = ch.choi_state().unwrap();
        let pt = j.partial_transpose(&[1]).unwrap();
        let (vals, _) = crate::linalg::eig_hermitian(&pt).unwrap();
        assert!(vals.iter().all(|&v| v > -1e-14));
        // classically correlated: diagonal in the computational basis
        for i in 0..4 {
            for k in 0..4 {
                if i != k {
                    assert!(j.matrix().get(i, k).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn dephasing_choi_marginal_matches_kraus_sum() {
        let ch = make_channel(&ChannelParams::Dephasing { p: 0.1 }).unwrap();
        let j = ch.choi_state().unwrap();
        let marginal = j.partial_trace(&[0]).unwrap();
        assert!(marginal.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn thermal_fixed_point_at_full_damping() {
        for t in [0.0, 0.1, 0.37, 1.0] {
            let ch = make_channel(&ChannelParams::Gadc { gamma: 1.0, t }).unwrap();
            let out = ch.apply(&DensityMatrix::maximally_mixed(vec![2]).unwrap(), 0).unwrap();
            assert_abs_diff_eq!(out.matrix().get(1, 1).re, t, epsilon = 1e-10);
        }
    }

    #[test]
    fn random_channel_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..500 {
            let params = match rng.random_range(0..5) {
                0 => ChannelParams::Erasure { p: rng.random(), d: rng.random_range(2..4) },
                1 => ChannelParams::Dephasing { p: rng.random() },
                2 => ChannelParams::Gadc { gamma: rng.random(), t: rng.random() },
                3 => {
                    let w: [f64; 4] = [rng.random(), rng.random(), rng.random(), rng.random()];
                    let s: f64 = w.iter().sum();
                    ChannelParams::Pauli { px: w[1] / s, py: w[2] / s, pz: w[3] / s }
                }
                _ => ChannelParams::Identity { d: rng.random_range(2..5) },
            };
            let ch = make_channel(&params).unwrap();
            assert!(kraus_deviation(&ch) < 1e-10, "{params}");
            let j = ch.choi_state().unwrap();
            let marginal = j.partial_trace(&[0]).unwrap();
            let target = ComplexMatrix::identity(ch.in_dim()).scale(1.0 / ch.in_dim() as f64);
            assert!(marginal.matrix().max_abs_diff(&target) < 1e-10);

            let rho = random_state(ch.in_dim(), &mut rng).tensor(&random_state(2, &mut rng)).unwrap();
            let out = ch.apply(&rho, 0).unwrap();
            assert_abs_diff_eq!(out.matrix().trace().re, 1.0, epsilon = 1e-12);
            assert!(out.eigenvalues().iter().all(|&v| v >= 0.0));
            // the validated constructor accepts the output
            DensityMatrix::new(out.matrix().clone(), out.dims().to_vec()).unwrap();
        }
    }
}
