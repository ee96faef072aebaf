//! Capacity bounds for entanglement distribution from a central source:
//! closed forms, the composition bound, multi-rail and assisted-distillation
//! achievable rates, and the Rains-information converse.

mod assisted;
mod multirail;

pub use assisted::{assisted_distillation_lower_bound, assisted_distillation_search, AssistedSearch, MeasurementFamily};
pub use multirail::{best_multirail_rate, multirail_postselected, multirail_rate, MAX_RAILS, MIN_RAILS};

pub(crate) use multirail::hashing_rate;

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::Serialize;

use crate::channels::{is_teleportation_covariant, make_channel, ChannelParams};
use crate::entropy::{binary_entropy, coherent_information_channel, reverse_coherent_information_channel};
use crate::error::{Error, Result};
use crate::rains::{rains_information_channel, MAX_RAINS_DIM};

/// Candidate measurements used by [`epr_bounds`] for the assisted search.
pub const ASSISTED_MEASUREMENTS: usize = 24;
/// Seed of the assisted search in [`epr_bounds`].
pub const ASSISTED_SEED: u64 = 0xa551_57ed;

const MAX_BOUNDS_INPUT_DIM: usize = 4;
const CONSISTENCY_TOL: f64 = 1e-6;

/// A two-sided bound with the origin of each endpoint.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundInterval {
    pub lower: f64,
    pub upper: f64,
    pub lower_source: String,
    pub upper_source: String,
}

impl BoundInterval {
    /// `lower ≤ upper + 1e-6`.
    pub fn is_consistent(&self) -> bool {
        self.lower <= self.upper + CONSISTENCY_TOL
    }
}

/// `(1 - p₁)(1 - p₂) log₂ d`.
pub fn erasure_capacity(p1: f64, p2: f64, d: usize) -> Result<f64> {
    for (name, p) in [("p1", p1), ("p2", p2)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange(format!("{name}={p} is not in [0, 1]")));
        }
    }
    if d < 2 {
        return Err(Error::OutOfRange(format!("d={d} is below 2")));
    }
    Ok((1.0 - p1) * (1.0 - p2) * (d as f64).log2())
}

/// `1 - h₂(p)` when every other channel's quantum-capacity lower bound is at
/// least that, `None` otherwise.
pub fn dephasing_ghz_capacity(p: f64, other_q_lower_bounds: &[f64]) -> Result<Option<f64>> {
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::OutOfRange(format!("p={p} is not in [0, 1/2]")));
    }
    let value = 1.0 - binary_entropy(p)?;
    Ok(other_q_lower_bounds.iter().all(|&q| q >= value).then_some(value))
}

/// The composition bound and the weaker `min{Q₁, Q₂}` it always dominates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Composition {
    pub value: f64,
    pub min_q: f64,
}

/// `max{min{Q₁, E₂}, min{Q₂, E₁}}` from quantum and CPP-assisted capacities.
pub fn composition_lower_bound(q1: f64, ecpp1: f64, q2: f64, ecpp2: f64) -> Result<Composition> {
    for (name, v) in [("Q1", q1), ("Ecpp1", ecpp1), ("Q2", q2), ("Ecpp2", ecpp2)] {
        if v.is_nan() || v < 0.0 {
            return Err(Error::OutOfRange(format!("{name}={v} is negative")));
        }
    }
    if ecpp1 < q1 || ecpp2 < q2 {
        return Err(Error::Inconsistent("CPP-assisted capacity below quantum capacity".into()));
    }
    let value = q1.min(ecpp2).max(q2.min(ecpp1));
    let min_q = q1.min(q2);
    debug_assert!(value >= min_q);
    Ok(Composition { value, min_q })
}

/// Single-channel figures feeding the bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelFigures {
    /// Lower bound on the quantum capacity.
    pub ic: f64,
    /// Reverse coherent information.
    pub ir: f64,
    /// Upper bound on the CPP-assisted capacity, when computable.
    pub rains: Option<f64>,
    pub closed_form: bool,
}

impl ChannelFigures {
    /// Lower bound on the CPP-assisted capacity.
    pub fn ecpp_lower(&self) -> f64 {
        self.ir.max(self.ic).max(0.0)
    }
}

fn compute_figures(params: &ChannelParams) -> Result<ChannelFigures> {
    params.validate()?;
    let closed = |ic: f64, ir: f64, rains: f64| Ok(ChannelFigures { ic, ir, rains: Some(rains), closed_form: true });
    match *params {
        ChannelParams::Identity { d } => {
            let v = (d as f64).log2();
            closed(v, v, v)
        }
        ChannelParams::Erasure { p, d } => {
            let log_d = (d as f64).log2();
            closed((1.0 - 2.0 * p).max(0.0) * log_d, (1.0 - p) * log_d, (1.0 - p) * log_d)
        }
        ChannelParams::Dephasing { p } => {
            let v = 1.0 - binary_entropy(p)?;
            closed(v, v, v)
        }
        ChannelParams::Gadc { .. } | ChannelParams::Pauli { .. } => {
            let channel = make_channel(params)?;
            let rains = if channel.in_dim() * channel.out_dim() <= MAX_RAINS_DIM { Some(rains_information_channel(&channel)?) } else { None };
            Ok(ChannelFigures {
                ic: coherent_information_channel(&channel),
                ir: reverse_coherent_information_channel(&channel),
                rains,
                closed_form: false,
            })
        }
    }
}

fn figures_cache() -> &'static Mutex<HashMap<String, ChannelFigures>> {
    static CACHE: OnceLock<Mutex<HashMap<String, ChannelFigures>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Coherent, reverse coherent and Rains information of a channel. Closed
/// forms are used for identity, erasure and dephasing channels; results are
/// memoized per parameter set for the life of the process.
pub fn channel_figures(params: &ChannelParams) -> Result<ChannelFigures> {
    let key = params.to_string();
    if let Some(hit) = figures_cache().lock().expect("figure cache").get(&key) {
        return Ok(hit.clone());
    }
    let figures = compute_figures(params)?;
    figures_cache().lock().expect("figure cache").insert(key, figures.clone());
    Ok(figures)
}

/// `min(p, 1 - p)`: dephasing with `p` and `1 - p` differ by a unitary.
fn effective_dephasing(params: &ChannelParams) -> Option<f64> {
    match *params {
        ChannelParams::Dephasing { p } => Some(p.min(1.0 - p)),
        _ => None,
    }
}

/// Exact value from the dephasing result: some channel is dephasing and every
/// other channel's coherent information reaches its capacity.
fn dephasing_exact(channels: &[ChannelParams], figures: &[ChannelFigures]) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    for (i, params) in channels.iter().enumerate() {
        let Some(p) = effective_dephasing(params) else { continue };
        let others: Vec<f64> = figures.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, f)| f.ic).collect();
        if let Some(v) = dephasing_ghz_capacity(p, &others)? {
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    Ok(best)
}

fn min_rains(figures: &[ChannelFigures]) -> (f64, String) {
    let finite: Vec<f64> = figures.iter().filter_map(|f| f.rains).collect();
    if finite.is_empty() {
        return (f64::INFINITY, "none".into());
    }
    let closed = figures.iter().all(|f| f.rains.is_none() || f.closed_form);
    let label = if closed { "rains:closed-form" } else { "rains" };
    (finite.into_iter().fold(f64::INFINITY, f64::min), label.into())
}

/// Everything [`epr_bounds`] computes, for reporting and sweeps.
#[derive(Clone, Debug, Serialize)]
pub struct EprReport {
    pub interval: BoundInterval,
    pub figures: [ChannelFigures; 2],
    pub composition: Composition,
    /// Best multi-rail rate and its rail count, for two GADCs.
    pub multirail: Option<(f64, usize)>,
    /// Assisted-distillation search value, for teleportation-covariant pairs
    /// whose interval is not already closed by an exact result.
    pub assisted: Option<f64>,
    /// Exact capacity, when a closed form applies.
    pub exact: Option<f64>,
}

fn check_bounds_input(params: &ChannelParams) -> Result<()> {
    params.validate()?;
    let d = params.input_dim();
    if d > MAX_BOUNDS_INPUT_DIM {
        return Err(Error::TooLarge { dim: d, max: MAX_BOUNDS_INPUT_DIM });
    }
    Ok(())
}

struct Candidate {
    value: f64,
    source: String,
}

fn pick(candidates: Vec<Candidate>) -> (f64, String) {
    let mut best = Candidate { value: 0.0, source: "trivial".into() };
    for c in candidates {
        if c.value > best.value {
            best = c;
        }
    }
    (best.value, best.source)
}

/// Bounds on the EPR distribution capacity of two channels with the full
/// breakdown of lower-bound candidates.
pub fn epr_report(ch1: &ChannelParams, ch2: &ChannelParams) -> Result<EprReport> {
    check_bounds_input(ch1)?;
    check_bounds_input(ch2)?;
    let figures = [channel_figures(ch1)?, channel_figures(ch2)?];
    let [f1, f2] = &figures;
    let composition = composition_lower_bound(f1.ic, f1.ecpp_lower(), f2.ic, f2.ecpp_lower())?;
    let mut candidates = vec![Candidate { value: composition.value, source: "composition".into() }];

    let mut exact = match (ch1, ch2) {
        (ChannelParams::Erasure { p: p1, d: d1 }, ChannelParams::Erasure { p: p2, d: d2 }) if d1 == d2 => {
            Some((erasure_capacity(*p1, *p2, *d1)?, "exact:erasure"))
        }
        _ => None,
    };
    if exact.is_none() {
        exact = dephasing_exact(&[ch1.clone(), ch2.clone()], &figures)?.map(|v| (v, "exact:dephasing"));
    }

    let multirail = match (ch1, ch2) {
        (ChannelParams::Gadc { gamma: g1, t: t1 }, ChannelParams::Gadc { gamma: g2, t: t2 }) => Some(best_multirail_rate(*g1, *g2, *t1, *t2)?),
        _ => None,
    };
    if let Some((rate, k)) = multirail {
        candidates.push(Candidate { value: rate, source: format!("multirail(k={k})") });
    }

    let mut assisted = None;
    if exact.is_none() && ch1.input_dim() == 2 && ch2.input_dim() == 2 {
        let (c1, c2) = (make_channel(ch1)?, make_channel(ch2)?);
        if is_teleportation_covariant(&c1).covariant && is_teleportation_covariant(&c2).covariant {
            let value = assisted_distillation_lower_bound(&c1, &c2, ASSISTED_MEASUREMENTS, ASSISTED_SEED)?;
            assisted = Some(value);
            candidates.push(Candidate { value, source: "assisted".into() });
        }
    }

    let interval = match exact {
        Some((value, label)) => BoundInterval { lower: value, upper: value, lower_source: label.into(), upper_source: label.into() },
        None => {
            let (lower, lower_source) = pick(candidates);
            let (upper, upper_source) = min_rains(&figures);
            BoundInterval { lower, upper, lower_source, upper_source }
        }
    };
    Ok(EprReport { interval, figures, composition, multirail, assisted, exact: exact.map(|e| e.0) })
}

/// Lower and upper bounds on the EPR distribution capacity of two channels.
pub fn epr_bounds(ch1: &ChannelParams, ch2: &ChannelParams) -> Result<BoundInterval> {
    Ok(epr_report(ch1, ch2)?.interval)
}

/// Lower and upper bounds on the GHZ distribution capacity of `N ≥ 3` qubit
/// channels.
pub fn ghz_bounds(channels: &[ChannelParams]) -> Result<BoundInterval> {
    let n = channels.len();
    if n < 3 {
        return Err(Error::OutOfRange(format!("GHZ bounds need at least 3 channels, got {n}")));
    }
    for params in channels {
        params.validate()?;
        if params.input_dim() != 2 {
            return Err(Error::OutOfRange(format!("`{params}` is not a qubit channel")));
        }
    }
    let figures: Vec<ChannelFigures> = channels.iter().map(channel_figures).collect::<Result<_>>()?;

    if let Some(value) = dephasing_exact(channels, &figures)? {
        let label = String::from("exact:dephasing");
        return Ok(BoundInterval { lower: value, upper: value, lower_source: label.clone(), upper_source: label });
    }

    let min_ic = figures.iter().map(|f| f.ic).fold(f64::INFINITY, f64::min);
    let mut pairwise = f64::INFINITY;
    let mut seen: HashMap<(String, String), f64> = HashMap::new();
    for i in 0..n {
        for j in i + 1..n {
            let key = (channels[i].to_string(), channels[j].to_string());
            let lower = match seen.get(&key) {
                Some(&v) => v,
                None => {
                    let v = epr_bounds(&channels[i], &channels[j])?.lower;
                    seen.insert(key, v);
                    v
                }
            };
            pairwise = pairwise.min(lower);
        }
    }
    let pairwise = n as f64 / (2.0 * (n as f64 - 1.0)) * pairwise;
    let (lower, lower_source) = pick(vec![
        Candidate { value: min_ic, source: "min-coherent-information".into() },
        Candidate { value: pairwise, source: "pairwise".into() },
    ]);
    let (upper, upper_source) = min_rains(&figures);
    Ok(BoundInterval { lower, upper, lower_source, upper_source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params(s: &str) -> ChannelParams {
        s.parse().unwrap()
    }

    fn h2(p: f64) -> f64 {
        binary_entropy(p).unwrap()
    }

    #[test]
    fn erasure_capacity_examples() {
        assert_abs_diff_eq!(erasure_capacity(0.1, 0.2, 2).unwrap(), 0.72, epsilon = 1e-15);
        assert_abs_diff_eq!(erasure_capacity(0.0, 0.0, 3).unwrap(), 3f64.log2(), epsilon = 1e-15);
        assert_eq!(erasure_capacity(1.0, 0.3, 4).unwrap(), 0.0);
        assert!(erasure_capacity(1.1, 0.3, 2).is_err());
        assert!(erasure_capacity(0.1, 0.3, 1).is_err());
    }

    #[test]
    fn dephasing_ghz_examples() {
        assert_eq!(dephasing_ghz_capacity(0.0, &[1.0, 1.0]).unwrap(), Some(1.0));
        assert_abs_diff_eq!(dephasing_ghz_capacity(0.1, &[0.8, 0.9]).unwrap().unwrap(), 1.0 - h2(0.1), epsilon = 1e-15);
        assert_abs_diff_eq!(1.0 - h2(0.1), 0.531, epsilon = 1e-4);
        assert_eq!(dephasing_ghz_capacity(0.1, &[0.3]).unwrap(), None);
        assert!(dephasing_ghz_capacity(0.6, &[]).is_err());
    }

    #[test]
    fn composition_examples() {
        assert_eq!(composition_lower_bound(1.0, 1.0, 1.0, 1.0).unwrap().value, 1.0);
        assert_eq!(composition_lower_bound(0.5, 0.7, 0.3, 0.6).unwrap().value, 0.5);
        // Q1 ≥ Ecpp2 collapses to Ecpp2
        assert_eq!(composition_lower_bound(0.8, 0.9, 0.2, 0.4).unwrap().value, 0.4);
        assert!(matches!(composition_lower_bound(0.5, 0.4, 0.1, 0.2), Err(Error::Inconsistent(_))));
        assert!(composition_lower_bound(-0.1, 0.4, 0.1, 0.2).is_err());
    }

    proptest! {
        #[test]
        fn composition_dominates_min_q(q1 in 0.0..2.0f64, e1 in 0.0..2.0f64, q2 in 0.0..2.0f64, e2 in 0.0..2.0f64) {
            let c = composition_lower_bound(q1, q1 + e1, q2, q2 + e2).unwrap();
            prop_assert!(c.value >= c.min_q);
            prop_assert_eq!(c.min_q, q1.min(q2));
        }
    }

    #[test]
    fn erasure_pairs_are_exact() {
        let b = epr_bounds(&params("erasure:p=0.1,d=2"), &params("erasure:p=0.2,d=2")).unwrap();
        assert_abs_diff_eq!(b.lower, 0.72, epsilon = 1e-12);
        assert_eq!(b.lower, b.upper);
        assert_eq!(b.lower_source, "exact:erasure");
        for i in 0..=10 {
            for j in 0..=10 {
                let (p1, p2) = (i as f64 / 10.0, j as f64 / 10.0);
                for d in [2, 3] {
                    let e1 = ChannelParams::Erasure { p: p1, d };
                    let e2 = ChannelParams::Erasure { p: p2, d };
                    let b = epr_bounds(&e1, &e2).unwrap();
                    let exact = erasure_capacity(p1, p2, d).unwrap();
                    assert_eq!((b.lower, b.upper), (exact, exact));
                }
            }
        }
    }

    #[test]
    fn mixed_dimension_erasure_pair_is_bracketed() {
        let b = epr_bounds(&params("erasure:p=0.1,d=2"), &params("erasure:p=0.1,d=3")).unwrap();
        assert!(b.is_consistent(), "{b:?}");
        assert_abs_diff_eq!(b.upper, 0.9, epsilon = 1e-12);
    }

    #[test]
    fn dephasing_pairs_collapse() {
        let b = epr_bounds(&params("dephasing:p=0.1"), &params("dephasing:p=0.1")).unwrap();
        assert_abs_diff_eq!(b.lower, 1.0 - h2(0.1), epsilon = 1e-12);
        assert_eq!(b.lower, b.upper);
        let b = epr_bounds(&params("dephasing:p=0.0"), &params("dephasing:p=0.0")).unwrap();
        assert_eq!((b.lower, b.upper), (1.0, 1.0));
        let b = epr_bounds(&params("dephasing:p=0.9"), &params("dephasing:p=0.2")).unwrap();
        assert_abs_diff_eq!(b.lower, 1.0 - h2(0.2), epsilon = 1e-12);
    }

    #[test]
    fn gadc_pair_uses_multirail() {
        let g = params("gadc:gamma=0.6,T=0");
        let r = epr_report(&g, &g).unwrap();
        let expected = 0.4 * 0.4 * 3f64.log2() / 3.0;
        assert!(r.interval.lower >= expected - 1e-12);
        assert_eq!(r.interval.lower_source, "multirail(k=3)");
        assert!(r.interval.upper > 0.0 && r.interval.is_consistent(), "{:?}", r.interval);
        assert_eq!(r.assisted, None);
    }

    #[test]
    fn covariant_pair_runs_assisted_search() {
        let r = epr_report(&params("pauli:px=0.05,py=0.05,pz=0.05"), &params("identity:d=2")).unwrap();
        let assisted = r.assisted.unwrap();
        assert!(assisted <= r.interval.upper + 1e-4, "{r:?}");
        assert!(r.interval.lower >= assisted);
        assert!(r.interval.is_consistent());
    }

    #[test]
    fn large_inputs_are_rejected() {
        assert!(matches!(epr_bounds(&params("identity:d=5"), &params("identity:d=2")), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn ghz_examples() {
        let z = params("dephasing:p=0.1");
        let id = params("identity:d=2");
        let b = ghz_bounds(&[z.clone(), z.clone(), z.clone()]).unwrap();
        assert_abs_diff_eq!(b.lower, 1.0 - h2(0.1), epsilon = 1e-12);
        assert_eq!(b.lower, b.upper);
        let b = ghz_bounds(&[z, id.clone(), id.clone()]).unwrap();
        assert_abs_diff_eq!(b.upper, 1.0 - h2(0.1), epsilon = 1e-12);
        assert_eq!(b.lower, b.upper);
        let b = ghz_bounds(&[id.clone(), id.clone(), id.clone()]).unwrap();
        assert_eq!((b.lower, b.upper), (1.0, 1.0));
    }

    #[test]
    fn ghz_without_closed_form() {
        let e = params("erasure:p=0.2,d=2");
        let b = ghz_bounds(&[e.clone(), e.clone(), e]).unwrap();
        // min I_c = 0.6, pairwise (3/4)·0.64 = 0.48, min Rains = 0.8
        assert_abs_diff_eq!(b.lower, 0.6, epsilon = 1e-12);
        assert_eq!(b.lower_source, "min-coherent-information");
        assert_abs_diff_eq!(b.upper, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn ghz_input_checks() {
        let id = params("identity:d=2");
        assert!(ghz_bounds(&[id.clone(), id.clone()]).is_err());
        assert!(ghz_bounds(&[id.clone(), id, params("identity:d=3")]).is_err());
    }
}
