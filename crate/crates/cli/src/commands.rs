//! Subcommand implementations. Each returns a JSON document, a one-line
//! human summary and whether the internal consistency checks passed.

use std::fs;

use entdist::channels::ChannelParams;
use entdist::montecarlo::{simulate_erasure_protocol, simulate_multirail, simulate_teleportation_check, SimReport};
use entdist::protocols::{epr_report, ghz_bounds, BoundInterval};
use entdist::Error;
use serde_json::{json, Value};

use crate::format::{canonical_json, csv_cell, format_float, number, optional};
use crate::sweep::{render_csv, render_json, run_sweep, OutputFormat, SweepSpec};

/// Maximum deviation, in standard errors, accepted between a simulated and
/// an analytic rate.
pub const SIGMA_TOLERANCE: f64 = 5.0;
/// Tolerance on the rate difference when the standard error is zero.
pub const EXACT_TOLERANCE: f64 = 1e-9;
/// Largest trace distance accepted by the teleportation check.
pub const TELEPORT_TOLERANCE: f64 = 1e-8;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or out-of-range input.
    Parse(String),
    /// A numerical routine failed.
    Compute(String),
    /// Output could not be written.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse(_) => 2,
            Self::Compute(_) | Self::Io(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Parse(m) | Self::Compute(m) | Self::Io(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::OutOfRange(_) | Error::TooLarge { .. } | Error::NotCovariant(_) => Self::Parse(e.to_string()),
            _ => Self::Compute(e.to_string()),
        }
    }
}

/// A finished command.
#[derive(Debug)]
pub struct Outcome {
    /// Text for stdout or `--out`.
    pub output: String,
    /// Human-readable summary for stderr.
    pub summary: String,
    pub consistent: bool,
}

/// Parses a channel spec, reporting the offending token on failure.
pub fn parse_channel(spec: &str) -> Result<ChannelParams, CliError> {
    spec.parse().map_err(|e: Error| CliError::Parse(format!("{e} (in `{spec}`)")))
}

fn fmt(x: f64) -> String {
    format_float(x).unwrap_or_else(|| x.to_string())
}

fn interval_json(b: &BoundInterval) -> Value {
    json!({
        "lower": number(b.lower),
        "upper": number(b.upper),
        "lower_source": b.lower_source,
        "upper_source": b.upper_source,
        "consistent": b.is_consistent(),
    })
}

fn render(value: &Value, csv: Option<String>, format: OutputFormat) -> String {
    match (format, csv) {
        (OutputFormat::Csv, Some(text)) => text,
        _ => canonical_json(value),
    }
}

fn interval_csv(b: &BoundInterval) -> String {
    format!("lower,upper,lower_source,upper_source\n{},{},{},{}\n", csv_cell(Some(b.lower)), csv_cell(Some(b.upper)), b.lower_source, b.upper_source)
}

/// EPR bounds for two channels, GHZ bounds for three or more.
pub fn bounds(specs: &[String], format: OutputFormat) -> Result<Outcome, CliError> {
    if specs.len() < 2 {
        return Err(CliError::Parse("bounds needs at least two channel specs".into()));
    }
    let channels: Vec<ChannelParams> = specs.iter().map(|s| parse_channel(s)).collect::<Result<_, _>>()?;
    let names: Vec<String> = channels.iter().map(ToString::to_string).collect();
    let (value, interval) = if channels.len() == 2 {
        let r = epr_report(&channels[0], &channels[1])?;
        let mut value = interval_json(&r.interval);
        value["target"] = json!("epr");
        value["channels"] = json!(names);
        value["components"] = json!({
            "ic1": number(r.figures[0].ic),
            "ic2": number(r.figures[1].ic),
            "ir1": number(r.figures[0].ir),
            "ir2": number(r.figures[1].ir),
            "rains1": optional(r.figures[0].rains),
            "rains2": optional(r.figures[1].rains),
            "composition": number(r.composition.value),
            "multirail": optional(r.multirail.map(|m| m.0)),
            "multirail_k": r.multirail.map_or(Value::Null, |m| json!(m.1)),
            "assisted": optional(r.assisted),
        });
        (value, r.interval)
    } else {
        let b = ghz_bounds(&channels)?;
        let mut value = interval_json(&b);
        value["target"] = json!("ghz");
        value["channels"] = json!(names);
        (value, b)
    };
    let summary = format!(
        "{} bounds: {} ≤ E ≤ {} (lower: {}, upper: {})",
        if channels.len() == 2 { "EPR" } else { "GHZ" },
        fmt(interval.lower),
        fmt(interval.upper),
        interval.lower_source,
        interval.upper_source
    );
    let output = render(&value, Some(interval_csv(&interval)), format);
    Ok(Outcome { output, summary, consistent: interval.is_consistent() })
}

/// Runs a sweep and renders it in the requested format.
pub fn sweep(spec: &SweepSpec) -> Result<Outcome, CliError> {
    let rows = run_sweep(spec)?;
    let output = match spec.format {
        OutputFormat::Csv => render_csv(spec, &rows),
        OutputFormat::Json => canonical_json(&render_json(spec, &rows)),
    };
    let inconsistent = rows.iter().filter(|r| !r.consistent).count();
    let summary = format!("swept {} over {} points; {} inconsistent", spec.parameter_label(), rows.len(), inconsistent);
    Ok(Outcome { output, summary, consistent: inconsistent == 0 })
}

fn rate_consistent(r: &SimReport) -> bool {
    let diff = (r.empirical_rate - r.analytic_rate).abs();
    if r.stderr > 0.0 {
        diff <= SIGMA_TOLERANCE * r.stderr
    } else {
        diff <= EXACT_TOLERANCE
    }
}

fn report_json(protocol: &str, params: Value, r: &SimReport) -> (Value, bool) {
    let consistent = rate_consistent(r);
    let value = json!({
        "protocol": protocol,
        "params": params,
        "n_uses": r.n_uses,
        "empirical_rate": number(r.empirical_rate),
        "stderr": number(r.stderr),
        "success_prob_hat": number(r.success_prob_hat),
        "success_stderr": number(r.success_stderr),
        "analytic_rate": number(r.analytic_rate),
        "seed": r.seed,
        "consistent": consistent,
    });
    (value, consistent)
}

fn report_csv(r: &SimReport) -> String {
    format!(
        "n_uses,empirical_rate,stderr,success_prob_hat,success_stderr,analytic_rate,seed\n{},{},{},{},{},{},{}\n",
        r.n_uses,
        csv_cell(Some(r.empirical_rate)),
        csv_cell(Some(r.stderr)),
        csv_cell(Some(r.success_prob_hat)),
        csv_cell(Some(r.success_stderr)),
        csv_cell(Some(r.analytic_rate)),
        r.seed
    )
}

fn report_summary(protocol: &str, r: &SimReport) -> String {
    format!(
        "{protocol}: rate {} ± {} (analytic {}), success {} over {} uses, seed {}",
        fmt(r.empirical_rate),
        fmt(r.stderr),
        fmt(r.analytic_rate),
        fmt(r.success_prob_hat),
        r.n_uses,
        r.seed
    )
}

/// Erasure flag-and-discard protocol.
pub fn simulate_erasure(p1: f64, p2: f64, d: usize, n: usize, seed: u64, format: OutputFormat) -> Result<Outcome, CliError> {
    let r = simulate_erasure_protocol(p1, p2, d, n, seed)?;
    let (value, consistent) = report_json("erasure", json!({"p1": number(p1), "p2": number(p2), "d": d}), &r);
    Ok(Outcome { output: render(&value, Some(report_csv(&r)), format), summary: report_summary("erasure", &r), consistent })
}

/// Multi-rail post-selection protocol over two GADCs.
#[allow(clippy::too_many_arguments)]
pub fn simulate_rails(
    gamma1: f64,
    gamma2: f64,
    t1: f64,
    t2: f64,
    k: usize,
    n: usize,
    seed: u64,
    format: OutputFormat,
) -> Result<Outcome, CliError> {
    let r = simulate_multirail(gamma1, gamma2, t1, t2, k, n, seed)?;
    let params = json!({"gamma1": number(gamma1), "gamma2": number(gamma2), "T1": number(t1), "T2": number(t2), "k": k});
    let (value, consistent) = report_json("multirail", params, &r);
    Ok(Outcome { output: render(&value, Some(report_csv(&r)), format), summary: report_summary("multirail", &r), consistent })
}

/// Choi-state simulation versus direct channel action.
pub fn teleport_check(spec: &str, n: usize, seed: u64, format: OutputFormat) -> Result<Outcome, CliError> {
    let channel = parse_channel(spec)?;
    let distance = simulate_teleportation_check(&channel, n, seed)?;
    let consistent = distance <= TELEPORT_TOLERANCE;
    let value = json!({
        "protocol": "teleport-check",
        "channel": channel.to_string(),
        "n_inputs": n,
        "seed": seed,
        "max_trace_distance": number(distance),
        "consistent": consistent,
    });
    let csv = format!("channel,n_inputs,seed,max_trace_distance\n{channel},{n},{seed},{}\n", csv_cell(Some(distance)));
    let summary = format!("teleport-check {channel}: max trace distance {distance:e} over {n} inputs");
    Ok(Outcome { output: render(&value, Some(csv), format), summary, consistent })
}

/// Writes to `path`, or stdout when absent.
pub fn emit(path: Option<&str>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write `{p}`: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
