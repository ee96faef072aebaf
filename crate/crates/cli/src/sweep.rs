//! Parameter sweeps over a channel pair.

use std::fmt;
use std::str::FromStr;

use entdist::channels::ChannelParams;
use entdist::protocols::{epr_report, EprReport};
use entdist::{Error, Result};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::format::{csv_cell, optional};

/// A per-row output column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Ic1,
    Ic2,
    Ir1,
    Ir2,
    Rains1,
    Rains2,
    Lower,
    Upper,
    Multirail,
    Assisted,
    Composition,
}

impl Quantity {
    pub const ALL: [Quantity; 11] = [
        Self::Ic1,
        Self::Ic2,
        Self::Ir1,
        Self::Ir2,
        Self::Rains1,
        Self::Rains2,
        Self::Lower,
        Self::Upper,
        Self::Multirail,
        Self::Assisted,
        Self::Composition,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::Ic1 => "ic1",
            Self::Ic2 => "ic2",
            Self::Ir1 => "ir1",
            Self::Ir2 => "ir2",
            Self::Rains1 => "rains1",
            Self::Rains2 => "rains2",
            Self::Lower => "lower",
            Self::Upper => "upper",
            Self::Multirail => "multirail",
            Self::Assisted => "assisted",
            Self::Composition => "composition",
        }
    }

    /// The column value for one report; `None` where it does not apply.
    pub fn extract(self, r: &EprReport) -> Option<f64> {
        let [f1, f2] = &r.figures;
        match self {
            Self::Ic1 => Some(f1.ic),
            Self::Ic2 => Some(f2.ic),
            Self::Ir1 => Some(f1.ir),
            Self::Ir2 => Some(f2.ir),
            Self::Rains1 => f1.rains,
            Self::Rains2 => f2.rains,
            Self::Lower => Some(r.interval.lower),
            Self::Upper => Some(r.interval.upper),
            Self::Multirail => r.multirail.map(|m| m.0),
            Self::Assisted => r.assisted,
            Self::Composition => Some(r.composition.value),
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Self::ALL
            .into_iter()
            .find(|q| q.label() == s)
            .ok_or_else(|| Error::Parse { token: s.into(), reason: "unknown quantity".into() })
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Parses `q1,q2,...`.
pub fn parse_quantities(s: &str) -> Result<Vec<Quantity>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect()
}

/// A channel spec whose value may be `*` in one parameter, for example
/// `gadc:gamma=*,T=0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelTemplate {
    base: ChannelParams,
    swept: Option<String>,
}

impl ChannelTemplate {
    pub fn swept_key(&self) -> Option<&str> {
        self.swept.as_deref()
    }

    pub fn instantiate(&self, value: f64) -> Result<ChannelParams> {
        match &self.swept {
            Some(key) => self.base.with_param(key, value),
            None => Ok(self.base.clone()),
        }
    }
}

impl FromStr for ChannelTemplate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_error = |reason: &str| Error::Parse { token: s.into(), reason: reason.into() };
        let (kind, rest) = s.split_once(':').ok_or_else(|| parse_error("expected `kind:key=value,...`"))?;
        let mut swept = None;
        let mut items = Vec::new();
        for item in rest.split(',') {
            match item.split_once('=') {
                Some((k, v)) if v.trim() == "*" => {
                    if swept.is_some() {
                        return Err(parse_error("only one parameter may be swept"));
                    }
                    swept = Some(k.trim().to_string());
                    // any valid placeholder; instantiation overwrites it
                    let placeholder = if k.trim() == "d" { "2" } else { "0" };
                    items.push(format!("{}={placeholder}", k.trim()));
                }
                _ => items.push(item.to_string()),
            }
        }
        let base: ChannelParams = format!("{kind}:{}", items.join(",")).parse()?;
        Ok(Self { base, swept })
    }
}

/// Output encodings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::Parse { token: s.into(), reason: "expected `csv` or `json`".into() }),
        }
    }
}

/// Parses `start:stop:step` into the values `start + i·step ≤ stop`, each
/// rounded to 12 significant digits. `start > stop` gives an empty grid.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parse_error = |reason: &str| Error::Parse { token: s.into(), reason: reason.into() };
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(parse_error("expected `start:stop:step`"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::Parse { token: t.into(), reason: "expected a number".into() });
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() {
        return Err(parse_error("step must be positive and bounds finite"));
    }
    let mut grid = Vec::new();
    let mut i = 0u64;
    loop {
        let v = start + i as f64 * step;
        if v > stop + 1e-9 * step {
            break;
        }
        let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float");
        grid.push(rounded);
        i += 1;
    }
    Ok(grid)
}

/// Everything needed to run a sweep.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub channel_templates: [ChannelTemplate; 2],
    pub grid: Vec<f64>,
    pub outputs: Vec<Quantity>,
    pub output_path: Option<String>,
    pub format: OutputFormat,
}

impl SweepSpec {
    /// Header of the first column: the swept parameter name.
    pub fn parameter_label(&self) -> String {
        let keys: Vec<&str> = self.channel_templates.iter().filter_map(|t| t.swept_key()).collect();
        match keys.as_slice() {
            [] => "value".into(),
            [first, rest @ ..] if rest.iter().all(|k| k == first) => (*first).into(),
            _ => keys.join("/"),
        }
    }

    /// Channel pairs for every grid point; fails on the first value outside
    /// a parameter's valid range.
    pub fn instantiate(&self) -> Result<Vec<[ChannelParams; 2]>> {
        if self.channel_templates.iter().all(|t| t.swept_key().is_none()) {
            return Err(Error::Parse { token: self.channel_templates[0].base.to_string(), reason: "no parameter marked `*`".into() });
        }
        self.grid
            .iter()
            .map(|&v| Ok([self.channel_templates[0].instantiate(v)?, self.channel_templates[1].instantiate(v)?]))
            .collect()
    }
}

/// One computed grid point.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub parameter: f64,
    pub channels: [ChannelParams; 2],
    pub values: Vec<Option<f64>>,
    pub consistent: bool,
}

/// Evaluates every grid point in parallel; rows come back in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let pairs = spec.instantiate()?;
    spec.grid
        .par_iter()
        .zip(pairs.into_par_iter())
        .map(|(&parameter, channels)| {
            let report = epr_report(&channels[0], &channels[1])?;
            let values = spec.outputs.iter().map(|q| q.extract(&report)).collect();
            Ok(SweepRow { parameter, channels, values, consistent: report.interval.is_consistent() })
        })
        .collect()
}

/// CSV text: the swept parameter, then the requested quantities in order.
pub fn render_csv(spec: &SweepSpec, rows: &[SweepRow]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec![spec.parameter_label()];
    header.extend(spec.outputs.iter().map(|q| q.label().to_string()));
    writer.write_record(&header).expect("in-memory write");
    for row in rows {
        let mut record = vec![csv_cell(Some(row.parameter))];
        record.extend(row.values.iter().map(|&v| csv_cell(v)));
        writer.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
}

/// JSON document with the templates, column order and one object per row.
pub fn render_json(spec: &SweepSpec, rows: &[SweepRow]) -> Value {
    let label = spec.parameter_label();
    let rows: Vec<Value> = rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            obj.insert(label.clone(), optional(Some(row.parameter)));
            for (q, &v) in spec.outputs.iter().zip(&row.values) {
                obj.insert(q.label().into(), optional(v));
            }
            Value::Object(obj)
        })
        .collect();
    let templates: Vec<String> = spec
        .channel_templates
        .iter()
        .map(|t| match t.swept_key() {
            Some(key) => format!("{} ({key} swept)", t.base.kind()),
            None => t.base.to_string(),
        })
        .collect();
    let mut columns = vec![label];
    columns.extend(spec.outputs.iter().map(|q| q.label().to_string()));
    json!({ "templates": templates, "columns": columns, "rows": rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = parse_grid("0:1:0.05").unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[6], 0.3);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(parse_grid("1:0:0.1").unwrap().is_empty());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("0:x:0.1").is_err());
    }

    #[test]
    fn template_parsing() {
        let t: ChannelTemplate = "gadc:gamma=*,T=0.1".parse().unwrap();
        assert_eq!(t.swept_key(), Some("gamma"));
        assert_eq!(t.instantiate(0.3).unwrap(), ChannelParams::Gadc { gamma: 0.3, t: 0.1 });
        assert!(t.instantiate(1.3).is_err());
        let fixed: ChannelTemplate = "dephasing:p=0.2".parse().unwrap();
        assert_eq!(fixed.swept_key(), None);
        assert!("gadc:gamma=*,T=*".parse::<ChannelTemplate>().is_err());
        assert!("gadc:beta=*,T=0".parse::<ChannelTemplate>().is_err());
        let d: ChannelTemplate = "erasure:p=0.1,d=*".parse().unwrap();
        assert_eq!(d.instantiate(3.0).unwrap(), ChannelParams::Erasure { p: 0.1, d: 3 });
    }

    #[test]
    fn quantity_parsing() {
        let qs = parse_quantities("lower,upper,multirail").unwrap();
        assert_eq!(qs, vec![Quantity::Lower, Quantity::Upper, Quantity::Multirail]);
        assert!(matches!(parse_quantities("lower,bogus"), Err(Error::Parse { token, .. }) if token == "bogus"));
        for q in Quantity::ALL {
            assert_eq!(q.label().parse::<Quantity>().unwrap(), q);
        }
    }

    fn spec(grid: Vec<f64>, templates: [&str; 2], outputs: &str) -> SweepSpec {
        SweepSpec {
            channel_templates: [templates[0].parse().unwrap(), templates[1].parse().unwrap()],
            grid,
            outputs: parse_quantities(outputs).unwrap(),
            output_path: None,
            format: OutputFormat::Csv,
        }
    }

    #[test]
    fn empty_grid_gives_header_only() {
        let s = spec(vec![], ["gadc:gamma=*,T=0", "gadc:gamma=*,T=0"], "lower,upper");
        let rows = run_sweep(&s).unwrap();
        assert_eq!(render_csv(&s, &rows), "gamma,lower,upper\n");
    }

    #[test]
    fn erasure_sweep_rows() {
        let s = spec(parse_grid("0:1:0.5").unwrap(), ["erasure:p=*,d=2", "erasure:p=0.2,d=2"], "lower,upper,multirail");
        let rows = run_sweep(&s).unwrap();
        assert_eq!(render_csv(&s, &rows), "p,lower,upper,multirail\n0,0.8,0.8,\n0.5,0.4,0.4,\n1,0,0,\n");
        let json = render_json(&s, &rows);
        assert_eq!(json["rows"][1]["lower"], serde_json::json!(0.4));
        assert_eq!(json["rows"][1]["multirail"], Value::Null);
    }

    #[test]
    fn out_of_range_grid_is_rejected() {
        let s = spec(vec![0.5, 1.5], ["dephasing:p=*", "dephasing:p=*"], "lower");
        assert!(run_sweep(&s).is_err());
    }
}
