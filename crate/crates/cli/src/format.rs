//! Canonical output: floats at 12 significant digits, JSON objects with
//! sorted keys, CSV with a fixed column order.

use std::fmt::Write;

use serde_json::Value;

const SIGNIFICANT: usize = 12;

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// 12 significant digits with trailing zeros dropped; lowercase scientific
/// notation for magnitudes at or above `1e6` or below `1e-6`. Non-finite
/// values have no representation and return `None`.
pub fn format_float(x: f64) -> Option<String> {
    if !x.is_finite() {
        return None;
    }
    if x == 0.0 {
        return Some("0".into());
    }
    // the exponent after rounding to 12 digits decides the notation, so the
    // output re-parses to the same text
    let s = format!("{:.*e}", SIGNIFICANT - 1, x);
    let (mantissa, exponent) = s.split_once('e').expect("scientific notation");
    let exponent: i64 = exponent.parse().expect("integer exponent");
    if !(-6..6).contains(&exponent) {
        return Some(format!("{}e{exponent}", trim_fraction(mantissa)));
    }
    let decimals = (SIGNIFICANT as i64 - 1 - exponent).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let s = trim_fraction(&s);
    Some(if s == "-0" { "0".into() } else { s.into() })
}

fn write_number(out: &mut String, n: &serde_json::Number) {
    if n.is_f64() {
        let v = n.as_f64().expect("f64 number");
        out.push_str(format_float(v).as_deref().unwrap_or("null"));
    } else {
        write!(out, "{n}").expect("write to string");
    }
}

fn write_value(out: &mut String, value: &Value, indent: usize) {
    let pad = |out: &mut String, level: usize| out.extend(std::iter::repeat_n(' ', 2 * level));
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serialization")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, key) in keys.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&serde_json::to_string(key).expect("key serialization"));
                out.push_str(": ");
                write_value(out, &map[*key], indent + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

/// Canonical JSON text with a trailing newline. Parsing the output and
/// rendering it again reproduces it byte for byte.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

/// A JSON number for finite `x`, `null` otherwise.
pub fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// An optional float as a JSON number or `null`.
pub fn optional(x: Option<f64>) -> Value {
    x.map_or(Value::Null, number)
}

/// A CSV cell: formatted float, or empty for missing and non-finite values.
pub fn csv_cell(x: Option<f64>) -> String {
    x.and_then(format_float).unwrap_or_default()
}
