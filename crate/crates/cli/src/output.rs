use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds `x` to [`SIGNIFICANT_DIGITS`] significant digits; `-0` becomes `0`.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x);
    if r == 0.0 { 0.0 } else { r }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            if let Some(x) = n.as_f64() {
                if let Some(m) = serde_json::Number::from_f64(round_sig(x)) {
                    *n = m;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serializes with every float rounded.
pub fn to_value<T: Serialize>(x: &T) -> serde_json::Result<Value> {
    let mut v = serde_json::to_value(x)?;
    round_value(&mut v);
    Ok(v)
}

fn render(value: &Value, pretty: bool) -> std::io::Result<String> {
    Ok(if pretty { serde_json::to_string_pretty(value)? } else { serde_json::to_string(value)? })
}

pub fn write_file(value: &Value, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, format!("{}\n", render(value, true)?))
}

/// Prints `value` and, when `file` is given, writes the pretty form there too.
pub fn emit(value: &Value, pretty: bool, file: Option<&Path>) -> std::io::Result<()> {
    let text = render(value, pretty)?;
    if let Some(path) = file {
        write_file(value, path)?;
    }
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}")
}
