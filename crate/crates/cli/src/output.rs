//! JSON emission with 15 significant digits and error reporting.

use std::path::Path;

use anyhow::Result;
use greedy_sphere::checkpoint::write_atomic;
use greedy_sphere::report::round15;
use serde::Serialize;
use serde_json::{json, Number, Value};

/// Rounds every float in `v` to 15 significant digits.
pub fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            Number::from_f64(round15(x)).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = round_floats(serde_json::to_value(value)?);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())?;
    Ok(())
}

/// `{"error": {"kind": ..., "message": ...}}` for stderr.
pub fn error_json(err: &anyhow::Error) -> String {
    let kind = err
        .chain()
        .find_map(|e| e.downcast_ref::<greedy_sphere::Error>())
        .map(|e| e.kind())
        .unwrap_or("error");
    let message = format!("{err:#}");
    json!({ "error": { "kind": kind, "message": message } }).to_string()
}
