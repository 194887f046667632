//! Canonical serialization: floats rounded to 12 significant digits so that
//! outputs compare byte for byte.

use serde::Serialize;
use serde_json::{Map, Number, Value};

use crate::error::{Error, Result};

pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn canon(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round12(n.as_f64().unwrap_or(f64::NAN));
            Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canon).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, canon(v))).collect::<Map<_, _>>()),
        v => v,
    }
}

pub fn canonical_value<T: Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map(canon).map_err(|e| Error::Internal(format!("serialization: {e}")))
}

/// Pretty-printed canonical JSON with a trailing newline.
pub fn to_json<T: Serialize>(x: &T) -> Result<String> {
    let v = canonical_value(x)?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// One compact canonical JSON record per line.
pub fn to_jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for it in items {
        let v = canonical_value(it)?;
        out.push_str(&serde_json::to_string(&v).map_err(|e| Error::Internal(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}
