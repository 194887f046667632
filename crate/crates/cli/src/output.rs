use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use porcupine_core::export::{canonical_value, to_json, to_jsonl};
use serde::Serialize;
use serde_json::Value;

use crate::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Jsonl,
}

/// What a command produced, ready to be rendered in the requested format.
pub struct Artifact {
    pub json: Value,
    /// Flat rows for csv and jsonl; None when the command only speaks JSON.
    pub rows: Option<Vec<Value>>,
}

impl Artifact {
    pub fn json<T: Serialize>(x: &T) -> Result<Artifact, Failure> {
        Ok(Artifact { json: canonical_value(x).map_err(Failure::analysis)?, rows: None })
    }

    pub fn with_rows<T: Serialize, R: Serialize>(x: &T, rows: &[R]) -> Result<Artifact, Failure> {
        let rows = rows.iter().map(canonical_value).collect::<Result<Vec<_>, _>>().map_err(Failure::analysis)?;
        Ok(Artifact { json: canonical_value(x).map_err(Failure::analysis)?, rows: Some(rows) })
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        other => other.to_string(),
    }
}

fn csv_text(rows: &[Value]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = match rows.first() {
        Some(Value::Object(o)) => o.keys().cloned().collect(),
        Some(_) => return Err(Failure::internal("csv rows must be objects")),
        None => Vec::new(),
    };
    if !header.is_empty() {
        w.write_record(&header).map_err(|e| Failure::internal(e.to_string()))?;
    }
    for r in rows {
        let Value::Object(o) = r else { return Err(Failure::internal("csv rows must be objects")) };
        w.write_record(header.iter().map(|k| o.get(k).map(cell).unwrap_or_default()))
            .map_err(|e| Failure::internal(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::internal(e.to_string()))
}

pub fn render(a: &Artifact, format: Format, command: &str) -> Result<String, Failure> {
    match (format, &a.rows) {
        (Format::Json, _) => to_json(&a.json).map_err(Failure::analysis),
        (Format::Csv, Some(rows)) => csv_text(rows),
        (Format::Jsonl, Some(rows)) => to_jsonl(rows).map_err(Failure::analysis),
        (f, None) => Err(Failure::usage(format!("`{command}` does not support --format {f:?}").to_lowercase())),
    }
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut s = std::io::stdout().lock();
            s.write_all(text.as_bytes()).and_then(|_| s.flush()).map_err(|e| Failure::internal(e.to_string()))
        }
    }
}
