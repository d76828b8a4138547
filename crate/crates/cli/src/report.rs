use std::fs;
use std::io::Write;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::args::{Format, OutputArgs};

pub const SCHEMA_VERSION: u32 = 1;

/// Writes `rows` as CSV, or as a JSON document carrying `config` and `extra` alongside the rows.
pub fn emit<R: Serialize>(
    out: &OutputArgs,
    command: &str,
    rows: &[R],
    config: Value,
    extra: Map<String, Value>,
) -> Result<(), String> {
    let bytes = match out.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| e.to_string())?;
            }
            w.into_inner().map_err(|e| e.to_string())?
        }
        Format::Json => {
            let mut doc = json!({
                "schema_version": SCHEMA_VERSION,
                "library_version": env!("CARGO_PKG_VERSION"),
                "command": command,
                "config": config,
                "rows": rows,
            });
            if let Value::Object(m) = &mut doc {
                m.extend(extra);
            }
            let mut s = serde_json::to_vec_pretty(&doc).map_err(|e| e.to_string())?;
            s.push(b'\n');
            s
        }
    };
    match &out.out {
        Some(path) => fs::write(path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout().write_all(&bytes).map_err(|e| e.to_string()),
    }
}
