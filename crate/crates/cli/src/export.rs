//! Schema-versioned CSV and JSON writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::CliResult;

pub const EXPORT_SCHEMA_VERSION: u32 = 1;

/// CSV with a `# schema_version=N` comment line before the header.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "# schema_version={EXPORT_SCHEMA_VERSION}")?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip float formatting, so output is stable across runs.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// JSON object with `schema_version` added at the top level.
pub fn write_json<T: Serialize>(path: &Path, payload: &T) -> CliResult<()> {
    let value = versioned(payload)?;
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, &value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

pub fn versioned<T: Serialize>(payload: &T) -> CliResult<Value> {
    let mut value = serde_json::to_value(payload)?;
    match &mut value {
        Value::Object(map) => {
            map.entry("schema_version").or_insert(Value::from(EXPORT_SCHEMA_VERSION));
            Ok(value)
        }
        _ => Ok(serde_json::json!({
            "schema_version": EXPORT_SCHEMA_VERSION,
            "data": value,
        })),
    }
}
