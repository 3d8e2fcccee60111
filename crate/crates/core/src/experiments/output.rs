use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// Writes `rows` as a headed CSV file.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Two-column plot data; rows with a missing value are skipped.
pub fn write_plot(path: &Path, header: (&str, &str), points: &[(f64, Option<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([header.0, header.1])?;
    for &(a, b) in points {
        if let Some(b) = b {
            w.write_record([a.to_string(), b.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
