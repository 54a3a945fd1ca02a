use std::fs::File;
use std::path::Path;

use rvi_core::Dataset;

use crate::CliError;

/// Reads the named columns of a CSV file. Fields that do not parse as
/// numbers count as missing, and rows with any missing value are dropped.
pub fn read_columns(path: &Path, wanted: &[&str]) -> Result<Dataset, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .clone();

    let mut index = Vec::with_capacity(wanted.len());
    for name in wanted {
        let pos = headers.iter().position(|h| h.trim() == *name).ok_or_else(|| {
            CliError::Data(format!(
                "{}: no column `{name}` (available: {})",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })?;
        index.push(pos);
    }

    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); wanted.len()];
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(String::new(), |p| format!(" line {}", p.line()));
            CliError::Data(format!("{}{line}: {e}", path.display()))
        })?;
        for (col, &i) in columns.iter_mut().zip(&index) {
            col.push(record.get(i).and_then(|f| f.trim().parse::<f64>().ok()));
        }
    }
    let names = wanted.iter().map(|s| s.to_string()).collect();
    Dataset::with_missing(names, columns).map_err(CliError::from)
}
