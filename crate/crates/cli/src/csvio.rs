use std::path::Path;

use crate::CliError;

/// 17 significant digits, enough for a lossless round trip.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))
}

pub fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = writer(path)?;
    let wrap = |e: csv::Error| CliError::Csv(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads the `epsilon` column, skipping empty cells.
pub fn read_returns(path: &Path) -> Result<Vec<f64>, CliError> {
    let wrap = |e: csv::Error| CliError::Csv(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(wrap)?;
    let col = r
        .headers()
        .map_err(wrap)?
        .iter()
        .position(|h| h.trim() == "epsilon")
        .ok_or_else(|| CliError::Csv(format!("{}: no `epsilon` column", path.display())))?;
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(wrap)?;
        let cell = rec.get(col).unwrap_or("").trim();
        if cell.is_empty() {
            continue;
        }
        let x = cell
            .parse::<f64>()
            .map_err(|e| CliError::Csv(format!("{}: row {}: {e}", path.display(), line + 2)))?;
        out.push(x);
    }
    Ok(out)
}
