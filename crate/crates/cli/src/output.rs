use std::path::{Path, PathBuf};

use crate::CliError;

/// Writes one CSV file with a single header row.
pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &[String],
    rows: &[Vec<f64>],
) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
    let path = dir.join(format!("{name}.csv"));
    let io = |e: csv::Error| CliError::Config(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        if let Some(bad) = row.iter().find(|x| !x.is_finite()) {
            return Err(CliError::Numeric(cantilever::Error::InvalidState(format!(
                "non-finite value {bad} in {name}"
            ))));
        }
        w.write_record(row.iter().map(|&x| number(x))).map_err(io)?;
    }
    w.flush()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(path)
}

/// Shortest round-trip text, in exponent form away from order one.
pub fn number(x: f64) -> String {
    if x == 0.0 || (1e-4..1e6).contains(&x.abs()) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

pub fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// `start, start + step, …` up to `end` inclusive within rounding.
pub fn grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}
