//! Cohort storage: one header-less CSV of time points x regions per subject,
//! plus a manifest CSV (`subject_id,path,label`) with paths relative to the
//! manifest's own directory.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::connectivity::TimeSeriesMatrix;
use crate::error::{Error, Result};

use super::{create, open, parse_field};

/// Write one subject's time series as a header-less CSV.
pub fn write_time_series(path: &Path, ts: &TimeSeriesMatrix) -> Result<()> {
    let mut out = create(path)?;
    let data = ts.data();
    let mut line = String::new();
    for row in data.outer_iter() {
        line.clear();
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v}"));
        }
        line.push('\n');
        out.write_all(line.as_bytes())
            .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Read one subject's time series from a header-less CSV.
pub fn read_time_series(path: &Path, subject_id: &str) -> Result<TimeSeriesMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, e.to_string()))?;
        let row: Vec<f64> = record
            .iter()
            .map(|raw| parse_field(path, idx + 1, "value", raw.trim()))
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::parse(
                    path,
                    format!(
                        "row {} has {} columns, expected {}",
                        idx + 1,
                        row.len(),
                        first.len()
                    ),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(path, "time series file is empty"));
    }
    let t = rows.len();
    let r = rows[0].len();
    let data = ndarray::Array2::from_shape_fn((t, r), |(i, j)| rows[i][j]);
    TimeSeriesMatrix::new(subject_id, data)
}

/// Write a cohort: `ts/<subject_id>.csv` per subject plus `manifest.csv`.
/// Returns the manifest path.
pub fn write_cohort(
    dir: &Path,
    cohort: &[TimeSeriesMatrix],
    labels: &[u8],
) -> Result<PathBuf> {
    if cohort.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} subjects but {} labels",
            cohort.len(),
            labels.len()
        )));
    }
    let manifest_path = dir.join("manifest.csv");
    let mut manifest = create(&manifest_path)?;
    writeln!(manifest, "subject_id,path,label").map_err(|e| Error::io(&manifest_path, e))?;
    for (ts, &label) in cohort.iter().zip(labels) {
        let rel = format!("ts/{}.csv", ts.subject_id);
        write_time_series(&dir.join(&rel), ts)?;
        writeln!(manifest, "{},{rel},{label}", ts.subject_id)
            .map_err(|e| Error::io(&manifest_path, e))?;
    }
    manifest.flush().map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}

/// Read a cohort back from its manifest. Relative paths resolve against the
/// manifest's directory.
pub fn read_cohort(manifest_path: &Path) -> Result<(Vec<TimeSeriesMatrix>, Vec<u8>)> {
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(open(manifest_path)?);
    {
        let headers = reader
            .headers()
            .map_err(|e| Error::parse(manifest_path, e.to_string()))?;
        let expect = ["subject_id", "path", "label"];
        if headers.iter().collect::<Vec<_>>() != expect {
            return Err(Error::parse(
                manifest_path,
                format!("header must be `subject_id,path,label`, got {headers:?}"),
            ));
        }
    }

    let mut cohort = Vec::new();
    let mut labels = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(manifest_path, e.to_string()))?;
        if record.len() != 3 {
            return Err(Error::parse(
                manifest_path,
                format!("line {}: expected 3 fields, got {}", idx + 2, record.len()),
            ));
        }
        let subject_id = record[0].to_string();
        let rel = Path::new(&record[1]);
        let path = if rel.is_absolute() {
            rel.to_path_buf()
        } else {
            base.join(rel)
        };
        let label: u8 = parse_field(manifest_path, idx + 2, "label", record[2].trim())?;
        if label > 1 {
            return Err(Error::parse(
                manifest_path,
                format!("line {}: label must be 0 or 1, got {label}", idx + 2),
            ));
        }
        cohort.push(read_time_series(&path, &subject_id)?);
        labels.push(label);
    }
    if cohort.is_empty() {
        return Err(Error::parse(manifest_path, "manifest lists no subjects"));
    }
    Ok((cohort, labels))
}
