//! Features cache CSV (`subject_id,label,r{i}_r{j},...`) and the train/test
//! split sidecar JSON.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::Dataset;

use super::{create, open, parse_field};

pub fn write_features(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut out = create(path)?;
    let mut header = String::from("subject_id,label");
    for &(i, j) in &dataset.feature_pairs {
        header.push_str(&format!(",r{i}_r{j}"));
    }
    writeln!(out, "{header}").map_err(|e| Error::io(path, e))?;

    let mut line = String::new();
    for row in 0..dataset.len() {
        line.clear();
        line.push_str(&dataset.subject_ids[row]);
        line.push(',');
        line.push_str(&dataset.labels[row].to_string());
        for col in 0..dataset.n_features() {
            line.push(',');
            line.push_str(&format!("{}", dataset.features[(row, col)]));
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn parse_pair_header(path: &Path, field: &str) -> Result<(usize, usize)> {
    let err = || {
        Error::parse(
            path,
            format!("feature column `{field}` is not of the form r{{i}}_r{{j}}"),
        )
    };
    let rest = field.strip_prefix('r').ok_or_else(err)?;
    let (i_raw, j_raw) = rest.split_once("_r").ok_or_else(err)?;
    let i = i_raw.parse().map_err(|_| err())?;
    let j = j_raw.parse().map_err(|_| err())?;
    Ok((i, j))
}

pub fn read_features(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(open(path)?);
    let feature_pairs: Vec<(usize, usize)> = {
        let headers = reader.headers().map_err(|e| Error::parse(path, e.to_string()))?;
        let mut iter = headers.iter();
        if iter.next() != Some("subject_id") || iter.next() != Some("label") {
            return Err(Error::parse(
                path,
                "features header must start with `subject_id,label`",
            ));
        }
        iter.map(|f| parse_pair_header(path, f)).collect::<Result<_>>()?
    };

    let mut subject_ids = Vec::new();
    let mut labels = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, e.to_string()))?;
        let line = idx + 2;
        if record.len() != feature_pairs.len() + 2 {
            return Err(Error::parse(
                path,
                format!(
                    "line {line}: expected {} fields, got {}",
                    feature_pairs.len() + 2,
                    record.len()
                ),
            ));
        }
        subject_ids.push(record[0].to_string());
        labels.push(parse_field(path, line, "label", record[1].trim())?);
        for raw in record.iter().skip(2) {
            values.push(parse_field(path, line, "feature", raw.trim())?);
        }
    }
    let n = subject_ids.len();
    let f = feature_pairs.len();
    let features = ndarray::Array2::from_shape_vec((n, f), values)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    Dataset::new(features, labels, subject_ids, feature_pairs)
}

/// Which subjects belong to the training and test partitions, plus the seed
/// and fraction that produced the split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSidecar {
    pub seed: u64,
    pub test_fraction: f64,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

impl SplitSidecar {
    /// Row indices of the train and test subjects within a dataset.
    pub fn indices(&self, dataset: &Dataset) -> Result<(Vec<usize>, Vec<usize>)> {
        let locate = |ids: &[String]| -> Result<Vec<usize>> {
            ids.iter()
                .map(|id| {
                    dataset
                        .subject_ids
                        .iter()
                        .position(|s| s == id)
                        .ok_or_else(|| {
                            Error::InvalidInput(format!("split names unknown subject `{id}`"))
                        })
                })
                .collect()
        };
        Ok((locate(&self.train)?, locate(&self.test)?))
    }
}

pub fn write_split(path: &Path, split: &SplitSidecar) -> Result<()> {
    let out = create(path)?;
    serde_json::to_writer_pretty(out, split).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn read_split(path: &Path) -> Result<SplitSidecar> {
    serde_json::from_reader(open(path)?).map_err(|e| Error::parse(path, e.to_string()))
}
