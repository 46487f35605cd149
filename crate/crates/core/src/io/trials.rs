//! trials.csv: one row per search trial with per-fold and mean AUROC.
//! Header: `trial_id,n_hidden_layers,neurons_per_layer,dropout_rate,
//! learning_rate,fold0_auroc,...,mean_auroc,flags`.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::search::TrialRecord;

use super::{create, open, parse_field};

pub fn write_trials(path: &Path, trials: &[TrialRecord]) -> Result<()> {
    if trials.is_empty() {
        return Err(Error::InvalidInput("no trials to write".into()));
    }
    let k = trials[0].fold_aurocs.len();
    let mut out = create(path)?;
    let mut header =
        String::from("trial_id,n_hidden_layers,neurons_per_layer,dropout_rate,learning_rate");
    for f in 0..k {
        header.push_str(&format!(",fold{f}_auroc"));
    }
    header.push_str(",mean_auroc,flags");
    writeln!(out, "{header}").map_err(|e| Error::io(path, e))?;

    for t in trials {
        if t.fold_aurocs.len() != k {
            return Err(Error::InvalidInput(format!(
                "trial {} has {} fold scores, expected {k}",
                t.trial_id,
                t.fold_aurocs.len()
            )));
        }
        let mut line = format!(
            "{},{},{},{},{}",
            t.trial_id,
            t.config.n_hidden_layers,
            t.config.neurons_per_layer,
            t.config.dropout_rate,
            t.config.learning_rate
        );
        for v in &t.fold_aurocs {
            line.push_str(&format!(",{v}"));
        }
        line.push_str(&format!(",{},{}", t.mean_auroc, t.flags.join(";")));
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Read trials back. Training-loop parameters are not stored in the CSV, so
/// the caller supplies the defaults they were run with; per-trial seeds are
/// not reconstructed (they live in the run manifest's config).
pub fn read_trials(path: &Path, batch_size: usize, max_epochs: usize, patience: usize) -> Result<Vec<TrialRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(open(path)?);
    let k = {
        let headers = reader.headers().map_err(|e| Error::parse(path, e.to_string()))?;
        let fields: Vec<&str> = headers.iter().collect();
        if fields.len() < 7
            || fields[..5]
                != [
                    "trial_id",
                    "n_hidden_layers",
                    "neurons_per_layer",
                    "dropout_rate",
                    "learning_rate",
                ]
            || fields[fields.len() - 2..] != ["mean_auroc", "flags"]
        {
            return Err(Error::parse(path, format!("unexpected trials header {fields:?}")));
        }
        fields.len() - 7
    };

    let mut trials = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, e.to_string()))?;
        let line = idx + 2;
        if record.len() != k + 7 {
            return Err(Error::parse(
                path,
                format!("line {line}: expected {} fields, got {}", k + 7, record.len()),
            ));
        }
        let fold_aurocs: Vec<f64> = (0..k)
            .map(|f| parse_field(path, line, "fold_auroc", record[5 + f].trim()))
            .collect::<Result<_>>()?;
        let flags_raw = record[k + 6].trim();
        trials.push(TrialRecord {
            trial_id: parse_field(path, line, "trial_id", record[0].trim())?,
            config: ModelConfig {
                n_hidden_layers: parse_field(path, line, "n_hidden_layers", record[1].trim())?,
                neurons_per_layer: parse_field(path, line, "neurons_per_layer", record[2].trim())?,
                dropout_rate: parse_field(path, line, "dropout_rate", record[3].trim())?,
                learning_rate: parse_field(path, line, "learning_rate", record[4].trim())?,
                batch_size,
                max_epochs,
                patience,
                seed: 0,
            },
            fold_aurocs,
            mean_auroc: parse_field(path, line, "mean_auroc", record[k + 5].trim())?,
            flags: if flags_raw.is_empty() {
                Vec::new()
            } else {
                flags_raw.split(';').map(|s| s.to_string()).collect()
            },
        });
    }
    Ok(trials)
}
