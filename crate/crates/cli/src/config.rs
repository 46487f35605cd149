//! Runtime configuration: a JSON file with a single flat `pipeline` object,
//! overridable field-by-field from the command line (flag > file > default).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use fcpipe_core::connectivity::MeanMode;
use fcpipe_core::importance::BrodmannTable;
use fcpipe_core::search::{SearchSpace, TrainingDefaults};
use fcpipe_core::synthgen::PlantedEffect;

/// The Brodmann reference table bundled with the tool; used whenever the
/// config does not point at a table file.
pub const BUILTIN_BRODMANN: &str = include_str!("../data/brodmann_mni.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectConfig {
    pub i: usize,
    pub j: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// All outputs land here; default input locations derive from it.
    pub out_dir: PathBuf,
    /// Cohort manifest (default `<out_dir>/manifest.csv`).
    pub manifest: Option<PathBuf>,
    /// Atlas CSV (default `<out_dir>/atlas.csv`).
    pub atlas: Option<PathBuf>,
    /// Brodmann table CSV; the bundled table applies when unset.
    pub brodmann: Option<PathBuf>,

    // synthgen
    pub regions: usize,
    pub n_control: usize,
    pub n_case: usize,
    pub timepoints: usize,
    pub noise_scale: f64,
    pub effects: Vec<EffectConfig>,

    // connectivity
    pub shrinkage: f64,
    pub mean_mode: MeanMode,
    pub mean_tol: f64,
    pub mean_max_iter: usize,

    // evaluation
    pub test_fraction: f64,
    /// Fraction of the training partition held out for early stopping when
    /// retraining the best configuration.
    pub val_fraction: f64,

    // search
    pub n_trials: usize,
    pub k_folds: usize,
    pub quantile: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub layers_choices: Vec<usize>,
    pub neurons_choices: Vec<usize>,
    pub dropout_range: (f64, f64),
    pub lr_log10_range: (f64, f64),

    // importance
    pub pfi_repeats: usize,
    pub tau: f64,
    pub top_k: usize,

    pub seed: u64,
    /// Worker threads for search and PFI; 0 means all available cores.
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let space = SearchSpace::default();
        let train = TrainingDefaults::default();
        Self {
            out_dir: PathBuf::from("fcpipe-run"),
            manifest: None,
            atlas: None,
            brodmann: None,
            regions: 64,
            n_control: 497,
            n_case: 418,
            timepoints: 300,
            noise_scale: 0.1,
            effects: Vec::new(),
            shrinkage: 0.05,
            mean_mode: MeanMode::Geometric,
            mean_tol: 1e-6,
            mean_max_iter: 50,
            test_fraction: 0.2,
            val_fraction: 0.2,
            n_trials: 50,
            k_folds: 3,
            quantile: 0.2,
            batch_size: train.batch_size,
            max_epochs: train.max_epochs,
            patience: train.patience,
            layers_choices: space.layers_choices,
            neurons_choices: space.neurons_choices,
            dropout_range: space.dropout_range,
            lr_log10_range: space.lr_log10_range,
            pfi_repeats: 5,
            tau: 6.0,
            top_k: 15,
            seed: 42,
            workers: 0,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    pipeline: PipelineConfig,
}

impl PipelineConfig {
    /// Load from a JSON file; parse errors carry the offending field path and
    /// position.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
            anyhow::anyhow!(
                "config file {}: field `{}`: {}",
                path.display(),
                e.path(),
                e.inner()
            )
        })?;
        Ok(file.pipeline)
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.manifest
            .clone()
            .unwrap_or_else(|| self.out_dir.join("manifest.csv"))
    }

    pub fn atlas_path(&self) -> PathBuf {
        self.atlas
            .clone()
            .unwrap_or_else(|| self.out_dir.join("atlas.csv"))
    }

    pub fn features_path(&self) -> PathBuf {
        self.out_dir.join("features.csv")
    }

    pub fn split_path(&self) -> PathBuf {
        self.out_dir.join("split.json")
    }

    pub fn trials_path(&self) -> PathBuf {
        self.out_dir.join("trials.csv")
    }

    pub fn model_path(&self) -> PathBuf {
        self.out_dir.join("model.json")
    }

    pub fn search_space(&self) -> SearchSpace {
        SearchSpace {
            layers_choices: self.layers_choices.clone(),
            neurons_choices: self.neurons_choices.clone(),
            dropout_range: self.dropout_range,
            lr_log10_range: self.lr_log10_range,
        }
    }

    pub fn training_defaults(&self) -> TrainingDefaults {
        TrainingDefaults {
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
        }
    }

    pub fn planted_effects(&self) -> Vec<PlantedEffect> {
        self.effects
            .iter()
            .map(|e| PlantedEffect {
                region_pair: (e.i, e.j),
                delta: e.delta,
            })
            .collect()
    }

    /// Load the configured Brodmann table, or the bundled one.
    pub fn brodmann_table(&self) -> Result<BrodmannTable> {
        match &self.brodmann {
            Some(path) => Ok(fcpipe_core::io::read_brodmann(path)?),
            None => parse_builtin_table(BUILTIN_BRODMANN),
        }
    }

    /// Numeric sanity checks with field-precise messages.
    pub fn validate(&self) -> Result<()> {
        macro_rules! check {
            ($cond:expr, $field:literal, $msg:literal) => {
                if !$cond {
                    bail!(concat!("config field `", $field, "`: ", $msg));
                }
            };
        }
        check!(self.regions >= 2, "regions", "must be at least 2");
        check!(
            self.timepoints >= self.regions + 1,
            "timepoints",
            "must be at least regions + 1"
        );
        check!(
            self.noise_scale.is_finite() && self.noise_scale >= 0.0,
            "noise_scale",
            "must be a non-negative real"
        );
        check!(
            (0.0..1.0).contains(&self.shrinkage),
            "shrinkage",
            "must lie in [0, 1)"
        );
        check!(
            self.test_fraction > 0.0 && self.test_fraction < 1.0,
            "test_fraction",
            "must lie in (0, 1)"
        );
        check!(
            self.val_fraction > 0.0 && self.val_fraction < 1.0,
            "val_fraction",
            "must lie in (0, 1)"
        );
        check!(self.n_trials >= 1, "n_trials", "must be at least 1");
        check!(self.k_folds >= 2, "k_folds", "must be at least 2");
        check!(
            self.quantile > 0.0 && self.quantile <= 0.5,
            "quantile",
            "must lie in (0, 0.5]"
        );
        check!(self.batch_size >= 1, "batch_size", "must be at least 1");
        check!(self.max_epochs >= 1, "max_epochs", "must be at least 1");
        check!(self.patience >= 1, "patience", "must be at least 1");
        check!(self.pfi_repeats >= 1, "pfi_repeats", "must be at least 1");
        check!(self.tau.is_finite(), "tau", "must be finite");
        check!(self.top_k >= 1, "top_k", "must be at least 1");
        for e in &self.effects {
            if e.i >= e.j || e.j >= self.regions {
                bail!(
                    "config field `effects`: pair ({}, {}) must satisfy i < j < regions ({})",
                    e.i,
                    e.j,
                    self.regions
                );
            }
        }
        self.search_space().validate()?;
        Ok(())
    }

    /// Check that a file this command depends on exists, naming the config
    /// field that points at it.
    pub fn require_input(&self, field: &str, path: &Path) -> Result<()> {
        if !path.exists() {
            bail!(
                "config field `{field}`: input file {} does not exist (run the producing command first)",
                path.display()
            );
        }
        Ok(())
    }
}

fn parse_builtin_table(text: &str) -> Result<BrodmannTable> {
    // Minimal in-memory parse of the bundled table: same format as
    // io::read_brodmann but without touching the filesystem.
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "ba_id,x,y,z,name" {
        bail!("bundled Brodmann table has unexpected header `{header}`");
    }
    let mut entries = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(5, ',').collect();
        if fields.len() != 5 {
            bail!("bundled Brodmann table line {}: expected 5 fields", idx + 2);
        }
        entries.push(fcpipe_core::importance::BrodmannArea {
            ba_id: fields[0].parse().context("bundled table ba_id")?,
            centroid: [
                fields[1].parse().context("bundled table x")?,
                fields[2].parse().context("bundled table y")?,
                fields[3].parse().context("bundled table z")?,
            ],
            name: fields[4].to_string(),
        });
    }
    let table = BrodmannTable { entries };
    table.validate()?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_brodmann_table_parses() {
        let table = PipelineConfig::default().brodmann_table().unwrap();
        assert!(table.entries.len() >= 47);
    }

    #[test]
    fn defaults_validate() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn bad_field_is_named_in_error() {
        let mut cfg = PipelineConfig::default();
        cfg.quantile = 0.9;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("quantile"), "error was: {err}");
    }

    #[test]
    fn unknown_config_keys_are_rejected_with_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"pipeline": {"seeed": 3}}"#).unwrap();
        let err = PipelineConfig::load(&path).unwrap_err().to_string();
        assert!(err.contains("pipeline"), "error was: {err}");
        assert!(err.contains("seeed"), "error was: {err}");
    }
}
