//! On-disk formats shared by the CLI, the acceptance suite, and external
//! tools. Everything is flat files: CSV for tables, JSON for structured
//! reports. Floating-point output uses shortest-roundtrip formatting except
//! for model weights, which are written with 17 significant digits.

mod atlas;
mod brodmann;
mod cohort;
mod edges;
mod effects;
mod features;
mod importance_csv;
mod kde;
mod model_json;
mod trials;

pub use atlas::{read_atlas, write_atlas};
pub use brodmann::{read_brodmann, write_brodmann};
pub use cohort::{read_cohort, read_time_series, write_cohort, write_time_series};
pub use edges::write_edges;
pub use effects::{read_effects, write_effects};
pub use features::{
    read_features, read_split, write_features, write_split, SplitSidecar,
};
pub use importance_csv::{read_importance, write_importance};
pub use kde::write_kde;
pub use model_json::{read_model, write_model};
pub use trials::{read_trials, write_trials};

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{Error, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, field: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| {
        Error::parse(
            path,
            format!("line {line}, field `{field}`: cannot parse {raw:?}: {e}"),
        )
    })
}
