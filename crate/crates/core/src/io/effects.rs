//! Planted-effects sidecar JSON: a list of `{i, j, delta}` objects, consumed
//! by acceptance tests to know the ground truth.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthgen::PlantedEffect;

use super::{create, open};

#[derive(Serialize, Deserialize)]
struct EffectRow {
    i: usize,
    j: usize,
    delta: f64,
}

pub fn write_effects(path: &Path, effects: &[PlantedEffect]) -> Result<()> {
    let rows: Vec<EffectRow> = effects
        .iter()
        .map(|e| EffectRow {
            i: e.region_pair.0,
            j: e.region_pair.1,
            delta: e.delta,
        })
        .collect();
    let out = create(path)?;
    serde_json::to_writer_pretty(out, &rows).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn read_effects(path: &Path) -> Result<Vec<PlantedEffect>> {
    let rows: Vec<EffectRow> =
        serde_json::from_reader(open(path)?).map_err(|e| Error::parse(path, e.to_string()))?;
    Ok(rows
        .into_iter()
        .map(|r| PlantedEffect {
            region_pair: (r.i, r.j),
            delta: r.delta,
        })
        .collect())
}
