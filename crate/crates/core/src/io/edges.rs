//! edges.json: above-threshold features with endpoint coordinates,
//! `[{i, j, z, xi, yi, zi, xj, yj, zj}, ...]`, for glass-brain-style
//! rendering by external tools.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::importance::Edge;

use super::create;

#[derive(Serialize)]
struct EdgeRow {
    i: usize,
    j: usize,
    z: f64,
    xi: f64,
    yi: f64,
    zi: f64,
    xj: f64,
    yj: f64,
    zj: f64,
}

pub fn write_edges(path: &Path, edges: &[Edge]) -> Result<()> {
    let rows: Vec<EdgeRow> = edges
        .iter()
        .map(|e| EdgeRow {
            i: e.region_pair.0,
            j: e.region_pair.1,
            z: e.z,
            xi: e.centroid_i[0],
            yi: e.centroid_i[1],
            zi: e.centroid_i[2],
            xj: e.centroid_j[0],
            yj: e.centroid_j[1],
            zj: e.centroid_j[2],
        })
        .collect();
    let out = create(path)?;
    serde_json::to_writer_pretty(out, &rows).map_err(|e| Error::parse(path, e.to_string()))
}
