//! kde.json: grids, both density surfaces, peaks, bandwidths, and the
//! range-adequacy verdict from a finished search analysis.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::search::KdeResult;

use super::create;

#[derive(Serialize)]
struct PeakOut {
    layers: usize,
    neurons: usize,
}

#[derive(Serialize)]
struct GridOut {
    layers: Vec<f64>,
    log2_neurons: Vec<f64>,
}

#[derive(Serialize)]
struct KdeOut<'a> {
    grid: GridOut,
    density_top: Vec<Vec<f64>>,
    density_bottom: Vec<Vec<f64>>,
    peaks: Peaks,
    bandwidths: Bandwidths,
    adequacy: &'a crate::search::AdequacyReport,
}

#[derive(Serialize)]
struct Peaks {
    top: PeakOut,
    bottom: PeakOut,
}

#[derive(Serialize)]
struct Bandwidths {
    top: (f64, f64),
    bottom: (f64, f64),
}

fn rows(m: &ndarray::Array2<f64>) -> Vec<Vec<f64>> {
    m.outer_iter().map(|r| r.to_vec()).collect()
}

pub fn write_kde(path: &Path, result: &KdeResult) -> Result<()> {
    let doc = KdeOut {
        grid: GridOut {
            layers: result.grid_layers.nodes(),
            log2_neurons: result.grid_log2_neurons.nodes(),
        },
        density_top: rows(&result.density_top),
        density_bottom: rows(&result.density_bottom),
        peaks: Peaks {
            top: PeakOut {
                layers: result.peak_top.0,
                neurons: result.peak_top.1,
            },
            bottom: PeakOut {
                layers: result.peak_bottom.0,
                neurons: result.peak_bottom.1,
            },
        },
        bandwidths: Bandwidths {
            top: result.bandwidths_top,
            bottom: result.bandwidths_bottom,
        },
        adequacy: &result.adequacy,
    };
    let out = create(path)?;
    serde_json::to_writer(out, &doc).map_err(|e| Error::parse(path, e.to_string()))
}
