//! Model serialization: one JSON document holding the config, input
//! dimension, per-layer weight arrays (row-major) with biases, and the
//! training history. Floats are written with 17 significant digits so
//! deserialization reproduces every weight bit-for-bit.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EpochStats, ModelConfig, TrainedModel};

use super::{create, open};

#[derive(Serialize, Deserialize)]
struct LayerDoc {
    rows: usize,
    cols: usize,
    /// Row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    config: ModelConfig,
    input_dim: usize,
    layers: Vec<LayerDoc>,
    history: Vec<EpochStats>,
}

/// serde_json formatter that writes every f64 with 17 significant digits;
/// that many digits always round-trip exactly through parsing.
struct SigDigits17;

impl serde_json::ser::Formatter for SigDigits17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

pub fn write_model(path: &Path, model: &TrainedModel) -> Result<()> {
    let layers: Vec<LayerDoc> = model
        .weights()
        .iter()
        .zip(model.biases())
        .map(|(w, b)| LayerDoc {
            rows: w.nrows(),
            cols: w.ncols(),
            weights: w.iter().copied().collect(),
            bias: b.to_vec(),
        })
        .collect();
    let doc = ModelDoc {
        config: model.config.clone(),
        input_dim: model.input_dim,
        layers,
        history: model.history.clone(),
    };
    let mut out = create(path)?;
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigits17);
    doc.serialize(&mut ser)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_model(path: &Path) -> Result<TrainedModel> {
    let doc: ModelDoc =
        serde_json::from_reader(open(path)?).map_err(|e| Error::parse(path, e.to_string()))?;
    let mut weights = Vec::with_capacity(doc.layers.len());
    let mut biases = Vec::with_capacity(doc.layers.len());
    for (l, layer) in doc.layers.into_iter().enumerate() {
        let w = ndarray::Array2::from_shape_vec((layer.rows, layer.cols), layer.weights)
            .map_err(|e| Error::parse(path, format!("layer {l}: {e}")))?;
        weights.push(w);
        biases.push(ndarray::Array1::from_vec(layer.bias));
    }
    TrainedModel::from_parts(doc.config, doc.input_dim, weights, biases, doc.history)
}
