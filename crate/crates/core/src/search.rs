//! Randomized architecture search with cross-validated scoring, and kernel
//! density analysis of where the good and bad configurations live.
//!
//! Trials are independent jobs: per-trial seeds derive from
//! `(master seed, trial_id)`, so running them in parallel cannot change any
//! result. The KDE works on the (layers, log2 neurons) plane — the neurons
//! axis is geometric by construction, so log2 is its natural coordinate.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{auroc, kfold_indices, Dataset};
use crate::model::{init_model, train, ModelConfig};
use crate::seeds::{self, streams};

/// The searched axes. Layers and neurons are drawn uniformly from their
/// choice sets, dropout uniformly from its range, and the learning rate
/// log-uniformly from `10^lr_log10_range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub layers_choices: Vec<usize>,
    pub neurons_choices: Vec<usize>,
    pub dropout_range: (f64, f64),
    pub lr_log10_range: (f64, f64),
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            layers_choices: vec![1, 2, 3, 4, 5, 6],
            neurons_choices: vec![8, 16, 32, 64, 128, 256, 512],
            dropout_range: (0.0, 0.5),
            lr_log10_range: (-4.0, -2.0),
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.layers_choices.is_empty() || self.neurons_choices.is_empty() {
            return Err(Error::InvalidInput("search space choice sets must be non-empty".into()));
        }
        for w in self.layers_choices.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidInput(
                    "layers_choices must be strictly ascending".into(),
                ));
            }
        }
        for w in self.neurons_choices.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidInput(
                    "neurons_choices must be strictly ascending".into(),
                ));
            }
        }
        if self.dropout_range.0 > self.dropout_range.1
            || self.lr_log10_range.0 > self.lr_log10_range.1
        {
            return Err(Error::InvalidInput("search space ranges must be ordered".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_range.0)
            || !(0.0..1.0).contains(&self.dropout_range.1)
        {
            return Err(Error::InvalidInput("dropout_range must lie within [0, 1)".into()));
        }
        Ok(())
    }
}

/// Fixed (non-searched) training parameters applied to every sampled config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingDefaults {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for TrainingDefaults {
    fn default() -> Self {
        Self {
            batch_size: 32,
            max_epochs: 200,
            patience: 10,
        }
    }
}

/// One sampled configuration and its cross-validated scores.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_id: usize,
    pub config: ModelConfig,
    pub fold_aurocs: Vec<f64>,
    pub mean_auroc: f64,
    /// Per-fold anomalies, e.g. `fold1:diverged`. Empty for clean trials.
    pub flags: Vec<String>,
}

fn uniform_in(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

/// Draw one configuration. The sampling order (layers, neurons, dropout,
/// learning rate) is fixed so a given rng state always yields the same
/// config. The returned seed is 0; `run_search` assigns per-trial seeds.
pub fn sample_config(
    space: &SearchSpace,
    defaults: &TrainingDefaults,
    rng: &mut ChaCha8Rng,
) -> ModelConfig {
    let layers = space.layers_choices[rng.random_range(0..space.layers_choices.len())];
    let neurons = space.neurons_choices[rng.random_range(0..space.neurons_choices.len())];
    let dropout = uniform_in(rng, space.dropout_range);
    let lr = 10f64.powf(uniform_in(rng, space.lr_log10_range));
    ModelConfig {
        n_hidden_layers: layers,
        neurons_per_layer: neurons,
        dropout_rate: dropout,
        learning_rate: lr,
        batch_size: defaults.batch_size,
        max_epochs: defaults.max_epochs,
        patience: defaults.patience,
        seed: 0,
    }
}

/// Randomized search: `n_trials` configurations, each trained on every fold
/// and scored by AUROC on the fold's held-out validation indices. Diverged
/// folds score 0.5 and are flagged rather than dropped, keeping quantile
/// sizes deterministic. Output is ordered by trial_id.
pub fn run_search(
    train_set: &Dataset,
    space: &SearchSpace,
    defaults: &TrainingDefaults,
    n_trials: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    space.validate()?;
    if n_trials == 0 {
        return Err(Error::InvalidInput("n_trials must be at least 1".into()));
    }
    let folds = kfold_indices(&train_set.labels, k, seed)?;

    let records: Vec<TrialRecord> = (0..n_trials)
        .into_par_iter()
        .map(|trial_id| {
            let mut config_rng = ChaCha8Rng::seed_from_u64(seeds::derive_item(
                seed,
                streams::SEARCH_CONFIG,
                trial_id as u64,
            ));
            let mut config = sample_config(space, defaults, &mut config_rng);
            config.seed = seeds::derive_item(seed, streams::SEARCH_TRIAL, trial_id as u64);

            let mut fold_aurocs = Vec::with_capacity(k);
            let mut flags = Vec::new();
            for (f, (train_idx, val_idx)) in folds.iter().enumerate() {
                let mut fold_config = config.clone();
                fold_config.seed = seeds::derive_item(config.seed, streams::TRAIN_FOLD, f as u64);
                match run_fold(train_set, train_idx, val_idx, &fold_config) {
                    Ok(score) => fold_aurocs.push(score),
                    Err(Error::TrainingDiverged { epoch }) => {
                        fold_aurocs.push(0.5);
                        flags.push(format!("fold{f}:diverged@epoch{epoch}"));
                    }
                    Err(other) => {
                        fold_aurocs.push(0.5);
                        flags.push(format!("fold{f}:error:{other}"));
                    }
                }
            }
            let mean_auroc = fold_aurocs.iter().sum::<f64>() / fold_aurocs.len() as f64;
            Ok(TrialRecord {
                trial_id,
                config,
                fold_aurocs,
                mean_auroc,
                flags,
            })
        })
        .collect::<Result<_>>()?;
    Ok(records)
}

fn run_fold(
    data: &Dataset,
    train_idx: &[usize],
    val_idx: &[usize],
    config: &ModelConfig,
) -> Result<f64> {
    let train_fold = data.subset(train_idx)?;
    let val_fold = data.subset(val_idx)?;
    let model = init_model(config, data.n_features())?;
    let trained = train(model, &train_fold, &val_fold)?;
    let scores = trained.predict_proba(val_fold.features.view())?;
    auroc(&val_fold.labels, scores.as_slice().expect("contiguous scores"))
}

/// Top and bottom score quantiles, each of size ceil(q * n). Ties break
/// toward lower trial_id for the top set and higher trial_id for the bottom
/// set, so fully tied scores still yield disjoint sets when 2*ceil(q*n) <= n.
pub fn select_quantiles(
    trials: &[TrialRecord],
    q: f64,
) -> Result<(Vec<TrialRecord>, Vec<TrialRecord>)> {
    if !(q > 0.0 && q <= 0.5) {
        return Err(Error::InvalidInput(format!(
            "quantile q must lie in (0, 0.5], got {q}"
        )));
    }
    let needed = (1.0 / q).ceil() as usize;
    if trials.len() < needed {
        return Err(Error::InvalidInput(format!(
            "need at least {needed} trials for q = {q}, got {}",
            trials.len()
        )));
    }
    let m = (q * trials.len() as f64).ceil() as usize;

    let mut by_top: Vec<&TrialRecord> = trials.iter().collect();
    by_top.sort_by(|a, b| {
        b.mean_auroc
            .partial_cmp(&a.mean_auroc)
            .expect("finite scores")
            .then(a.trial_id.cmp(&b.trial_id))
    });
    let mut by_bottom: Vec<&TrialRecord> = trials.iter().collect();
    by_bottom.sort_by(|a, b| {
        a.mean_auroc
            .partial_cmp(&b.mean_auroc)
            .expect("finite scores")
            .then(b.trial_id.cmp(&a.trial_id))
    });

    let top = by_top[..m].iter().map(|r| (*r).clone()).collect();
    let bottom = by_bottom[..m].iter().map(|r| (*r).clone()).collect();
    Ok((top, bottom))
}

/// A rectangular evaluation grid along one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn nodes(&self) -> Vec<f64> {
        let step = self.step();
        (0..self.n).map(|i| self.min + step * i as f64).collect()
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || !(self.max > self.min) {
            return Err(Error::InvalidInput(format!(
                "grid must have max > min and at least 2 nodes, got [{}, {}] with {}",
                self.min, self.max, self.n
            )));
        }
        Ok(())
    }
}

/// Bandwidth floor, in units of the hyperparameter design grid (both axes are
/// unit-spaced: layers count in steps of 1, neurons in factors of 2). It
/// prevents degenerate spikes when a quantile collapses onto few distinct
/// configurations.
pub const BANDWIDTH_FLOOR: f64 = 0.25;

/// A 2-D product-Gaussian KDE evaluated on a grid.
#[derive(Debug, Clone)]
pub struct Kde2d {
    /// rows follow the first (layers) axis, columns the second.
    pub density: Array2<f64>,
    pub bandwidths: (f64, f64),
}

fn scott_bandwidth(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    let vals: Vec<f64> = values.collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    var.sqrt() * (n as f64).powf(-1.0 / 6.0)
}

/// Product-Gaussian KDE over `(layers, log2 neurons)` points. Default
/// bandwidths follow Scott's rule for d = 2, `h = sigma_hat * n^(-1/6)` per
/// axis, floored at [`BANDWIDTH_FLOOR`]; a zero-variance axis simply lands on
/// the floor.
pub fn kde2d(
    points: &[(f64, f64)],
    grid_x: &GridSpec,
    grid_y: &GridSpec,
    bandwidth: Option<(f64, f64)>,
) -> Result<Kde2d> {
    if points.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "kde2d needs at least 2 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidInput("kde2d points must be finite".into()));
    }
    grid_x.validate()?;
    grid_y.validate()?;

    let n = points.len();
    let (hx, hy) = match bandwidth {
        Some((hx, hy)) => {
            if !(hx > 0.0 && hy > 0.0) {
                return Err(Error::InvalidInput("explicit bandwidths must be positive".into()));
            }
            (hx, hy)
        }
        None => (
            scott_bandwidth(points.iter().map(|p| p.0), n).max(BANDWIDTH_FLOOR),
            scott_bandwidth(points.iter().map(|p| p.1), n).max(BANDWIDTH_FLOOR),
        ),
    };

    let xs = grid_x.nodes();
    let ys = grid_y.nodes();
    let norm = 1.0 / (n as f64 * 2.0 * std::f64::consts::PI * hx * hy);
    let mut density = Array2::<f64>::zeros((xs.len(), ys.len()));
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let mut acc = 0.0;
            for &(px, py) in points {
                let dx = (x - px) / hx;
                let dy = (y - py) / hy;
                acc += (-0.5 * (dx * dx + dy * dy)).exp();
            }
            density[(i, j)] = acc * norm;
        }
    }
    Ok(Kde2d {
        density,
        bandwidths: (hx, hy),
    })
}

fn nearest_choice(choices: &[usize], coordinate: f64, log2_domain: bool) -> usize {
    let mut best = choices[0];
    let mut best_dist = f64::INFINITY;
    for &c in choices {
        let pos = if log2_domain { (c as f64).log2() } else { c as f64 };
        let dist = (pos - coordinate).abs();
        // Strictly-closer keeps the smaller choice on ties (ascending order).
        if dist < best_dist {
            best_dist = dist;
            best = c;
        }
    }
    best
}

/// Argmax of a density over its grid nodes (ties resolve to the smallest
/// layers, then neurons coordinate), snapped to the nearest available choice
/// on each axis; the neurons coordinate is interpreted as log2(neurons).
pub fn kde_peak(
    density: &Array2<f64>,
    grid_x: &GridSpec,
    grid_y: &GridSpec,
    space: &SearchSpace,
) -> Result<(usize, usize)> {
    if density.nrows() != grid_x.n || density.ncols() != grid_y.n {
        return Err(Error::InvalidInput(format!(
            "density shape {:?} does not match grid {}x{}",
            density.dim(),
            grid_x.n,
            grid_y.n
        )));
    }
    let xs = grid_x.nodes();
    let ys = grid_y.nodes();
    let mut best = (0usize, 0usize);
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..xs.len() {
        for j in 0..ys.len() {
            if density[(i, j)] > best_val {
                best_val = density[(i, j)];
                best = (i, j);
            }
        }
    }
    let layers = nearest_choice(&space.layers_choices, xs[best.0], false);
    let neurons = nearest_choice(&space.neurons_choices, ys[best.1], true);
    Ok((layers, neurons))
}

/// Whether a peak sits strictly inside the searched choice sets, plus its
/// distance (in choice steps) to the nearer boundary on each axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdequacyReport {
    pub adequate: bool,
    pub margin_layers: usize,
    pub margin_neurons: usize,
}

/// A search range is adequate when the peak is not at an extreme choice on
/// any axis.
pub fn range_adequacy(peak: (usize, usize), space: &SearchSpace) -> Result<AdequacyReport> {
    let pos_layers = space
        .layers_choices
        .iter()
        .position(|&c| c == peak.0)
        .ok_or_else(|| {
            Error::InvalidInput(format!("peak layers {} not among the choices", peak.0))
        })?;
    let pos_neurons = space
        .neurons_choices
        .iter()
        .position(|&c| c == peak.1)
        .ok_or_else(|| {
            Error::InvalidInput(format!("peak neurons {} not among the choices", peak.1))
        })?;
    let margin_layers = pos_layers.min(space.layers_choices.len() - 1 - pos_layers);
    let margin_neurons = pos_neurons.min(space.neurons_choices.len() - 1 - pos_neurons);
    Ok(AdequacyReport {
        adequate: margin_layers > 0 && margin_neurons > 0,
        margin_layers,
        margin_neurons,
    })
}

/// The full KDE analysis of a finished search: densities over the
/// (layers, log2 neurons) plane for the top and bottom quantiles, their
/// peaks, and the range-adequacy verdict for the top peak.
#[derive(Debug, Clone)]
pub struct KdeResult {
    pub grid_layers: GridSpec,
    pub grid_log2_neurons: GridSpec,
    pub density_top: Array2<f64>,
    pub density_bottom: Array2<f64>,
    pub peak_top: (usize, usize),
    pub peak_bottom: (usize, usize),
    pub bandwidths_top: (f64, f64),
    pub bandwidths_bottom: (f64, f64),
    pub adequacy: AdequacyReport,
}

fn trial_points(trials: &[TrialRecord]) -> Vec<(f64, f64)> {
    trials
        .iter()
        .map(|t| {
            (
                t.config.n_hidden_layers as f64,
                (t.config.neurons_per_layer as f64).log2(),
            )
        })
        .collect()
}

/// Quantile selection plus KDE for both quantiles on a shared grid. The grid
/// covers every choice with enough padding (at least four bandwidths) that
/// the trapezoidal density integral stays within 2% of one.
pub fn analyze_trials(trials: &[TrialRecord], space: &SearchSpace, q: f64) -> Result<KdeResult> {
    space.validate()?;
    let (top, bottom) = select_quantiles(trials, q)?;
    let points_top = trial_points(&top);
    let points_bottom = trial_points(&bottom);

    let scott = |points: &[(f64, f64)]| -> (f64, f64) {
        let n = points.len();
        (
            scott_bandwidth(points.iter().map(|p| p.0), n).max(BANDWIDTH_FLOOR),
            scott_bandwidth(points.iter().map(|p| p.1), n).max(BANDWIDTH_FLOOR),
        )
    };
    let bw_top = scott(&points_top);
    let bw_bottom = scott(&points_bottom);
    let pad_x = 4.0 * bw_top.0.max(bw_bottom.0);
    let pad_y = 4.0 * bw_top.1.max(bw_bottom.1);

    let layers_lo = space.layers_choices[0] as f64;
    let layers_hi = *space.layers_choices.last().unwrap() as f64;
    let log2_lo = (space.neurons_choices[0] as f64).log2();
    let log2_hi = (*space.neurons_choices.last().unwrap() as f64).log2();

    let grid_axis = |lo: f64, hi: f64| -> GridSpec {
        let n = ((hi - lo) / 0.1).round() as usize + 1;
        GridSpec {
            min: lo,
            max: hi,
            n: n.max(2),
        }
    };
    let grid_layers = grid_axis(layers_lo - pad_x, layers_hi + pad_x);
    let grid_neurons = grid_axis(log2_lo - pad_y, log2_hi + pad_y);

    let kde_top = kde2d(&points_top, &grid_layers, &grid_neurons, Some(bw_top))?;
    let kde_bottom = kde2d(&points_bottom, &grid_layers, &grid_neurons, Some(bw_bottom))?;
    let peak_top = kde_peak(&kde_top.density, &grid_layers, &grid_neurons, space)?;
    let peak_bottom = kde_peak(&kde_bottom.density, &grid_layers, &grid_neurons, space)?;
    let adequacy = range_adequacy(peak_top, space)?;

    Ok(KdeResult {
        grid_layers,
        grid_log2_neurons: grid_neurons,
        density_top: kde_top.density,
        density_bottom: kde_bottom.density,
        peak_top,
        peak_bottom,
        bandwidths_top: kde_top.bandwidths,
        bandwidths_bottom: kde_bottom.bandwidths,
        adequacy,
    })
}
