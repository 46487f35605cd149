//! Dataset container, stratified splitting, k-fold cross-validation, AUROC.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seeds::{self, streams};

/// Feature matrix with labels, subject ids, and the region pair behind each
/// feature column.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<u8>,
    pub subject_ids: Vec<String>,
    pub feature_pairs: Vec<(usize, usize)>,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        labels: Vec<u8>,
        subject_ids: Vec<String>,
        feature_pairs: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let n = features.nrows();
        if labels.len() != n || subject_ids.len() != n {
            return Err(Error::InvalidInput(format!(
                "row count mismatch: {} feature rows, {} labels, {} subject ids",
                n,
                labels.len(),
                subject_ids.len()
            )));
        }
        if feature_pairs.len() != features.ncols() {
            return Err(Error::InvalidInput(format!(
                "{} feature pairs for {} feature columns",
                feature_pairs.len(),
                features.ncols()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidInput(format!(
                "labels must be 0 or 1, got {bad}"
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "feature matrix contains non-finite entries".into(),
            ));
        }
        Ok(Self {
            features,
            labels,
            subject_ids,
            feature_pairs,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// (controls, cases) counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let cases = self.labels.iter().filter(|&&l| l == 1).count();
        (self.labels.len() - cases, cases)
    }

    /// New dataset holding the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.iter().any(|&i| i >= self.len()) {
            return Err(Error::InvalidInput("subset index out of range".into()));
        }
        let features = self.features.select(ndarray::Axis(0), indices);
        Ok(Self {
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            subject_ids: indices.iter().map(|&i| self.subject_ids[i].clone()).collect(),
            feature_pairs: self.feature_pairs.clone(),
        })
    }
}

fn class_indices(labels: &[u8]) -> (Vec<usize>, Vec<usize>) {
    let mut zeros = Vec::new();
    let mut ones = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 {
            zeros.push(i);
        } else {
            ones.push(i);
        }
    }
    (zeros, ones)
}

/// Per-class test count: nearest integer, with an exact .5 fraction rounded
/// up for the larger class and down for the smaller class (ties in class size
/// treat the case class as the smaller one). This pins the counts so they are
/// reproducible across implementations.
fn stratified_test_count(n_class: usize, fraction: f64, is_smaller: bool) -> usize {
    let x = fraction * n_class as f64;
    let frac = x - x.floor();
    if (frac - 0.5).abs() < 1e-9 {
        if is_smaller {
            x.floor() as usize
        } else {
            x.ceil() as usize
        }
    } else {
        x.round() as usize
    }
}

/// Stratified train/test indices, deterministic under `seed`. Outputs are
/// sorted ascending, disjoint, and exhaustive.
pub fn split_indices(
    labels: &[u8],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0 < test_fraction && test_fraction < 1.0) {
        return Err(Error::InvalidSplit(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let (zeros, ones) = class_indices(labels);
    if zeros.len() < 2 || ones.len() < 2 {
        return Err(Error::InvalidSplit(format!(
            "need at least 2 subjects per class, got {} controls and {} cases",
            zeros.len(),
            ones.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, streams::SPLIT));
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, indices) in [(0u8, &zeros), (1u8, &ones)] {
        let other_len = if class == 0 { ones.len() } else { zeros.len() };
        let is_smaller =
            indices.len() < other_len || (indices.len() == other_len && class == 1);
        let n_test = stratified_test_count(indices.len(), test_fraction, is_smaller);
        if n_test == 0 {
            return Err(Error::InvalidSplit(format!(
                "class {class} would receive 0 test subjects"
            )));
        }
        if n_test >= indices.len() {
            return Err(Error::InvalidSplit(format!(
                "class {class} would receive 0 training subjects"
            )));
        }
        let mut shuffled = indices.clone();
        shuffled.shuffle(&mut rng);
        test.extend_from_slice(&shuffled[..n_test]);
        train.extend_from_slice(&shuffled[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified train/test split of a dataset.
pub fn split_train_test(d: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train_idx, test_idx) = split_indices(&d.labels, test_fraction, seed)?;
    Ok((d.subset(&train_idx)?, d.subset(&test_idx)?))
}

/// Stratified k-fold assignments: `(train_indices, validation_indices)` per
/// fold. Every subject validates exactly once; per-class fold sizes differ by
/// at most one, and the per-class remainders rotate across folds so total
/// fold sizes stay balanced too.
pub fn kfold_indices(labels: &[u8], k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 {
        return Err(Error::InvalidSplit(format!("k must be at least 2, got {k}")));
    }
    let (zeros, ones) = class_indices(labels);
    for (class, len) in [(0, zeros.len()), (1, ones.len())] {
        if len < k {
            return Err(Error::InvalidSplit(format!(
                "class {class} has {len} members, fewer than k = {k}"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, streams::KFOLD));
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut offset = 0usize;
    for indices in [&zeros, &ones] {
        let mut shuffled = indices.clone();
        shuffled.shuffle(&mut rng);
        for (t, &subject) in shuffled.iter().enumerate() {
            folds[(offset + t) % k].push(subject);
        }
        offset = (offset + indices.len()) % k;
    }

    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let mut val = folds[i].clone();
        val.sort_unstable();
        let mut train: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        train.sort_unstable();
        out.push((train, val));
    }
    Ok(out)
}

/// Stratified k-fold over a dataset.
pub fn kfold(d: &Dataset, k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    kfold_indices(&d.labels, k, seed)
}

/// Area under the ROC curve, Mann-Whitney formulation: over all
/// (positive, negative) pairs, credit 1 when the positive scores higher and
/// 0.5 on ties. Computed with midranks in O(N log N); all intermediate sums
/// are half-integers, so the result is bit-identical to the O(N^2) pair count.
pub fn auroc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::InvalidInput(format!(
            "{} labels but {} scores",
            labels.len(),
            scores.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("scores contain non-finite values".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Undefined(
            "AUROC requires both classes to be present".into(),
        ));
    }

    let n = labels.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("scores are finite"));

    // Midranks (1-based); runs of equal scores share the average rank.
    let mut rank_sum_pos = 0.0f64;
    let mut lo = 0;
    while lo < n {
        let mut hi = lo;
        while hi + 1 < n && scores[order[hi + 1]] == scores[order[lo]] {
            hi += 1;
        }
        let midrank = (lo + hi) as f64 / 2.0 + 1.0;
        for &idx in &order[lo..=hi] {
            if labels[idx] == 1 {
                rank_sum_pos += midrank;
            }
        }
        lo = hi + 1;
    }

    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}
