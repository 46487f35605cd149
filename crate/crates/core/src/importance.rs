//! Permutation feature importance and anatomical labeling.
//!
//! A feature's importance is the drop in test AUROC when its column is
//! shuffled: I = P_b - P_a, averaged over several independent permutations.
//! Importances are reported as z-scores over the full feature set, and top
//! features get Brodmann-area labels by nearest-centroid matching so rankings
//! can be compared across atlas granularities.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{auroc, Dataset};
use crate::model::TrainedModel;
use crate::seeds::{self, streams};
use crate::synthgen::{Atlas, FunctionalLabel};

/// One feature's importance, ranked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRecord {
    /// 1-based; ordering is by descending z, ties by ascending feature index.
    pub rank: usize,
    pub feature_index: usize,
    pub region_pair: (usize, usize),
    /// AUROC units.
    pub raw_importance: f64,
    pub z_score: f64,
    pub ba_pair: Option<(u32, u32)>,
    pub functional_pair: (FunctionalLabel, FunctionalLabel),
}

/// One row of the Brodmann-area reference table.
#[derive(Debug, Clone, PartialEq)]
pub struct BrodmannArea {
    pub ba_id: u32,
    /// Millimeters, same frame as atlas centroids.
    pub centroid: [f64; 3],
    pub name: String,
}

/// Reference centroids for Brodmann areas; ships as a data file so synthetic
/// and real coordinate frames both work.
#[derive(Debug, Clone, PartialEq)]
pub struct BrodmannTable {
    pub entries: Vec<BrodmannArea>,
}

impl BrodmannTable {
    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::InvalidInput("Brodmann table is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.ba_id) {
                return Err(Error::InvalidInput(format!(
                    "duplicate Brodmann id {} in table",
                    e.ba_id
                )));
            }
            if e.centroid.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "Brodmann area {} has a non-finite centroid",
                    e.ba_id
                )));
            }
        }
        Ok(())
    }
}

/// Raw permutation importances for every feature.
///
/// P_b is the AUROC of the intact test set (a constant of that set, computed
/// once and shared). For each feature, `repeats` independent within-column
/// permutations are scored and I = P_b - mean(P_a). Per-feature seeds derive
/// from `(seed, feature index)`, so results do not depend on the order in
/// which features are processed.
pub fn pfi(model: &TrainedModel, test: &Dataset, repeats: usize, seed: u64) -> Result<Vec<f64>> {
    if test.n_features() == 0 {
        return Err(Error::InvalidInput("test set has no features".into()));
    }
    if test.n_features() != model.input_dim {
        return Err(Error::InvalidInput(format!(
            "test set has {} features, model expects {}",
            test.n_features(),
            model.input_dim
        )));
    }
    if repeats == 0 {
        return Err(Error::InvalidInput("repeats must be at least 1".into()));
    }

    let baseline_scores = model.predict_proba(test.features.view())?;
    let p_b = auroc(&test.labels, baseline_scores.as_slice().expect("contiguous"))?;

    let n = test.len();
    (0..test.n_features())
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive_item(
                seed,
                streams::PFI_FEATURE,
                j as u64,
            ));
            let mut perturbed = test.features.clone();
            let original: Vec<f64> = test.features.column(j).to_vec();
            let mut order: Vec<usize> = (0..n).collect();
            let mut p_a_sum = 0.0;
            for _ in 0..repeats {
                order.shuffle(&mut rng);
                for (row, &src) in order.iter().enumerate() {
                    perturbed[(row, j)] = original[src];
                }
                let scores = model.predict_proba(perturbed.view())?;
                p_a_sum += auroc(&test.labels, scores.as_slice().expect("contiguous"))?;
            }
            Ok(p_b - p_a_sum / repeats as f64)
        })
        .collect()
}

/// Population z-scores of the raw importances.
pub fn zscores(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.len() < 2 {
        return Err(Error::InvalidInput(
            "z-scores need at least 2 features".into(),
        ));
    }
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let var = raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return Err(Error::DegenerateImportances);
    }
    Ok(raw.iter().map(|v| (v - mean) / std).collect())
}

/// The `top_k` features by descending z-score (ties by ascending feature
/// index), annotated with region pairs and functional labels. Brodmann pairs
/// start out empty; see [`annotate_brodmann`].
pub fn zscore_rank(
    raw: &[f64],
    atlas: &Atlas,
    feature_pairs: &[(usize, usize)],
    top_k: usize,
) -> Result<Vec<ImportanceRecord>> {
    if raw.len() != feature_pairs.len() {
        return Err(Error::InvalidInput(format!(
            "{} importances for {} feature pairs",
            raw.len(),
            feature_pairs.len()
        )));
    }
    let z = zscores(raw)?;
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| {
        z[b].partial_cmp(&z[a])
            .expect("finite z-scores")
            .then(a.cmp(&b))
    });

    order
        .into_iter()
        .take(top_k)
        .enumerate()
        .map(|(pos, idx)| {
            let (i, j) = feature_pairs[idx];
            if i >= atlas.n_regions() || j >= atlas.n_regions() {
                return Err(Error::InvalidInput(format!(
                    "feature pair ({i}, {j}) outside atlas with {} regions",
                    atlas.n_regions()
                )));
            }
            Ok(ImportanceRecord {
                rank: pos + 1,
                feature_index: idx,
                region_pair: (i, j),
                raw_importance: raw[idx],
                z_score: z[idx],
                ba_pair: None,
                functional_pair: (
                    atlas.regions[i].functional_label,
                    atlas.regions[j].functional_label,
                ),
            })
        })
        .collect()
}

/// Fill in `ba_pair` from a region -> Brodmann mapping.
pub fn annotate_brodmann(records: &mut [ImportanceRecord], mapping: &[u32]) {
    for record in records {
        let (i, j) = record.region_pair;
        record.ba_pair = Some((mapping[i], mapping[j]));
    }
}

/// An above-threshold connectivity feature with its endpoint coordinates,
/// ready for connectome-style rendering by external tools.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub region_pair: (usize, usize),
    pub z: f64,
    pub centroid_i: [f64; 3],
    pub centroid_j: [f64; 3],
}

/// Every feature with z >= tau (inclusive). An empty result is fine.
pub fn threshold_edges(
    z: &[f64],
    atlas: &Atlas,
    feature_pairs: &[(usize, usize)],
    tau: f64,
) -> Result<Vec<Edge>> {
    if z.len() != feature_pairs.len() {
        return Err(Error::InvalidInput(format!(
            "{} z-scores for {} feature pairs",
            z.len(),
            feature_pairs.len()
        )));
    }
    z.iter()
        .zip(feature_pairs)
        .filter(|(&zv, _)| zv >= tau)
        .map(|(&zv, &(i, j))| {
            if i >= atlas.n_regions() || j >= atlas.n_regions() {
                return Err(Error::InvalidInput(format!(
                    "feature pair ({i}, {j}) outside atlas with {} regions",
                    atlas.n_regions()
                )));
            }
            Ok(Edge {
                region_pair: (i, j),
                z: zv,
                centroid_i: atlas.regions[i].centroid,
                centroid_j: atlas.regions[j].centroid,
            })
        })
        .collect()
}

/// Map each atlas region to the Brodmann area with the nearest centroid
/// (Euclidean); ties resolve to the smaller ba_id. Indexed by region id.
pub fn map_to_brodmann(atlas: &Atlas, table: &BrodmannTable) -> Result<Vec<u32>> {
    table.validate()?;
    Ok(atlas
        .regions
        .iter()
        .map(|region| {
            let mut best_id = u32::MAX;
            let mut best_dist = f64::INFINITY;
            for ba in &table.entries {
                let dist = region
                    .centroid
                    .iter()
                    .zip(&ba.centroid)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
                if dist < best_dist || (dist == best_dist && ba.ba_id < best_id) {
                    best_dist = dist;
                    best_id = ba.ba_id;
                }
            }
            best_id
        })
        .collect())
}

/// Cross-granularity comparison of per-atlas top-k Brodmann-pair rankings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub n_rankings: usize,
    /// How many top-k features (summed over all rankings) involve each BA;
    /// a feature counts once per BA its pair contains.
    pub ba_counts: BTreeMap<u32, usize>,
    /// Unordered BA pairs present in every ranking.
    pub common_pairs: Vec<(u32, u32)>,
}

fn normalize(pair: (u32, u32)) -> (u32, u32) {
    if pair.0 <= pair.1 {
        pair
    } else {
        (pair.1, pair.0)
    }
}

/// Per-BA involvement counts across rankings plus the set of BA pairs common
/// to all of them.
pub fn cross_granularity_overlap(rankings: &[Vec<(u32, u32)>]) -> Result<OverlapReport> {
    if rankings.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "overlap needs at least 2 rankings, got {}",
            rankings.len()
        )));
    }

    let mut ba_counts: BTreeMap<u32, usize> = BTreeMap::new();
    for ranking in rankings {
        for &pair in ranking {
            let (a, b) = normalize(pair);
            *ba_counts.entry(a).or_insert(0) += 1;
            if b != a {
                *ba_counts.entry(b).or_insert(0) += 1;
            }
        }
    }

    let mut common: BTreeSet<(u32, u32)> =
        rankings[0].iter().map(|&p| normalize(p)).collect();
    for ranking in &rankings[1..] {
        let set: BTreeSet<(u32, u32)> = ranking.iter().map(|&p| normalize(p)).collect();
        common = common.intersection(&set).copied().collect();
    }

    Ok(OverlapReport {
        n_rankings: rankings.len(),
        ba_counts,
        common_pairs: common.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_model, train, ModelConfig};
    use crate::synthgen::make_atlas;
    use approx::assert_abs_diff_eq;
    use ndarray::{Array1, Array2};
    use rand::Rng;

    fn toy_config(seed: u64) -> ModelConfig {
        ModelConfig {
            n_hidden_layers: 1,
            neurons_per_layer: 8,
            dropout_rate: 0.0,
            learning_rate: 1e-2,
            batch_size: 16,
            max_epochs: 60,
            patience: 60,
            seed,
        }
    }

    fn informative_dataset(n: usize, f: usize, signal: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut features = Array2::from_shape_fn((n, f), |_| rng.random::<f64>() * 2.0 - 1.0);
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        for i in 0..n {
            features[(i, signal)] =
                labels[i] as f64 * 2.0 - 1.0 + (rng.random::<f64>() - 0.5) * 0.4;
        }
        let ids = (0..n).map(|i| format!("s{i}")).collect();
        let pairs = (0..f).map(|j| (0, j)).collect();
        Dataset::new(features, labels, ids, pairs).unwrap()
    }

    #[test]
    fn ignored_feature_has_exactly_zero_importance() {
        let cfg = toy_config(1);
        let mut model = init_model(&cfg, 4).unwrap();
        // Zero the first-layer row of feature 2: the model cannot see it.
        let mut weights = model.weights().to_vec();
        for k in 0..weights[0].ncols() {
            weights[0][(2, k)] = 0.0;
        }
        model = TrainedModel::from_parts(cfg, 4, weights, model.biases().to_vec(), vec![]).unwrap();

        let d = informative_dataset(40, 4, 0, 3);
        let raw = pfi(&model, &d, 5, 7).unwrap();
        assert_eq!(raw[2], 0.0);
    }

    #[test]
    fn constant_feature_has_exactly_zero_importance() {
        let cfg = toy_config(2);
        let model = init_model(&cfg, 3).unwrap();
        let mut d = informative_dataset(30, 3, 0, 5);
        for i in 0..d.len() {
            d.features[(i, 1)] = 0.75;
        }
        let raw = pfi(&model, &d, 3, 11).unwrap();
        assert_eq!(raw[1], 0.0);
    }

    #[test]
    fn pfi_is_deterministic_under_seed() {
        let cfg = toy_config(3);
        let model = init_model(&cfg, 5).unwrap();
        let d = informative_dataset(30, 5, 1, 9);
        let a = pfi(&model, &d, 4, 13).unwrap();
        let b = pfi(&model, &d, 4, 13).unwrap();
        assert_eq!(a, b);
    }

    /// Independent oracle: a brute-force logistic regression trained by plain
    /// gradient ascent, with its own permutation-importance loop.
    fn logistic_pfi(d: &Dataset, repeats: usize, seed: u64) -> Vec<f64> {
        let n = d.len();
        let f = d.n_features();
        let mut w = Array1::<f64>::zeros(f);
        let mut b = 0.0f64;
        for _ in 0..400 {
            let mut gw = Array1::<f64>::zeros(f);
            let mut gb = 0.0;
            for i in 0..n {
                let z: f64 = d.features.row(i).dot(&w) + b;
                let p = 1.0 / (1.0 + (-z).exp());
                let err = d.labels[i] as f64 - p;
                for j in 0..f {
                    gw[j] += err * d.features[(i, j)];
                }
                gb += err;
            }
            w.scaled_add(0.5 / n as f64, &gw);
            b += 0.5 * gb / n as f64;
        }

        let score = |x: &Array2<f64>| -> Vec<f64> {
            (0..n).map(|i| x.row(i).dot(&w) + b).collect()
        };
        let p_b = auroc(&d.labels, &score(&d.features)).unwrap();
        let mut out = Vec::with_capacity(f);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for j in 0..f {
            let mut total = 0.0;
            for _ in 0..repeats {
                let mut x = d.features.clone();
                let mut col: Vec<f64> = x.column(j).to_vec();
                col.shuffle(&mut rng);
                for (i, &v) in col.iter().enumerate() {
                    x[(i, j)] = v;
                }
                total += auroc(&d.labels, &score(&x)).unwrap();
            }
            out.push(p_b - total / repeats as f64);
        }
        out
    }

    #[test]
    fn informative_feature_dominates_both_models() {
        let signal = 3;
        let d = informative_dataset(200, 10, signal, 21);
        let (train_set, test_set) = crate::evaluation::split_train_test(&d, 0.3, 1).unwrap();

        let cfg = toy_config(5);
        let model = train(init_model(&cfg, 10).unwrap(), &train_set, &test_set).unwrap();
        let scores = model.predict_proba(test_set.features.view()).unwrap();
        let test_auroc = auroc(&test_set.labels, scores.as_slice().unwrap()).unwrap();
        assert!(test_auroc >= 0.95, "toy model too weak: {test_auroc}");

        let raw = pfi(&model, &test_set, 5, 17).unwrap();
        for (j, &v) in raw.iter().enumerate() {
            if j != signal {
                assert!(
                    raw[signal] > v,
                    "feature {j} importance {v} not below signal {}",
                    raw[signal]
                );
            }
        }

        // Oracle: the independent logistic-regression PFI agrees on the winner.
        let oracle = logistic_pfi(&test_set, 5, 23);
        let oracle_argmax = oracle
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(oracle_argmax, signal);
    }

    #[test]
    fn zscore_matches_direct_formula_evaluation() {
        // raw = (1, 0, ..., 0) with F = 101. Direct evaluation of
        // z0 = (1 - mean) / std_pop with mean = 1/101 and
        // std_pop = sqrt(1/101 - 1/101^2) = 10/101 gives exactly 10.
        let mut raw = vec![0.0; 101];
        raw[0] = 1.0;
        let z = zscores(&raw).unwrap();
        let mean: f64 = 1.0 / 101.0;
        let std_pop = (mean - mean * mean).sqrt();
        let direct = (1.0 - mean) / std_pop;
        assert_abs_diff_eq!(z[0], direct, epsilon = 1e-12);
        assert_abs_diff_eq!(z[0], 10.0, epsilon = 1e-12);
    }

    #[test]
    fn zscores_sum_to_zero_with_unit_population_std() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let raw: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
        let z = zscores(&raw).unwrap();
        let sum: f64 = z.iter().sum();
        assert!(sum.abs() < 1e-9);
        let var = z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64;
        assert!((var.sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ranking_is_strictly_descending_for_distinct_raw() {
        let atlas = make_atlas(4, 1).unwrap();
        let pairs = crate::connectivity::region_pairs(4);
        let raw: Vec<f64> = (0..pairs.len()).map(|i| (i as f64 * 0.731).sin()).collect();
        let records = zscore_rank(&raw, &atlas, &pairs, pairs.len()).unwrap();
        for w in records.windows(2) {
            assert!(w[0].z_score > w[1].z_score);
        }
        for (pos, r) in records.iter().enumerate() {
            assert_eq!(r.rank, pos + 1);
        }
    }

    #[test]
    fn top_k_caps_record_count() {
        let atlas = make_atlas(64, 2).unwrap();
        let pairs = crate::connectivity::region_pairs(64);
        assert_eq!(pairs.len(), 2080);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let raw: Vec<f64> = (0..2080).map(|_| rng.random::<f64>()).collect();
        let records = zscore_rank(&raw, &atlas, &pairs, 15).unwrap();
        assert_eq!(records.len(), 15);
    }

    #[test]
    fn zero_variance_importances_are_degenerate() {
        match zscores(&[0.25; 10]) {
            Err(Error::DegenerateImportances) => {}
            other => panic!("expected DegenerateImportances, got {other:?}"),
        }
    }

    #[test]
    fn rank_order_is_affine_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let raw: Vec<f64> = (0..64).map(|_| rng.random::<f64>()).collect();
        let scaled: Vec<f64> = raw.iter().map(|v| 3.7 * v + 0.21).collect();
        let atlas = make_atlas(16, 3).unwrap();
        let pairs: Vec<(usize, usize)> = crate::connectivity::region_pairs(16)
            .into_iter()
            .take(64)
            .collect();
        let a = zscore_rank(&raw, &atlas, &pairs, 20).unwrap();
        let b = zscore_rank(&scaled, &atlas, &pairs, 20).unwrap();
        let idx = |r: &[ImportanceRecord]| r.iter().map(|x| x.feature_index).collect::<Vec<_>>();
        assert_eq!(idx(&a), idx(&b));
    }

    #[test]
    fn threshold_is_inclusive_at_tau() {
        let atlas = make_atlas(3, 1).unwrap();
        let pairs = crate::connectivity::region_pairs(3);
        let mut z = vec![0.0; pairs.len()];

        let edges = threshold_edges(&z, &atlas, &pairs, 6.0).unwrap();
        assert!(edges.is_empty());

        z[2] = 6.0; // exactly at the threshold: included
        let edges = threshold_edges(&z, &atlas, &pairs, 6.0).unwrap();
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].region_pair, pairs[2]);

        z[0] = 7.0;
        z[4] = 6.5;
        let edges = threshold_edges(&z, &atlas, &pairs, 6.0).unwrap();
        let got: Vec<(usize, usize)> = edges.iter().map(|e| e.region_pair).collect();
        assert_eq!(got, vec![pairs[0], pairs[2], pairs[4]]);
    }

    fn table(entries: &[(u32, [f64; 3])]) -> BrodmannTable {
        BrodmannTable {
            entries: entries
                .iter()
                .map(|&(ba_id, centroid)| BrodmannArea {
                    ba_id,
                    centroid,
                    name: format!("BA{ba_id}"),
                })
                .collect(),
        }
    }

    #[test]
    fn exact_centroid_match_maps_to_that_area() {
        let mut atlas = make_atlas(2, 1).unwrap();
        atlas.regions[0].centroid = [10.0, -20.0, 5.0];
        let t = table(&[(4, [0.0, 0.0, 0.0]), (6, [10.0, -20.0, 5.0])]);
        let mapping = map_to_brodmann(&atlas, &t).unwrap();
        assert_eq!(mapping[0], 6);
    }

    #[test]
    fn equidistant_tie_takes_smaller_ba_id() {
        let mut atlas = make_atlas(2, 1).unwrap();
        atlas.regions[0].centroid = [0.0, 0.0, 0.0];
        let t = table(&[(9, [5.0, 0.0, 0.0]), (3, [-5.0, 0.0, 0.0])]);
        let mapping = map_to_brodmann(&atlas, &t).unwrap();
        assert_eq!(mapping[0], 3);
    }

    #[test]
    fn mapping_matches_exhaustive_scan() {
        let atlas = make_atlas(32, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let entries: Vec<(u32, [f64; 3])> = (1..=20)
            .map(|ba| {
                (
                    ba,
                    [
                        rng.random_range(-90.0..90.0),
                        rng.random_range(-108.0..108.0),
                        rng.random_range(-72.0..72.0),
                    ],
                )
            })
            .collect();
        let t = table(&entries);
        let mapping = map_to_brodmann(&atlas, &t).unwrap();

        for (region, &got) in atlas.regions.iter().zip(&mapping) {
            let mut best = (f64::INFINITY, u32::MAX);
            for &(ba, c) in &entries {
                let d: f64 = region
                    .centroid
                    .iter()
                    .zip(&c)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if (d, ba) < best {
                    best = (d, ba);
                }
            }
            assert_eq!(got, best.1, "region {}", region.id);
        }
    }

    #[test]
    fn identical_rankings_overlap_fully() {
        let ranking = vec![(6u32, 6u32), (6, 39), (19, 39)];
        let report =
            cross_granularity_overlap(&[ranking.clone(), ranking.clone(), ranking.clone()])
                .unwrap();
        assert_eq!(report.common_pairs, vec![(6, 6), (6, 39), (19, 39)]);
        // BA 6 appears in 2 features per ranking, summed over 3 rankings.
        assert_eq!(report.ba_counts[&6], 6);
        assert_eq!(report.ba_counts[&39], 6);
        assert_eq!(report.ba_counts[&19], 3);
    }

    #[test]
    fn disjoint_rankings_share_nothing() {
        let a = vec![(1u32, 2u32), (3, 4)];
        let b = vec![(5u32, 6u32), (7, 8)];
        let report = cross_granularity_overlap(&[a, b]).unwrap();
        assert!(report.common_pairs.is_empty());
    }

    #[test]
    fn ba6_count_matches_hand_built_rankings() {
        // Three rankings of 15 features each (45 total); BA 6 appears in 11.
        let mut rankings = vec![Vec::new(), Vec::new(), Vec::new()];
        let mut planted = 0;
        for (r, ranking) in rankings.iter_mut().enumerate() {
            for k in 0..15 {
                let pair = if planted < 11 && (k + r) % 4 == 0 {
                    planted += 1;
                    (6u32, 40 + k as u32)
                } else {
                    (20 + r as u32, 40 + k as u32)
                };
                ranking.push(pair);
            }
        }
        assert_eq!(planted, 11);
        let report = cross_granularity_overlap(&rankings).unwrap();
        assert_eq!(report.ba_counts[&6], 11);
    }

    #[test]
    fn overlap_requires_two_rankings() {
        match cross_granularity_overlap(&[vec![(1, 2)]]) {
            Err(Error::InvalidInput(_)) => {}
            other => panic!("expected InvalidInput, got {other:?}"),
        }
    }
}
