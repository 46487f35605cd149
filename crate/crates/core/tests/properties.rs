//! Property tests for the spec-level invariants that hold across the whole
//! input space, not just at pinned examples.

use fcpipe_core::connectivity::{tangent_embed, unvectorize, CovMatrix};
use fcpipe_core::evaluation::{auroc, split_indices};
use fcpipe_core::search::{kde2d, select_quantiles, GridSpec, TrialRecord};
use fcpipe_core::ModelConfig;

use nalgebra::DMatrix;
use proptest::prelude::*;

prop_compose! {
    fn labels_and_scores()(
        (labels, scores) in (2usize..60).prop_flat_map(|n| {
            (
                proptest::collection::vec(0u8..=1, n),
                proptest::collection::vec(0i32..8, n),
            )
        })
    ) -> (Vec<u8>, Vec<f64>) {
        (labels, scores.into_iter().map(|s| s as f64 / 8.0).collect())
    }
}

prop_compose! {
    fn balanced_labels_and_scores()(
        (labels, scores) in labels_and_scores().prop_filter("both classes", |(l, _)| {
            l.iter().any(|&x| x == 0) && l.iter().any(|&x| x == 1)
        })
    ) -> (Vec<u8>, Vec<f64>) {
        (labels, scores)
    }
}

fn brute_force_auroc(labels: &[u8], scores: &[f64]) -> f64 {
    let mut credit = 0.0;
    let mut pairs = 0u64;
    for (i, &li) in labels.iter().enumerate() {
        if li != 1 {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj != 0 {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                credit += 1.0;
            } else if scores[i] == scores[j] {
                credit += 0.5;
            }
        }
    }
    credit / pairs as f64
}

proptest! {
    #[test]
    fn auroc_equals_pair_counting((labels, scores) in balanced_labels_and_scores()) {
        let fast = auroc(&labels, &scores).unwrap();
        let brute = brute_force_auroc(&labels, &scores);
        prop_assert_eq!(fast, brute);
    }

    #[test]
    fn auroc_is_invariant_under_increasing_transforms(
        (labels, scores) in balanced_labels_and_scores()
    ) {
        let base = auroc(&labels, &scores).unwrap();
        let affine: Vec<f64> = scores.iter().map(|s| 3.5 * s + 11.0).collect();
        let expo: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        prop_assert_eq!(auroc(&labels, &affine).unwrap(), base);
        prop_assert_eq!(auroc(&labels, &expo).unwrap(), base);
    }

    #[test]
    fn auroc_of_negated_tie_free_scores_complements(
        (labels, mut scores) in balanced_labels_and_scores()
    ) {
        // Deduplicate into tie-free scores by adding a distinct offset.
        for (i, s) in scores.iter_mut().enumerate() {
            *s += i as f64 * 10.0;
        }
        let a = auroc(&labels, &scores).unwrap();
        let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
        let b = auroc(&labels, &negated).unwrap();
        prop_assert_eq!(a + b, 1.0);
    }

    #[test]
    fn splits_partition_and_preserve_class_ratio(
        n0 in 5usize..40,
        n1 in 5usize..40,
        frac in 0.2f64..0.8,
        seed in 0u64..1000,
    ) {
        let mut labels = vec![0u8; n0];
        labels.extend(vec![1u8; n1]);
        match split_indices(&labels, frac, seed) {
            Ok((train, test)) => {
                let mut all: Vec<usize> = train.iter().chain(test.iter()).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..n0 + n1).collect::<Vec<_>>());

                // Per-class test counts are within one subject of frac * n.
                for (class, n) in [(0u8, n0), (1u8, n1)] {
                    let got = test.iter().filter(|&&i| labels[i] == class).count() as f64;
                    prop_assert!((got - frac * n as f64).abs() <= 1.0);
                }
            }
            Err(_) => {
                // Only legitimate when some class would lose all of its
                // train or test subjects.
                let c0 = (frac * n0 as f64).round() as usize;
                let c1 = (frac * n1 as f64).round() as usize;
                prop_assert!(
                    c0 == 0 || c1 == 0 || c0 + 1 >= n0 || c1 + 1 >= n1,
                    "unexpected split failure for n0={n0}, n1={n1}, frac={frac}"
                );
            }
        }
    }

    #[test]
    fn tangent_vectorization_round_trips(seed in 0u64..500, dim in 2usize..7) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut random_spd = || {
            let a = DMatrix::from_fn(dim, dim, |_, _| rng.random::<f64>() - 0.5);
            let m = &a * a.transpose() + DMatrix::identity(dim, dim);
            CovMatrix::new((&m + m.transpose()) * 0.5).unwrap()
        };
        let cov = random_spd();
        let reference = random_spd();
        let fv = tangent_embed(&cov, &reference).unwrap();
        let matrix = unvectorize(&fv).unwrap();

        // Re-vectorize and compare bit-for-bit: the round trip is exact up to
        // the sqrt(2) scale applied and removed on the same value.
        let sqrt2 = std::f64::consts::SQRT_2;
        for (&(i, j), &v) in fv.region_pairs.iter().zip(&fv.values) {
            let back = if i == j { matrix[(i, i)] } else { sqrt2 * (v / sqrt2) };
            prop_assert!((back - v).abs() <= 1e-15 * v.abs().max(1.0));
            prop_assert_eq!(matrix[(i, j)], matrix[(j, i)]);
        }
    }

    #[test]
    fn kde_density_is_nonnegative_and_permutation_invariant(
        seed in 0u64..200,
        n_points in 2usize..12,
    ) {
        use rand::seq::SliceRandom;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<(f64, f64)> = (0..n_points)
            .map(|_| (rng.random_range(1.0..6.0), rng.random_range(3.0..9.0)))
            .collect();
        let gx = GridSpec { min: 0.0, max: 7.0, n: 29 };
        let gy = GridSpec { min: 2.0, max: 10.0, n: 33 };
        let a = kde2d(&points, &gx, &gy, None).unwrap();
        prop_assert!(a.density.iter().all(|&v| v >= 0.0));

        let mut shuffled = points.clone();
        shuffled.shuffle(&mut rng);
        let b = kde2d(&shuffled, &gx, &gy, None).unwrap();
        let max_diff = a
            .density
            .iter()
            .zip(b.density.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        prop_assert!(max_diff <= 1e-12);
    }

    #[test]
    fn quantile_selection_is_rank_based_and_ordered(
        seed in 0u64..500,
        n in 10usize..60,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let trials: Vec<TrialRecord> = (0..n)
            .map(|trial_id| {
                let score = rng.random_range(0..20) as f64 / 20.0;
                TrialRecord {
                    trial_id,
                    config: ModelConfig {
                        n_hidden_layers: 1,
                        neurons_per_layer: 8,
                        dropout_rate: 0.0,
                        learning_rate: 1e-3,
                        batch_size: 32,
                        max_epochs: 1,
                        patience: 1,
                        seed: 0,
                    },
                    fold_aurocs: vec![score],
                    mean_auroc: score,
                    flags: Vec::new(),
                }
            })
            .collect();

        let q = 0.2;
        let (top, bottom) = select_quantiles(&trials, q).unwrap();
        let m = (q * n as f64).ceil() as usize;
        prop_assert_eq!(top.len(), m);
        prop_assert_eq!(bottom.len(), m);

        for t in &top {
            for b in &bottom {
                prop_assert!(t.mean_auroc >= b.mean_auroc);
            }
        }
        if 2 * m <= n {
            let top_ids: std::collections::HashSet<usize> =
                top.iter().map(|t| t.trial_id).collect();
            prop_assert!(bottom.iter().all(|b| !top_ids.contains(&b.trial_id)));
        }

        // Membership is rank-based: any strictly increasing rescoring keeps
        // the same trials selected.
        let rescored: Vec<TrialRecord> = trials
            .iter()
            .map(|t| {
                let mut t = t.clone();
                t.mean_auroc = (t.mean_auroc * 2.0).exp();
                t
            })
            .collect();
        let (top2, bottom2) = select_quantiles(&rescored, q).unwrap();
        let ids = |v: &[TrialRecord]| v.iter().map(|t| t.trial_id).collect::<Vec<_>>();
        prop_assert_eq!(ids(&top), ids(&top2));
        prop_assert_eq!(ids(&bottom), ids(&bottom2));
    }
}
