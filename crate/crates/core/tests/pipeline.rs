//! Desk-scale end-to-end checks: generated cohort through embedding,
//! training, and importance, with the planted effect as ground truth.

use fcpipe_core::connectivity::{build_dataset, EmbedOptions};
use fcpipe_core::evaluation::{auroc, split_indices};
use fcpipe_core::importance::pfi;
use fcpipe_core::model::{init_model, train, ModelConfig};
use fcpipe_core::synthgen::{generate_cohort, make_atlas, PlantedEffect};

fn embed_with_train_reference(
    cohort: &[fcpipe_core::TimeSeriesMatrix],
    labels: &[u8],
    seed: u64,
) -> (fcpipe_core::Dataset, Vec<usize>, Vec<usize>) {
    let (train_idx, test_idx) = split_indices(labels, 0.2, seed).unwrap();
    let opts = EmbedOptions {
        reference_subjects: Some(train_idx.clone()),
        ..EmbedOptions::default()
    };
    let build = build_dataset(cohort, labels, &opts).unwrap();
    assert!(build.reference.converged, "geometric mean did not converge");
    (build.dataset, train_idx, test_idx)
}

fn toy_model_config(seed: u64) -> ModelConfig {
    ModelConfig {
        n_hidden_layers: 2,
        neurons_per_layer: 16,
        dropout_rate: 0.1,
        learning_rate: 3e-3,
        batch_size: 16,
        max_epochs: 80,
        patience: 15,
        seed,
    }
}

#[test]
fn planted_effect_is_learnable_and_recovered_by_pfi() {
    let atlas = make_atlas(8, 1).unwrap();
    let effect = PlantedEffect {
        region_pair: (1, 5),
        delta: 0.45,
    };
    let (cohort, labels) =
        generate_cohort(&atlas, 60, 60, std::slice::from_ref(&effect), 120, 0.08, 5).unwrap();
    let (dataset, train_idx, test_idx) = embed_with_train_reference(&cohort, &labels, 7);
    let train_set = dataset.subset(&train_idx).unwrap();
    let test_set = dataset.subset(&test_idx).unwrap();

    let model = train(
        init_model(&toy_model_config(3), dataset.n_features()).unwrap(),
        &train_set,
        &test_set,
    )
    .unwrap();
    let scores = model.predict_proba(test_set.features.view()).unwrap();
    let test_auroc = auroc(&test_set.labels, scores.as_slice().unwrap()).unwrap();
    assert!(
        test_auroc > 0.8,
        "planted effect should be learnable, test AUROC {test_auroc}"
    );

    // The planted pair's feature should rank near the top.
    let raw = pfi(&model, &test_set, 5, 11).unwrap();
    let planted_feature = dataset
        .feature_pairs
        .iter()
        .position(|&p| p == effect.region_pair)
        .unwrap();
    let better = raw.iter().filter(|&&v| v > raw[planted_feature]).count();
    assert!(
        better < 5,
        "planted feature ranked {} of {}",
        better + 1,
        raw.len()
    );
}

#[test]
fn null_cohort_stays_near_chance() {
    let atlas = make_atlas(8, 2).unwrap();
    let (cohort, labels) = generate_cohort(&atlas, 60, 60, &[], 120, 0.08, 6).unwrap();
    let (dataset, train_idx, test_idx) = embed_with_train_reference(&cohort, &labels, 8);
    let train_set = dataset.subset(&train_idx).unwrap();
    let test_set = dataset.subset(&test_idx).unwrap();

    let model = train(
        init_model(&toy_model_config(4), dataset.n_features()).unwrap(),
        &train_set,
        &test_set,
    )
    .unwrap();
    let scores = model.predict_proba(test_set.features.view()).unwrap();
    let test_auroc = auroc(&test_set.labels, scores.as_slice().unwrap()).unwrap();
    assert!(
        (0.25..=0.75).contains(&test_auroc),
        "null cohort test AUROC {test_auroc} suspiciously far from chance"
    );
}

#[test]
fn embedding_row_order_is_independent_of_parallel_schedule() {
    // Two identical builds must agree bit-for-bit even though the embedding
    // runs on a thread pool.
    let atlas = make_atlas(6, 3).unwrap();
    let (cohort, labels) = generate_cohort(&atlas, 10, 10, &[], 40, 0.1, 9).unwrap();
    let opts = EmbedOptions::default();
    let a = build_dataset(&cohort, &labels, &opts).unwrap();
    let b = build_dataset(&cohort, &labels, &opts).unwrap();
    assert_eq!(a.dataset.features, b.dataset.features);
    assert_eq!(a.dataset.subject_ids, b.dataset.subject_ids);
}
