//! The six pipeline commands. Each one reads its inputs, writes its outputs
//! into `out_dir`, and drops a run manifest with checksums beside them.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use fcpipe_core::connectivity::{build_dataset, EmbedOptions};
use fcpipe_core::evaluation::{auroc, split_indices};
use fcpipe_core::importance::{annotate_brodmann, map_to_brodmann, pfi, threshold_edges, zscore_rank, zscores};
use fcpipe_core::io;
use fcpipe_core::model::{init_model, train, ModelConfig};
use fcpipe_core::search::{analyze_trials, run_search};
use fcpipe_core::seeds::{self, streams};
use fcpipe_core::synthgen::{generate_cohort, make_atlas};

use crate::config::PipelineConfig;
use crate::plot::{render_importance_svg, render_kde_svg};
use crate::run_manifest::{read_run_manifest, recorded_checksum, sha256_file, write_run_manifest};

fn write_text(path: &PathBuf, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Synthesize the atlas and cohort, write the manifest + time-series files,
/// the atlas CSV, and the planted-effects sidecar.
pub fn cmd_generate(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("cannot create output dir {}", cfg.out_dir.display()))?;

    let atlas = make_atlas(cfg.regions, cfg.seed)?;
    let effects = cfg.planted_effects();
    let (cohort, labels) = generate_cohort(
        &atlas,
        cfg.n_control,
        cfg.n_case,
        &effects,
        cfg.timepoints,
        cfg.noise_scale,
        cfg.seed,
    )?;

    let atlas_path = cfg.atlas_path();
    io::write_atlas(&atlas_path, &atlas)?;
    let manifest_path = io::write_cohort(&cfg.out_dir, &cohort, &labels)?;
    let effects_path = cfg.out_dir.join("effects.json");
    io::write_effects(&effects_path, &effects)?;

    write_run_manifest(
        cfg,
        "generate",
        &[],
        &[atlas_path.clone(), manifest_path.clone(), effects_path],
    )?;
    println!(
        "generate: {} subjects ({} control / {} case), {} regions -> {}",
        cohort.len(),
        cfg.n_control,
        cfg.n_case,
        cfg.regions,
        manifest_path.display()
    );
    Ok(())
}

/// Embed the cohort into tangent-space features. The train/test split is
/// drawn first and the reference mean is fit on training subjects only; the
/// features cache and the split sidecar are written together.
pub fn cmd_features(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    let manifest_path = cfg.manifest_path();
    cfg.require_input("manifest", &manifest_path)?;

    let (cohort, labels) = io::read_cohort(&manifest_path)?;
    let (train_idx, test_idx) = split_indices(&labels, cfg.test_fraction, cfg.seed)?;

    let opts = EmbedOptions {
        shrinkage: cfg.shrinkage,
        mean_mode: cfg.mean_mode,
        mean_tol: cfg.mean_tol,
        mean_max_iter: cfg.mean_max_iter,
        reference_subjects: Some(train_idx.clone()),
    };
    let build = build_dataset(&cohort, &labels, &opts)?;
    if !build.reference.converged {
        eprintln!(
            "warning: geometric reference mean did not converge within {} iterations; using best iterate",
            cfg.mean_max_iter
        );
    }
    let dataset = build.dataset;

    let features_path = cfg.features_path();
    io::write_features(&features_path, &dataset)?;

    let subject_names = |idx: &[usize]| -> Vec<String> {
        idx.iter().map(|&i| dataset.subject_ids[i].clone()).collect()
    };
    let split = io::SplitSidecar {
        seed: cfg.seed,
        test_fraction: cfg.test_fraction,
        train: subject_names(&train_idx),
        test: subject_names(&test_idx),
    };
    let split_path = cfg.split_path();
    io::write_split(&split_path, &split)?;

    write_run_manifest(
        cfg,
        "features",
        &[manifest_path],
        &[features_path.clone(), split_path],
    )?;
    println!(
        "features: {} subjects x {} features ({} train / {} test) -> {}",
        dataset.len(),
        dataset.n_features(),
        split.train.len(),
        split.test.len(),
        features_path.display()
    );
    Ok(())
}

/// Randomized architecture search on the training partition, followed by the
/// quantile KDE analysis. Emits trials.csv, kde.json, and kde.svg.
pub fn cmd_search(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    let features_path = cfg.features_path();
    let split_path = cfg.split_path();
    cfg.require_input("out_dir (features.csv)", &features_path)?;
    cfg.require_input("out_dir (split.json)", &split_path)?;

    let dataset = io::read_features(&features_path)?;
    let split = io::read_split(&split_path)?;
    let (train_idx, _) = split.indices(&dataset)?;
    let train_set = dataset.subset(&train_idx)?;

    let trials = run_search(
        &train_set,
        &cfg.search_space(),
        &cfg.training_defaults(),
        cfg.n_trials,
        cfg.k_folds,
        cfg.seed,
    )?;
    let trials_path = cfg.trials_path();
    io::write_trials(&trials_path, &trials)?;

    let kde = analyze_trials(&trials, &cfg.search_space(), cfg.quantile)?;
    let kde_path = cfg.out_dir.join("kde.json");
    io::write_kde(&kde_path, &kde)?;
    let svg_path = cfg.out_dir.join("kde.svg");
    write_text(&svg_path, &render_kde_svg(&kde))?;

    write_run_manifest(
        cfg,
        "search",
        &[features_path, split_path],
        &[trials_path.clone(), kde_path, svg_path],
    )?;
    let best = trials
        .iter()
        .max_by(|a, b| {
            a.mean_auroc
                .partial_cmp(&b.mean_auroc)
                .unwrap()
                .then(b.trial_id.cmp(&a.trial_id))
        })
        .expect("at least one trial");
    println!(
        "search: {} trials x {} folds; best mean AUROC {:.4} (trial {}); top peak ({} layers, {} neurons), adequate: {}",
        trials.len(),
        cfg.k_folds,
        best.mean_auroc,
        best.trial_id,
        kde.peak_top.0,
        kde.peak_top.1,
        kde.adequacy.adequate
    );
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary {
    best_trial_id: usize,
    n_hidden_layers: usize,
    neurons_per_layer: usize,
    dropout_rate: f64,
    learning_rate: f64,
    best_mean_cv_auroc: f64,
    test_auroc: f64,
    n_train: usize,
    n_val: usize,
    n_test: usize,
}

/// Retrain the best searched configuration on the training partition (with an
/// internal validation split for early stopping) and evaluate exactly once on
/// the held-out test partition.
pub fn cmd_train(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    let features_path = cfg.features_path();
    let split_path = cfg.split_path();
    let trials_path = cfg.trials_path();
    cfg.require_input("out_dir (features.csv)", &features_path)?;
    cfg.require_input("out_dir (split.json)", &split_path)?;
    cfg.require_input("out_dir (trials.csv)", &trials_path)?;

    // Protocol guard: the split sidecar must be byte-identical to what
    // cmd_features recorded, i.e. the test partition was never touched.
    let features_manifest = cfg.out_dir.join("run_manifest_features.json");
    cfg.require_input("out_dir (run_manifest_features.json)", &features_manifest)?;
    let recorded = read_run_manifest(&features_manifest)?;
    let expected = recorded_checksum(&recorded, "split.json")
        .context("features run manifest does not record split.json")?;
    let actual = sha256_file(&split_path)?;
    if actual != expected {
        bail!(
            "split sidecar {} has changed since cmd_features recorded it \
             (expected sha256 {expected}, found {actual}); the held-out test \
             partition can no longer be trusted",
            split_path.display()
        );
    }

    let dataset = io::read_features(&features_path)?;
    let split = io::read_split(&split_path)?;
    let (train_idx, test_idx) = split.indices(&dataset)?;
    let train_partition = dataset.subset(&train_idx)?;
    let test_partition = dataset.subset(&test_idx)?;

    let trials = io::read_trials(&trials_path, cfg.batch_size, cfg.max_epochs, cfg.patience)?;
    let best = trials
        .iter()
        .max_by(|a, b| {
            a.mean_auroc
                .partial_cmp(&b.mean_auroc)
                .unwrap()
                .then(b.trial_id.cmp(&a.trial_id))
        })
        .context("trials.csv is empty")?;

    let mut config: ModelConfig = best.config.clone();
    config.seed = seeds::derive(cfg.seed, streams::FINAL_TRAIN);

    // Internal early-stopping split within the training partition.
    let (fit_idx, val_idx) = split_indices(&train_partition.labels, cfg.val_fraction, config.seed)?;
    let fit_set = train_partition.subset(&fit_idx)?;
    let val_set = train_partition.subset(&val_idx)?;

    let model = train(
        init_model(&config, dataset.n_features())?,
        &fit_set,
        &val_set,
    )?;
    let scores = model.predict_proba(test_partition.features.view())?;
    let test_auroc = auroc(
        &test_partition.labels,
        scores.as_slice().expect("contiguous scores"),
    )?;

    let model_path = cfg.model_path();
    io::write_model(&model_path, &model)?;
    let summary = TrainSummary {
        best_trial_id: best.trial_id,
        n_hidden_layers: config.n_hidden_layers,
        neurons_per_layer: config.neurons_per_layer,
        dropout_rate: config.dropout_rate,
        learning_rate: config.learning_rate,
        best_mean_cv_auroc: best.mean_auroc,
        test_auroc,
        n_train: fit_set.len(),
        n_val: val_set.len(),
        n_test: test_partition.len(),
    };
    let summary_path = cfg.out_dir.join("train_summary.json");
    write_text(&summary_path, &serde_json::to_string_pretty(&summary)?)?;

    write_run_manifest(
        cfg,
        "train",
        &[features_path, split_path, trials_path],
        &[model_path.clone(), summary_path],
    )?;
    println!(
        "train: trial {} ({} layers x {} neurons) -> test AUROC {:.4} ({} test subjects)",
        best.trial_id,
        config.n_hidden_layers,
        config.neurons_per_layer,
        test_auroc,
        test_partition.len()
    );
    Ok(())
}

/// Permutation feature importance on the held-out test partition, ranked,
/// Brodmann-labeled, thresholded into an edge list, and plotted.
pub fn cmd_pfi(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    let features_path = cfg.features_path();
    let split_path = cfg.split_path();
    let model_path = cfg.model_path();
    let atlas_path = cfg.atlas_path();
    cfg.require_input("out_dir (features.csv)", &features_path)?;
    cfg.require_input("out_dir (split.json)", &split_path)?;
    cfg.require_input("out_dir (model.json)", &model_path)?;
    cfg.require_input("atlas", &atlas_path)?;

    let dataset = io::read_features(&features_path)?;
    let split = io::read_split(&split_path)?;
    let (_, test_idx) = split.indices(&dataset)?;
    let test_partition = dataset.subset(&test_idx)?;
    let model = io::read_model(&model_path)?;
    let atlas = io::read_atlas(&atlas_path)?;
    if let Some(&(i, j)) = dataset
        .feature_pairs
        .iter()
        .find(|&&(i, j)| i.max(j) >= atlas.n_regions())
    {
        bail!(
            "atlas {} has {} regions but features reference pair ({i}, {j})",
            atlas_path.display(),
            atlas.n_regions()
        );
    }
    let table = cfg.brodmann_table()?;

    let raw = pfi(&model, &test_partition, cfg.pfi_repeats, cfg.seed)?;
    let z = zscores(&raw)?;
    let mut records = zscore_rank(&raw, &atlas, &dataset.feature_pairs, cfg.top_k)?;
    let mapping = map_to_brodmann(&atlas, &table)?;
    annotate_brodmann(&mut records, &mapping);

    let importance_path = cfg.out_dir.join("importance.csv");
    io::write_importance(&importance_path, &records)?;

    let edges = threshold_edges(&z, &atlas, &dataset.feature_pairs, cfg.tau)?;
    let edges_path = cfg.out_dir.join("edges.json");
    io::write_edges(&edges_path, &edges)?;

    let svg_path = cfg.out_dir.join("importance.svg");
    write_text(&svg_path, &render_importance_svg(&records))?;

    write_run_manifest(
        cfg,
        "pfi",
        &[features_path, split_path, model_path, atlas_path],
        &[importance_path.clone(), edges_path, svg_path],
    )?;
    println!(
        "pfi: top {} of {} features written; {} edges at z >= {}",
        records.len(),
        raw.len(),
        edges.len(),
        cfg.tau
    );
    Ok(())
}

/// Cross-granularity overlap of two or more importance tables.
pub fn cmd_compare(cfg: &PipelineConfig, inputs: &[PathBuf]) -> Result<()> {
    if inputs.len() < 2 {
        bail!("compare needs at least 2 importance tables, got {}", inputs.len());
    }
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("cannot create output dir {}", cfg.out_dir.display()))?;

    let mut rankings = Vec::with_capacity(inputs.len());
    for path in inputs {
        let records = io::read_importance(path)?;
        let pairs: Vec<(u32, u32)> = records
            .iter()
            .map(|r| {
                r.ba_pair.with_context(|| {
                    format!(
                        "{}: rank {} has no Brodmann pair; run pfi with an atlas + table",
                        path.display(),
                        r.rank
                    )
                })
            })
            .collect::<Result<_>>()?;
        rankings.push(pairs);
    }

    let report = fcpipe_core::importance::cross_granularity_overlap(&rankings)?;
    let overlap_path = cfg.out_dir.join("overlap.json");
    write_text(&overlap_path, &serde_json::to_string_pretty(&report)?)?;

    write_run_manifest(cfg, "compare", inputs, &[overlap_path.clone()])?;
    println!(
        "compare: {} rankings; {} BA pairs common to all -> {}",
        report.n_rankings,
        report.common_pairs.len(),
        overlap_path.display()
    );
    Ok(())
}
