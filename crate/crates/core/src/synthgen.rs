//! Synthetic cohorts with planted group differences.
//!
//! Cohorts are drawn from per-group covariance structures: a base SPD matrix
//! with unit diagonal for controls, and the same matrix with additive deltas
//! at chosen region pairs for cases. Knowing exactly which pairs differ gives
//! the rest of the pipeline a ground truth to recover.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::connectivity::{CovMatrix, TimeSeriesMatrix};
use crate::error::{Error, Result};
use crate::seeds::{self, streams};

/// Bounding box (mm) for synthetic region centroids: |x| <= 90,
/// |y| <= 108, |z| <= 72.
pub const CENTROID_BOUNDS: [f64; 3] = [90.0, 108.0, 72.0];

/// Coarse functional role of a region, used for color-coding feature reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionalLabel {
    Motor,
    Language,
    Other,
}

impl std::fmt::Display for FunctionalLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FunctionalLabel::Motor => "motor",
            FunctionalLabel::Language => "language",
            FunctionalLabel::Other => "other",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for FunctionalLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "motor" => Ok(FunctionalLabel::Motor),
            "language" => Ok(FunctionalLabel::Language),
            "other" => Ok(FunctionalLabel::Other),
            other => Err(format!("unknown functional label: {other}")),
        }
    }
}

/// One atlas parcel.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: usize,
    pub name: String,
    /// Millimeters in the shared coordinate frame.
    pub centroid: [f64; 3],
    pub functional_label: FunctionalLabel,
    pub brodmann_hint: Option<u32>,
}

/// A parcellation: regions with ids 0..R-1, no gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct Atlas {
    pub name: String,
    pub regions: Vec<Region>,
}

impl Atlas {
    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, region) in self.regions.iter().enumerate() {
            if region.id != i {
                return Err(Error::InvalidInput(format!(
                    "atlas region ids must be 0..R-1 without gaps; position {i} has id {}",
                    region.id
                )));
            }
            if region.centroid.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "region {i} has a non-finite centroid"
                )));
            }
        }
        Ok(())
    }
}

/// A known group difference: `delta` is added to the case-group covariance at
/// `region_pair` (and its transpose).
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedEffect {
    /// (i, j) with i < j.
    pub region_pair: (usize, usize),
    pub delta: f64,
}

/// Synthetic atlas: centroids sampled inside the brain-sized bounding box,
/// functional labels assigned round-robin motor/language/other.
///
/// Each region's centroid derives from `(seed, region id)` alone, so atlases
/// sharing a seed agree on every common region id regardless of granularity.
pub fn make_atlas(r: usize, seed: u64) -> Result<Atlas> {
    if r < 2 {
        return Err(Error::InvalidInput(format!(
            "an atlas needs at least 2 regions, got {r}"
        )));
    }
    let regions = (0..r)
        .map(|id| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seeds::derive_item(seed, streams::ATLAS_REGION, id as u64));
            let centroid = [
                rng.random_range(-CENTROID_BOUNDS[0]..CENTROID_BOUNDS[0]),
                rng.random_range(-CENTROID_BOUNDS[1]..CENTROID_BOUNDS[1]),
                rng.random_range(-CENTROID_BOUNDS[2]..CENTROID_BOUNDS[2]),
            ];
            let functional_label = match id % 3 {
                0 => FunctionalLabel::Motor,
                1 => FunctionalLabel::Language,
                _ => FunctionalLabel::Other,
            };
            Region {
                id,
                name: format!("roi_{id:03}"),
                centroid,
                functional_label,
                brodmann_hint: None,
            }
        })
        .collect();
    Ok(Atlas {
        name: format!("synth{r}"),
        regions,
    })
}

/// Base SPD covariance: a random orthogonal rotation of eigenvalues drawn
/// log-uniform in [0.5, 2], rescaled to unit diagonal.
fn base_covariance(r: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, streams::COHORT_BASE_COV));
    let gauss = DMatrix::from_fn(r, r, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = gauss.qr().q();
    let eigs: Vec<f64> = (0..r)
        .map(|_| {
            let u: f64 = rng.random_range(0.5f64.ln()..2.0f64.ln());
            u.exp()
        })
        .collect();

    let mut scaled = q.clone();
    for (k, &w) in eigs.iter().enumerate() {
        for i in 0..r {
            scaled[(i, k)] *= w;
        }
    }
    let mut sigma = &scaled * q.transpose();

    // Rescale to unit diagonal: D^-1/2 Sigma D^-1/2.
    let d_inv_sqrt: Vec<f64> = (0..r).map(|i| 1.0 / sigma[(i, i)].sqrt()).collect();
    for i in 0..r {
        for j in 0..r {
            sigma[(i, j)] *= d_inv_sqrt[i] * d_inv_sqrt[j];
        }
    }
    for i in 0..r {
        sigma[(i, i)] = 1.0;
        for j in (i + 1)..r {
            let v = 0.5 * (sigma[(i, j)] + sigma[(j, i)]);
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }
    sigma
}

/// The control and case group covariances for a cohort: `(sigma_control,
/// sigma_case)`. Effects are applied in order and the case matrix is checked
/// for positive-definiteness after each one, so a violation names the pair
/// that caused it.
pub fn group_covariances(
    atlas: &Atlas,
    effects: &[PlantedEffect],
    seed: u64,
) -> Result<(CovMatrix, CovMatrix)> {
    let r = atlas.n_regions();
    let sigma0 = base_covariance(r, seed);

    let mut sigma1 = sigma0.clone();
    for effect in effects {
        let (i, j) = effect.region_pair;
        if i >= j || j >= r {
            return Err(Error::InvalidInput(format!(
                "planted effect pair ({i}, {j}) must satisfy i < j < {r}"
            )));
        }
        if !effect.delta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "planted effect at ({i}, {j}) has non-finite delta"
            )));
        }
        sigma1[(i, j)] += effect.delta;
        sigma1[(j, i)] += effect.delta;
        if nalgebra::Cholesky::new(sigma1.clone()).is_none() {
            return Err(Error::InvalidEffect { i, j });
        }
    }

    Ok((CovMatrix::new(sigma0)?, CovMatrix::new(sigma1)?))
}

/// Per-subject SPD jitter: J Sigma J with J = expm(noise_scale * A) for a
/// small random symmetric A. Congruence by a symmetric positive-definite
/// factor keeps the result SPD.
fn jitter_covariance(
    sigma: &DMatrix<f64>,
    noise_scale: f64,
    rng: &mut ChaCha8Rng,
) -> Result<DMatrix<f64>> {
    let r = sigma.nrows();
    if noise_scale == 0.0 {
        return Ok(sigma.clone());
    }
    let b = DMatrix::from_fn(r, r, |_, _| rng.sample::<f64, _>(StandardNormal));
    let scale = noise_scale / (2.0 * (r as f64).sqrt());
    let a = DMatrix::from_fn(r, r, |i, j| (b[(i, j)] + b[(j, i)]) * scale);
    let j = crate::connectivity::spd_expm(&a)?;
    let out = &j * sigma * &j;
    let mut sym = out.clone();
    for i in 0..r {
        for k in (i + 1)..r {
            let v = 0.5 * (out[(i, k)] + out[(k, i)]);
            sym[(i, k)] = v;
            sym[(k, i)] = v;
        }
    }
    Ok(sym)
}

/// Generate a cohort: `n_control` subjects with label 0 followed by `n_case`
/// subjects with label 1. Per subject, the group covariance gets a random SPD
/// jitter and `timepoints` multivariate-normal rows are drawn. Per-subject
/// seeds derive from `(seed, subject index)`, so results are independent of
/// scheduling.
pub fn generate_cohort(
    atlas: &Atlas,
    n_control: usize,
    n_case: usize,
    effects: &[PlantedEffect],
    timepoints: usize,
    noise_scale: f64,
    seed: u64,
) -> Result<(Vec<TimeSeriesMatrix>, Vec<u8>)> {
    let r = atlas.n_regions();
    if timepoints < r + 1 {
        return Err(Error::InvalidInput(format!(
            "timepoints must be at least R + 1 = {}, got {timepoints}",
            r + 1
        )));
    }
    if !(noise_scale.is_finite() && noise_scale >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "noise_scale must be a non-negative real, got {noise_scale}"
        )));
    }
    let total = n_control + n_case;
    if total == 0 {
        return Err(Error::InvalidInput("cohort must have at least one subject".into()));
    }

    let (sigma0, sigma1) = group_covariances(atlas, effects, seed)?;
    let width = (total.max(2) as f64).log10().ceil() as usize;

    let labels: Vec<u8> = (0..total).map(|s| u8::from(s >= n_control)).collect();
    let cohort: Vec<TimeSeriesMatrix> = (0..total)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive_item(
                seed,
                streams::COHORT_SUBJECT,
                s as u64,
            ));
            let group = if labels[s] == 0 { &sigma0 } else { &sigma1 };
            let subject_cov = jitter_covariance(group.data(), noise_scale, &mut rng)?;
            let chol = nalgebra::Cholesky::new(subject_cov)
                .ok_or(Error::NumericalFailure { iterations: 0 })?;
            let l = chol.l();

            let mut data = ndarray::Array2::<f64>::zeros((timepoints, r));
            let mut z = DVector::<f64>::zeros(r);
            for t in 0..timepoints {
                for k in 0..r {
                    z[k] = rng.sample::<f64, _>(StandardNormal);
                }
                let row = &l * &z;
                for k in 0..r {
                    data[(t, k)] = row[k];
                }
            }
            TimeSeriesMatrix::new(format!("sub-{s:0width$}"), data)
        })
        .collect::<Result<_>>()?;

    Ok((cohort, labels))
}
