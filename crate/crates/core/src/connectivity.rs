//! Tangent-space functional-connectivity features.
//!
//! A subject's regional time series becomes a covariance matrix, which is
//! whitened by a group reference point and mapped through the matrix
//! logarithm onto the tangent space at that reference. The upper triangle of
//! the tangent matrix (off-diagonals scaled by sqrt(2) so the Euclidean norm
//! of the vector equals the Frobenius norm of the matrix) is the feature
//! vector, length R(R+1)/2 for R regions.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::Dataset;

/// Relative eigenvalue cutoff below which an SPD operation refuses to invert
/// or take logarithms: an eigenvalue is "singular" when it is at or below
/// 1e-12 times the largest eigenvalue.
pub const SINGULARITY_RTOL: f64 = 1e-12;

/// Relative tolerance for the symmetry check on covariance matrices.
const SYMMETRY_RTOL: f64 = 1e-10;

/// One subject's regional signals, timepoints x regions.
#[derive(Debug, Clone)]
pub struct TimeSeriesMatrix {
    pub subject_id: String,
    data: ndarray::Array2<f64>,
}

impl TimeSeriesMatrix {
    /// Validates shape and finiteness. Rows are timepoints, columns regions.
    pub fn new(subject_id: impl Into<String>, data: ndarray::Array2<f64>) -> Result<Self> {
        let subject_id = subject_id.into();
        if data.nrows() < 2 || data.ncols() == 0 {
            return Err(Error::InvalidInput(format!(
                "time series for {subject_id} must have at least 2 timepoints and 1 region, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "time series for {subject_id} contains non-finite entries"
            )));
        }
        Ok(Self { subject_id, data })
    }

    pub fn data(&self) -> &ndarray::Array2<f64> {
        &self.data
    }

    pub fn timepoints(&self) -> usize {
        self.data.nrows()
    }

    pub fn regions(&self) -> usize {
        self.data.ncols()
    }
}

/// A symmetric positive-definite covariance matrix.
#[derive(Debug, Clone)]
pub struct CovMatrix {
    data: DMatrix<f64>,
}

impl CovMatrix {
    /// Validates squareness, finiteness, and symmetry (relative tolerance
    /// 1e-10). Positive-definiteness is checked by the operations that
    /// require it, via the eigenvalue cutoff.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() != data.ncols() || data.nrows() == 0 {
            return Err(Error::InvalidInput(format!(
                "covariance matrix must be square and non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "covariance matrix contains non-finite entries".into(),
            ));
        }
        let max_abs = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = SYMMETRY_RTOL * max_abs.max(1.0);
        for i in 0..data.nrows() {
            for j in (i + 1)..data.ncols() {
                if (data[(i, j)] - data[(j, i)]).abs() > tol {
                    return Err(Error::InvalidInput(format!(
                        "covariance matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { data })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            data: DMatrix::identity(dim, dim),
        }
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// True when a Cholesky factorization succeeds.
    pub fn is_spd(&self) -> bool {
        nalgebra::Cholesky::new(self.data.clone()).is_some()
    }
}

/// Tangent-space connectivity features for one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    /// Length R(R+1)/2, upper triangle in row-major order, off-diagonals
    /// scaled by sqrt(2).
    pub values: Vec<f64>,
    /// (i, j) with i <= j, aligned with `values`.
    pub region_pairs: Vec<(usize, usize)>,
}

/// Upper-triangle pairs (i, j), i <= j, in row-major order:
/// (0,0), (0,1), ..., (0,R-1), (1,1), ...
pub fn region_pairs(regions: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(regions * (regions + 1) / 2);
    for i in 0..regions {
        for j in i..regions {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Shrunk sample covariance: (1 - lambda) * S + lambda * (tr(S)/R) * I,
/// with S the column-mean-centered sample covariance (denominator T - 1).
pub fn estimate_covariance(ts: &TimeSeriesMatrix, shrinkage: f64) -> Result<CovMatrix> {
    if !(0.0..1.0).contains(&shrinkage) {
        return Err(Error::InvalidInput(format!(
            "shrinkage must lie in [0, 1), got {shrinkage}"
        )));
    }
    let t = ts.timepoints();
    let r = ts.regions();
    let x = ts.data();

    let means: Vec<f64> = (0..r).map(|j| x.column(j).sum() / t as f64).collect();

    let mut s = DMatrix::<f64>::zeros(r, r);
    for i in 0..r {
        for j in i..r {
            let mut acc = 0.0;
            for k in 0..t {
                acc += (x[(k, i)] - means[i]) * (x[(k, j)] - means[j]);
            }
            let v = acc / (t as f64 - 1.0);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }

    if shrinkage > 0.0 {
        let mu = s.trace() / r as f64;
        let lam = shrinkage;
        for i in 0..r {
            for j in 0..r {
                s[(i, j)] *= 1.0 - lam;
            }
            s[(i, i)] += lam * mu;
        }
    }
    CovMatrix::new(s)
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct SpdEig {
    pub eigenvalues: DVector<f64>,
    /// Orthonormal, columns aligned with `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl SpdEig {
    /// V * diag(f(w)) * V^T, symmetrized.
    fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for k in 0..n {
            let fw = f(self.eigenvalues[k]);
            for i in 0..n {
                scaled[(i, k)] *= fw;
            }
        }
        let m = &scaled * self.eigenvectors.transpose();
        symmetrize(&m)
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = m.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Eigendecomposition of an arbitrary symmetric matrix.
fn sym_eig(m: &DMatrix<f64>) -> Result<SpdEig> {
    let n = m.nrows();
    let max_iter = 100 * n.max(10);
    let eig = nalgebra::SymmetricEigen::try_new(m.clone(), f64::EPSILON, max_iter)
        .ok_or(Error::NumericalFailure {
            iterations: max_iter,
        })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
    });

    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SpdEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigendecomposition with eigenvalues in descending order.
pub fn spd_eig(m: &CovMatrix) -> Result<SpdEig> {
    sym_eig(m.data())
}

/// Checks the relative singularity cutoff and returns the eigendecomposition.
fn spd_eig_checked(m: &DMatrix<f64>) -> Result<SpdEig> {
    let eig = sym_eig(m)?;
    let largest = eig.eigenvalues[0];
    let tolerance = SINGULARITY_RTOL * largest;
    let smallest = eig.eigenvalues[eig.eigenvalues.len() - 1];
    if largest <= 0.0 || smallest <= tolerance {
        return Err(Error::SingularMatrix {
            value: smallest,
            tolerance,
        });
    }
    Ok(eig)
}

/// Matrix logarithm of an SPD matrix: V * diag(log w) * V^T.
pub fn spd_logm(m: &CovMatrix) -> Result<DMatrix<f64>> {
    logm_raw(m.data())
}

fn logm_raw(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(spd_eig_checked(m)?.map(f64::ln))
}

/// Matrix exponential of a symmetric matrix: V * diag(exp w) * V^T.
/// The result is SPD for any symmetric input.
pub fn spd_expm(sym: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(sym_eig(sym)?.map(f64::exp))
}

/// Inverse square root of an SPD matrix: V * diag(w^-1/2) * V^T.
pub fn spd_invsqrt(m: &CovMatrix) -> Result<CovMatrix> {
    let out = spd_eig_checked(m.data())?.map(|w| 1.0 / w.sqrt());
    CovMatrix::new(out)
}

/// Square root of an SPD matrix.
pub fn spd_sqrt(m: &CovMatrix) -> Result<CovMatrix> {
    let out = spd_eig_checked(m.data())?.map(f64::sqrt);
    CovMatrix::new(out)
}

/// Choice of group reference point for the tangent map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanMode {
    Arithmetic,
    Geometric,
}

/// Result of `reference_mean`: the mean plus convergence diagnostics for the
/// geometric fixed-point iteration (arithmetic mode always converges).
#[derive(Debug, Clone)]
pub struct ReferenceMean {
    pub matrix: CovMatrix,
    pub converged: bool,
    pub iterations: usize,
}

/// Group reference point over a set of SPD matrices.
///
/// Geometric mode runs the fixed-point iteration
/// `G <- G^1/2 expm(mean_k logm(G^-1/2 C_k G^-1/2)) G^1/2`, initialized at the
/// arithmetic mean, stopping when the Frobenius norm of the mean-of-logs term
/// drops below `tol`. On non-convergence the best iterate seen is returned
/// with `converged = false`.
pub fn reference_mean(
    covs: &[CovMatrix],
    mode: MeanMode,
    tol: f64,
    max_iter: usize,
) -> Result<ReferenceMean> {
    if covs.is_empty() {
        return Err(Error::InvalidInput(
            "reference_mean requires at least one matrix".into(),
        ));
    }
    let dim = covs[0].dim();
    if covs.iter().any(|c| c.dim() != dim) {
        return Err(Error::InvalidInput(
            "reference_mean requires matrices of equal dimension".into(),
        ));
    }

    let mut acc = DMatrix::<f64>::zeros(dim, dim);
    for c in covs {
        acc += c.data();
    }
    acc /= covs.len() as f64;
    let arithmetic = CovMatrix::new(symmetrize(&acc))?;

    match mode {
        MeanMode::Arithmetic => Ok(ReferenceMean {
            matrix: arithmetic,
            converged: true,
            iterations: 0,
        }),
        MeanMode::Geometric => {
            let mut g = arithmetic;
            let mut best: Option<(CovMatrix, f64)> = None;
            for iter in 1..=max_iter {
                let half = spd_sqrt(&g)?;
                let inv_half = spd_invsqrt(&g)?;
                let mut mean_log = DMatrix::<f64>::zeros(dim, dim);
                for c in covs {
                    let whitened = symmetrize(&(inv_half.data() * c.data() * inv_half.data()));
                    mean_log += logm_raw(&whitened)?;
                }
                mean_log /= covs.len() as f64;

                let residual = mean_log.norm();
                if best.as_ref().is_none_or(|(_, b)| residual < *b) {
                    best = Some((g.clone(), residual));
                }
                if residual < tol {
                    return Ok(ReferenceMean {
                        matrix: g,
                        converged: true,
                        iterations: iter,
                    });
                }

                let step = spd_expm(&mean_log)?;
                let next = symmetrize(&(half.data() * step * half.data()));
                g = CovMatrix::new(next)?;
            }
            let (matrix, _) = best.expect("max_iter >= 1 yields at least one iterate");
            Ok(ReferenceMean {
                matrix,
                converged: false,
                iterations: max_iter,
            })
        }
    }
}

/// Map a covariance onto the tangent space at `reference` and vectorize.
///
/// Computes `L = logm(ref^-1/2 cov ref^-1/2)` and returns the upper triangle
/// of L with off-diagonal entries multiplied by sqrt(2), so that the
/// Euclidean norm of the vector equals the Frobenius norm of L.
pub fn tangent_embed(cov: &CovMatrix, reference: &CovMatrix) -> Result<FeatureVector> {
    if cov.dim() != reference.dim() {
        return Err(Error::InvalidInput(format!(
            "tangent_embed dimension mismatch: cov is {}, reference is {}",
            cov.dim(),
            reference.dim()
        )));
    }
    let inv_half = spd_invsqrt(reference)?;
    let whitened = symmetrize(&(inv_half.data() * cov.data() * inv_half.data()));
    let tangent = logm_raw(&whitened)?;

    let r = cov.dim();
    let pairs = region_pairs(r);
    let sqrt2 = std::f64::consts::SQRT_2;
    let values = pairs
        .iter()
        .map(|&(i, j)| {
            if i == j {
                tangent[(i, i)]
            } else {
                sqrt2 * tangent[(i, j)]
            }
        })
        .collect();
    Ok(FeatureVector {
        values,
        region_pairs: pairs,
    })
}

/// Rebuild the symmetric tangent matrix from a feature vector (inverse of the
/// sqrt(2)-scaled upper-triangle vectorization).
pub fn unvectorize(fv: &FeatureVector) -> Result<DMatrix<f64>> {
    let f = fv.values.len();
    // F = R(R+1)/2  =>  R = (sqrt(8F + 1) - 1) / 2
    let r = ((((8 * f + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    if r * (r + 1) / 2 != f || fv.region_pairs.len() != f {
        return Err(Error::InvalidInput(format!(
            "feature vector length {f} is not a triangular number matching its pairs"
        )));
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut m = DMatrix::<f64>::zeros(r, r);
    for (&(i, j), &v) in fv.region_pairs.iter().zip(&fv.values) {
        if i == j {
            m[(i, i)] = v;
        } else {
            m[(i, j)] = v / sqrt2;
            m[(j, i)] = v / sqrt2;
        }
    }
    Ok(m)
}

/// Options for `build_dataset`.
#[derive(Debug, Clone)]
pub struct EmbedOptions {
    pub shrinkage: f64,
    pub mean_mode: MeanMode,
    pub mean_tol: f64,
    pub mean_max_iter: usize,
    /// Subjects whose covariances define the reference mean. `None` uses the
    /// whole cohort. Training-only indices avoid test-set leakage: the
    /// reference is fit on training subjects and reused to embed the rest.
    pub reference_subjects: Option<Vec<usize>>,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        Self {
            shrinkage: 0.05,
            mean_mode: MeanMode::Geometric,
            mean_tol: 1e-6,
            mean_max_iter: 50,
            reference_subjects: None,
        }
    }
}

/// A built dataset plus the reference point used for the embedding.
#[derive(Debug, Clone)]
pub struct DatasetBuild {
    pub dataset: Dataset,
    pub reference: ReferenceMean,
}

/// Covariance per subject, reference mean over the selected subjects, then
/// tangent features per subject. Row order always matches input order;
/// per-subject work runs in parallel.
pub fn build_dataset(
    cohort: &[TimeSeriesMatrix],
    labels: &[u8],
    opts: &EmbedOptions,
) -> Result<DatasetBuild> {
    if cohort.is_empty() {
        return Err(Error::InvalidInput("empty cohort".into()));
    }
    if cohort.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "cohort has {} subjects but {} labels",
            cohort.len(),
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidInput(format!(
            "labels must be 0 or 1, got {bad}"
        )));
    }
    let r = cohort[0].regions();
    if let Some(ts) = cohort.iter().find(|ts| ts.regions() != r) {
        return Err(Error::InvalidInput(format!(
            "subject {} has {} regions, expected {r}",
            ts.subject_id,
            ts.regions()
        )));
    }

    let covs: Vec<CovMatrix> = cohort
        .par_iter()
        .map(|ts| estimate_covariance(ts, opts.shrinkage))
        .collect::<Result<_>>()?;

    let reference_covs: Vec<CovMatrix> = match &opts.reference_subjects {
        None => covs.clone(),
        Some(idx) => {
            if idx.iter().any(|&i| i >= covs.len()) {
                return Err(Error::InvalidInput(
                    "reference subject index out of range".into(),
                ));
            }
            idx.iter().map(|&i| covs[i].clone()).collect()
        }
    };
    if reference_covs.is_empty() {
        return Err(Error::InvalidInput(
            "reference subject set must be non-empty".into(),
        ));
    }
    let reference = reference_mean(
        &reference_covs,
        opts.mean_mode,
        opts.mean_tol,
        opts.mean_max_iter,
    )?;

    let rows: Vec<FeatureVector> = covs
        .par_iter()
        .map(|c| tangent_embed(c, &reference.matrix))
        .collect::<Result<_>>()?;

    let n_features = r * (r + 1) / 2;
    let mut features = ndarray::Array2::<f64>::zeros((cohort.len(), n_features));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.values.iter().enumerate() {
            features[(i, j)] = v;
        }
    }

    let dataset = Dataset::new(
        features,
        labels.to_vec(),
        cohort.iter().map(|ts| ts.subject_id.clone()).collect(),
        region_pairs(r),
    )?;
    Ok(DatasetBuild { dataset, reference })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_spd(dim: usize, seed: u64) -> CovMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(dim, dim, |_, _| rng.random::<f64>() - 0.5);
        let spd = &a * a.transpose() + DMatrix::identity(dim, dim) * 0.5;
        CovMatrix::new(symmetrize(&spd)).unwrap()
    }

    fn frob_rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn covariance_of_uncorrelated_unit_columns_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = 200_000;
        let data = ndarray::Array2::from_shape_fn((t, 2), |_| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        let ts = TimeSeriesMatrix::new("s0", data).unwrap();
        let cov = estimate_covariance(&ts, 0.0).unwrap();
        assert_abs_diff_eq!(cov.data()[(0, 0)], 1.0, epsilon = 0.02);
        assert_abs_diff_eq!(cov.data()[(1, 1)], 1.0, epsilon = 0.02);
        assert_abs_diff_eq!(cov.data()[(0, 1)], 0.0, epsilon = 0.02);
    }

    #[test]
    fn constant_column_is_forced_positive_by_shrinkage() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = 50;
        let mut data = ndarray::Array2::from_shape_fn((t, 3), |_| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        for k in 0..t {
            data[(k, 1)] = 2.5; // constant column
        }
        let ts = TimeSeriesMatrix::new("s0", data).unwrap();
        let lam = 0.1;
        let cov = estimate_covariance(&ts, lam).unwrap();

        // With zero sample variance on the column, the diagonal entry is
        // exactly lambda * tr(S)/R.
        let raw = estimate_covariance(&ts, 0.0).unwrap();
        let mu = raw.data().trace() / 3.0;
        assert_abs_diff_eq!(cov.data()[(1, 1)], lam * mu, epsilon = 1e-12);
        assert!(cov.data()[(1, 1)] > 0.0);
        assert!(cov.is_spd());
    }

    #[test]
    fn covariance_matches_brute_force_oracle() {
        // Fixed 6x3 matrix, seed-locked entries.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let data = ndarray::Array2::from_shape_fn((6, 3), |_| rng.random::<f64>() * 4.0 - 2.0);

        // Oracle: direct double loop over centered products.
        let t = 6;
        let r = 3;
        let mut means = [0.0f64; 3];
        for j in 0..r {
            for k in 0..t {
                means[j] += data[(k, j)];
            }
            means[j] /= t as f64;
        }
        let mut oracle = [[0.0f64; 3]; 3];
        for i in 0..r {
            for j in 0..r {
                let mut acc = 0.0;
                for k in 0..t {
                    acc += (data[(k, i)] - means[i]) * (data[(k, j)] - means[j]);
                }
                oracle[i][j] = acc / (t as f64 - 1.0);
            }
        }

        let ts = TimeSeriesMatrix::new("s0", data).unwrap();
        let cov = estimate_covariance(&ts, 0.0).unwrap();
        for i in 0..r {
            for j in 0..r {
                assert_abs_diff_eq!(cov.data()[(i, j)], oracle[i][j], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn eig_of_diagonal_matrix() {
        let m = CovMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]))).unwrap();
        let eig = spd_eig(&m).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.eigenvalues[1], 1.0, epsilon = 1e-12);
        // Eigenvectors are the identity up to column sign.
        for k in 0..2 {
            let col = eig.eigenvectors.column(k);
            assert_abs_diff_eq!(col[k].abs(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn eig_of_identity_is_all_ones() {
        let eig = spd_eig(&CovMatrix::identity(4)).unwrap();
        for k in 0..4 {
            assert_abs_diff_eq!(eig.eigenvalues[k], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn eig_reconstructs_random_spd() {
        let m = random_spd(5, 7);
        let eig = spd_eig(&m).unwrap();
        let recon = eig.map(|w| w);
        assert!(frob_rel_err(&recon, m.data()) < 1e-10);
        let vtv = eig.eigenvectors.transpose() * &eig.eigenvectors;
        assert!(frob_rel_err(&vtv, &DMatrix::identity(5, 5)) < 1e-10);
    }

    #[test]
    fn logm_of_identity_is_zero() {
        let l = spd_logm(&CovMatrix::identity(3)).unwrap();
        assert!(l.norm() < 1e-12);
    }

    #[test]
    fn logm_of_analytic_diagonal() {
        let e = std::f64::consts::E;
        let m = CovMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![e, e * e])))
            .unwrap();
        let l = spd_logm(&m).unwrap();
        assert_abs_diff_eq!(l[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l[(1, 1)], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn expm_logm_roundtrip_on_random_spd() {
        let m = random_spd(4, 21);
        let l = spd_logm(&m).unwrap();
        let back = spd_expm(&l).unwrap();
        assert!(frob_rel_err(&back, m.data()) < 1e-8);
    }

    #[test]
    fn logm_rejects_near_singular_matrix() {
        let m = CovMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-15])))
            .unwrap();
        match spd_logm(&m) {
            Err(Error::SingularMatrix { .. }) => {}
            other => panic!("expected SingularMatrix, got {other:?}"),
        }
    }

    #[test]
    fn invsqrt_analytic_and_identity() {
        let id = spd_invsqrt(&CovMatrix::identity(3)).unwrap();
        assert!(frob_rel_err(id.data(), &DMatrix::identity(3, 3)) < 1e-12);

        let m = CovMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0])))
            .unwrap();
        let inv_half = spd_invsqrt(&m).unwrap();
        assert_abs_diff_eq!(inv_half.data()[(0, 0)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(inv_half.data()[(1, 1)], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn invsqrt_whitens_to_identity() {
        let m = random_spd(6, 13);
        let w = spd_invsqrt(&m).unwrap();
        let whitened = w.data() * m.data() * w.data();
        assert!(frob_rel_err(&whitened, &DMatrix::identity(6, 6)) < 1e-8);
    }

    #[test]
    fn reference_mean_of_single_matrix_is_that_matrix() {
        let m = random_spd(3, 5);
        for mode in [MeanMode::Arithmetic, MeanMode::Geometric] {
            let out = reference_mean(std::slice::from_ref(&m), mode, 1e-6, 50).unwrap();
            assert!(out.converged);
            assert!(frob_rel_err(out.matrix.data(), m.data()) < 1e-8);
        }
    }

    #[test]
    fn geometric_mean_of_equal_inputs_converges_in_one_iteration() {
        let m = random_spd(3, 17);
        let covs = vec![m.clone(), m.clone(), m.clone()];
        let out = reference_mean(&covs, MeanMode::Geometric, 1e-6, 50).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        assert!(frob_rel_err(out.matrix.data(), m.data()) < 1e-8);
    }

    #[test]
    fn geometric_mean_of_commuting_diagonals_matches_scalar_oracle() {
        // Oracle: for simultaneously diagonal inputs the geometric mean is the
        // elementwise scalar geometric mean of eigenvalues: sqrt(1 * 4) = 2.
        let a = CovMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0])))
            .unwrap();
        let b = CovMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 4.0])))
            .unwrap();
        let out = reference_mean(&[a, b], MeanMode::Geometric, 1e-9, 100).unwrap();
        assert!(out.converged);
        assert_abs_diff_eq!(out.matrix.data()[(0, 0)], 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(out.matrix.data()[(1, 1)], 2.0, epsilon = 1e-6);
    }

    #[test]
    fn tangent_embed_at_reference_is_zero() {
        let m = random_spd(5, 31);
        let fv = tangent_embed(&m, &m).unwrap();
        assert!(fv.values.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn tangent_embed_analytic_two_regions() {
        let e = std::f64::consts::E;
        let cov =
            CovMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![e, e]))).unwrap();
        let fv = tangent_embed(&cov, &CovMatrix::identity(2)).unwrap();
        assert_eq!(fv.region_pairs, vec![(0, 0), (0, 1), (1, 1)]);
        assert_abs_diff_eq!(fv.values[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fv.values[1], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fv.values[2], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn tangent_embed_preserves_frobenius_norm() {
        // Oracle: the Euclidean norm of the feature vector must equal the
        // Frobenius norm of the tangent matrix computed from public pieces.
        let cov = random_spd(4, 41);
        let reference = random_spd(4, 43);
        let fv = tangent_embed(&cov, &reference).unwrap();

        let w = spd_invsqrt(&reference).unwrap();
        let whitened =
            CovMatrix::new(symmetrize(&(w.data() * cov.data() * w.data()))).unwrap();
        let tangent = spd_logm(&whitened).unwrap();

        let vec_norm = fv.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert_abs_diff_eq!(vec_norm, tangent.norm(), epsilon = 1e-10);
    }

    #[test]
    fn unvectorize_inverts_vectorization() {
        let cov = random_spd(5, 53);
        let reference = random_spd(5, 59);
        let fv = tangent_embed(&cov, &reference).unwrap();
        let m = unvectorize(&fv).unwrap();
        let sqrt2 = std::f64::consts::SQRT_2;
        for (&(i, j), &v) in fv.region_pairs.iter().zip(&fv.values) {
            let expect = if i == j { m[(i, i)] } else { sqrt2 * m[(i, j)] };
            assert_abs_diff_eq!(v, expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn build_dataset_identical_subjects_identical_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let data = ndarray::Array2::from_shape_fn((40, 4), |_| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        let a = TimeSeriesMatrix::new("a", data.clone()).unwrap();
        let b = TimeSeriesMatrix::new("b", data).unwrap();
        let build = build_dataset(&[a, b], &[0, 1], &EmbedOptions::default()).unwrap();
        let d = build.dataset;
        for j in 0..d.n_features() {
            assert_eq!(d.features[(0, j)], d.features[(1, j)]);
        }
    }

    #[test]
    fn build_dataset_feature_dimension_matches_granularity() {
        for (r, expected) in [(64usize, 2080usize), (122, 7503), (197, 19503)] {
            assert_eq!(region_pairs(r).len(), expected);
        }

        // A tiny cohort at the coarse granularity exercises the full path.
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let cohort: Vec<TimeSeriesMatrix> = (0..2)
            .map(|i| {
                let data = ndarray::Array2::from_shape_fn((70, 64), |_| {
                    rng.sample::<f64, _>(rand_distr::StandardNormal)
                });
                TimeSeriesMatrix::new(format!("s{i}"), data).unwrap()
            })
            .collect();
        let build = build_dataset(&cohort, &[0, 1], &EmbedOptions::default()).unwrap();
        assert_eq!(build.dataset.n_features(), 2080);
        assert_eq!(build.dataset.len(), 2);
    }

    #[test]
    fn build_dataset_rejects_mixed_granularity() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let a = TimeSeriesMatrix::new(
            "a",
            ndarray::Array2::from_shape_fn((20, 3), |_| rng.random::<f64>()),
        )
        .unwrap();
        let b = TimeSeriesMatrix::new(
            "b",
            ndarray::Array2::from_shape_fn((20, 4), |_| rng.random::<f64>()),
        )
        .unwrap();
        match build_dataset(&[a, b], &[0, 1], &EmbedOptions::default()) {
            Err(Error::InvalidInput(_)) => {}
            other => panic!("expected InvalidInput, got {other:?}"),
        }
    }

    #[test]
    fn shrunk_covariance_is_always_spd() {
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Fewer timepoints than regions: raw covariance is rank-deficient.
            let data = ndarray::Array2::from_shape_fn((5, 8), |_| {
                rng.sample::<f64, _>(rand_distr::StandardNormal)
            });
            let ts = TimeSeriesMatrix::new("s", data).unwrap();
            let cov = estimate_covariance(&ts, 0.05).unwrap();
            assert!(cov.is_spd(), "seed {seed} produced a non-SPD covariance");
        }
    }
}
