use nalgebra::{DMatrix, DVector};

use super::{FeatureSet, MetricsError};

const SYM_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;
const SQRT_CLAMP: f64 = 1e-8;

/// Mean and covariance of a feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

fn scale(m: &DMatrix<f64>) -> f64 {
    m.amax().max(1.0)
}

impl GaussianStats {
    /// Checks shapes, symmetry and positive semi-definiteness; tolerances are
    /// relative to `max(1, max |cov|)`.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, MetricsError> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(MetricsError::InvalidStats(format!(
                "mean has {d} entries but covariance is {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(MetricsError::InvalidStats("non-finite entry".into()));
        }
        let s = scale(&cov);
        let asym = (&cov - cov.transpose()).amax();
        if asym > SYM_TOL * s {
            return Err(MetricsError::InvalidStats(format!("covariance asymmetric by {asym:e}")));
        }
        let min_eig = cov.clone().symmetric_eigenvalues().min();
        if d > 0 && min_eig < -PSD_TOL * s {
            return Err(MetricsError::InvalidStats(format!("covariance has eigenvalue {min_eig:e}")));
        }
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Sample mean and unbiased sample covariance.
pub fn gaussian_stats(feats: &FeatureSet) -> Result<GaussianStats, MetricsError> {
    let n = feats.len();
    if n < 2 {
        return Err(MetricsError::InsufficientData(format!("covariance needs at least 2 rows, got {n}")));
    }
    let d = feats.dim();
    let x = DMatrix::from_row_iterator(n, d, feats.rows().flatten().copied());
    let mean = x.row_mean().transpose();
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let mut cov = centered.transpose() * &centered / (n as f64 - 1.0);
    cov = (&cov + cov.transpose()) * 0.5;
    GaussianStats::new(mean, cov)
}

/// Square root of a symmetric PSD matrix via eigendecomposition; eigenvalues
/// in `[-SQRT_CLAMP * scale, 0)` are treated as zero.
fn psd_sqrt(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>, MetricsError> {
    let eig = clamped_eigen(m, what)?;
    let root = eig.1.map(f64::sqrt);
    Ok(&eig.0 * DMatrix::from_diagonal(&root) * eig.0.transpose())
}

fn clamped_eigen(m: &DMatrix<f64>, what: &str) -> Result<(DMatrix<f64>, DVector<f64>), MetricsError> {
    let sym = (m + m.transpose()) * 0.5;
    let s = scale(&sym);
    let e = sym.symmetric_eigen();
    let mut vals = e.eigenvalues;
    for v in vals.iter_mut() {
        if *v < -SQRT_CLAMP * s {
            return Err(MetricsError::InvalidStats(format!("{what} has eigenvalue {v:e}")));
        }
        *v = v.max(0.0);
    }
    Ok((e.eigenvectors, vals))
}

/// `|mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2))`, with the trace of
/// the cross term taken from the eigenvalues of `S_a^(1/2) S_b S_a^(1/2)`.
pub fn frechet_distance(a: &GaussianStats, b: &GaussianStats) -> Result<f64, MetricsError> {
    if a.dim() != b.dim() {
        return Err(MetricsError::Shape(format!("stats of dimension {} and {}", a.dim(), b.dim())));
    }
    let diff = &a.mean - &b.mean;
    let ra = psd_sqrt(&a.cov, "first covariance")?;
    let sandwich = &ra * &b.cov * &ra;
    let (_, vals) = clamped_eigen(&sandwich, "covariance product")?;
    let cross: f64 = vals.iter().map(|v| v.sqrt()).sum();
    Ok(diff.norm_squared() + a.cov.trace() + b.cov.trace() - 2.0 * cross)
}
