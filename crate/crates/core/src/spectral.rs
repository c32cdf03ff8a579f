//! Spectral information from sample covariances and the inverse-filter
//! estimator.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{FilterSpec, SampleCovariance};
use crate::linalg;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SpectralError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("filter has no diffusion steps")]
    EmptyFilter,
    #[error("diffusion rates must be finite and strictly positive, got {0}")]
    NonPositiveRate(f64),
    #[error("covariance is degenerate: largest eigenvalue {sigma2} is below the floor {floor}")]
    DegenerateCovariance { sigma2: f64, floor: f64 },
    #[error("observation time must be at least 1")]
    ZeroTime,
}

/// Output of the inverse-filter estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub sigma2_hat: f64,
    /// Estimated Laplacian eigenvalues, nondecreasing.
    pub lambda_hat: Vec<f64>,
    /// Eigenvectors paired with `lambda_hat`.
    #[serde(skip)]
    pub eigvecs: DMatrix<f64>,
    /// `V̂ diag(λ̂) V̂ᵀ`; symmetric, not necessarily a CGL.
    #[serde(skip)]
    pub l_hat: DMatrix<f64>,
}

/// Eigenvalues nonincreasing with orthonormal eigenvectors.
pub fn eigendecompose_sym(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>), SpectralError> {
    if m.nrows() != m.ncols() {
        return Err(SpectralError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SpectralError::NonFinite);
    }
    Ok(linalg::eigh_descending(m))
}

/// Flip each column of `u` so that it has a nonnegative inner product with
/// the matching column of `reference`.
pub fn align_signs(u: &DMatrix<f64>, reference: &DMatrix<f64>) -> Result<DMatrix<f64>, SpectralError> {
    if u.shape() != reference.shape() {
        return Err(SpectralError::DimensionMismatch { expected: reference.ncols(), got: u.ncols() });
    }
    let mut out = u.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        if col.dot(&reference.column(j)) < 0.0 {
            col.neg_mut();
        }
    }
    Ok(out)
}

/// Largest eigenvalue of the sample covariance.
pub fn estimate_sigma2(cov: &SampleCovariance) -> f64 {
    cov.eigvals().iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0)
}

fn check_filter(f: &FilterSpec) -> Result<(), SpectralError> {
    if f.is_empty() {
        return Err(SpectralError::EmptyFilter);
    }
    if let Some(&bad) = f.rates().iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(SpectralError::NonPositiveRate(bad));
    }
    Ok(())
}

/// Solve `∏ (1 − α_t λ) = h` for `λ ∈ [0, 1/α_max]` by bisection. `h` is
/// clipped to `[0, 1]` first.
pub fn invert_filter_eigenvalue(h_target: f64, f: &FilterSpec) -> Result<f64, SpectralError> {
    check_filter(f)?;
    let h = if h_target.is_nan() { 0.0 } else { h_target.clamp(0.0, 1.0) };
    let mut lo = 0.0;
    let mut hi = 1.0 / f.max_rate();
    if h >= 1.0 {
        return Ok(0.0);
    }
    if h <= 0.0 {
        return Ok(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f.response(mid) > h {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn checked_sigma2(cov: &SampleCovariance) -> Result<f64, SpectralError> {
    let sigma2 = estimate_sigma2(cov);
    let n = cov.n().max(1) as f64;
    let floor = 1e-12 * linalg::trace(cov.matrix()) / n;
    if !(sigma2 > 0.0) || sigma2 < floor {
        return Err(SpectralError::DegenerateCovariance { sigma2, floor });
    }
    Ok(sigma2)
}

/// Invert the known filter on every covariance eigenvalue.
pub fn inverse_filter(cov: &SampleCovariance, f: &FilterSpec) -> Result<SpectralEstimate, SpectralError> {
    check_filter(f)?;
    let sigma2 = checked_sigma2(cov)?;
    let mut lambda_hat = Vec::with_capacity(cov.n());
    for &s in cov.eigvals().iter() {
        let ratio = (s / sigma2).clamp(0.0, 1.0);
        lambda_hat.push(invert_filter_eigenvalue(ratio.sqrt(), f)?);
    }
    let eigvecs = cov.eigvecs().clone();
    let l_hat = linalg::reconstruct(&eigvecs, &DVector::from_column_slice(&lambda_hat));
    Ok(SpectralEstimate { sigma2_hat: sigma2, lambda_hat, eigvecs, l_hat })
}

/// Constant-rate closed form `I − (S/σ̂²)^{1/(2t)}`, which equals `α L` when
/// the data came from `t` steps of rate `α`.
pub fn simplified_inverse_filter(cov: &SampleCovariance, t: usize) -> Result<DMatrix<f64>, SpectralError> {
    if t == 0 {
        return Err(SpectralError::ZeroTime);
    }
    let sigma2 = checked_sigma2(cov)?;
    let p = 1.0 / (2.0 * t as f64);
    let diag = cov.eigvals().map(|s| 1.0 - (s / sigma2).clamp(0.0, 1.0).powf(p));
    Ok(linalg::reconstruct(cov.eigvecs(), &diag))
}
