//! Recovery-quality metrics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg;

/// Default detection threshold on `−L_ij`.
pub const EDGE_THRESHOLD: f64 = 1e-6;
/// Relative error below which a recovery counts as a success.
pub const SUCCESS_THRESHOLD: f64 = 0.02;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("reference matrix has zero Frobenius norm")]
    ZeroTrueNorm,
    #[error("estimate has nonpositive trace {0}, cannot trace-normalize")]
    ZeroEstimateTrace(f64),
    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("empty list")]
    EmptyList,
    #[error("invalid threshold {0}")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub rel_error: Option<f64>,
    pub f_score: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub trace_normalized: bool,
}

fn same_shape(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(), MetricsError> {
    if a.shape() != b.shape() {
        return Err(MetricsError::DimensionMismatch(a.shape(), b.shape()));
    }
    Ok(())
}

/// `‖L* − L‖_F / ‖L‖_F`, with `L*` first rescaled to the trace of `L` when
/// `trace_normalize` is set.
pub fn recovery_error(l_star: &DMatrix<f64>, l_true: &DMatrix<f64>, trace_normalize: bool) -> Result<f64, MetricsError> {
    same_shape(l_star, l_true)?;
    let denom = linalg::frobenius(l_true);
    if denom == 0.0 {
        return Err(MetricsError::ZeroTrueNorm);
    }
    let diff = if trace_normalize {
        let tr = linalg::trace(l_star);
        if !(tr > 0.0) {
            return Err(MetricsError::ZeroEstimateTrace(tr));
        }
        l_star * (linalg::trace(l_true) / tr) - l_true
    } else {
        l_star - l_true
    };
    Ok(linalg::frobenius(&diff) / denom)
}

/// Edge-support comparison. An edge `i < j` is present when `−L_ij > threshold`.
pub fn f_score(l_star: &DMatrix<f64>, l_true: &DMatrix<f64>, threshold: f64) -> Result<RecoveryReport, MetricsError> {
    same_shape(l_star, l_true)?;
    if !(threshold >= 0.0) {
        return Err(MetricsError::InvalidThreshold(threshold));
    }
    let n = l_true.nrows();
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for i in 0..n {
        for j in i + 1..n {
            match (-l_star[(i, j)] > threshold, -l_true[(i, j)] > threshold) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    let denom = 2 * tp + fp + fn_;
    let f_score = if denom == 0 { 1.0 } else { 2.0 * tp as f64 / denom as f64 };
    Ok(RecoveryReport { rel_error: None, f_score, tp, fp, fn_, trace_normalized: false })
}

/// Both metrics in one report.
pub fn evaluate(
    l_star: &DMatrix<f64>,
    l_true: &DMatrix<f64>,
    trace_normalize: bool,
    threshold: f64,
) -> Result<RecoveryReport, MetricsError> {
    let mut report = f_score(l_star, l_true, threshold)?;
    report.rel_error = Some(recovery_error(l_star, l_true, trace_normalize)?);
    report.trace_normalized = trace_normalize;
    Ok(report)
}

/// Fraction of errors strictly below `threshold`.
pub fn recovery_rate(errors: &[f64], threshold: f64) -> Result<f64, MetricsError> {
    if errors.is_empty() {
        return Err(MetricsError::EmptyList);
    }
    Ok(errors.iter().filter(|&&e| e < threshold).count() as f64 / errors.len() as f64)
}
