use nalgebra::{DMatrix, DVector};

use super::{DynamicsError, FilterSpec, SnapshotSet};
use crate::graphs::Laplacian;
use crate::linalg;

/// Uncentred sample second moment `S_M = (1/M) Σ y_k y_kᵀ` with its
/// eigendecomposition, eigenvalues nonincreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCovariance {
    matrix: DMatrix<f64>,
    eigvals: DVector<f64>,
    eigvecs: DMatrix<f64>,
}

impl SampleCovariance {
    /// Wrap an arbitrary symmetric matrix (symmetrised first).
    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        let matrix = linalg::symmetrize(&matrix);
        let (eigvals, eigvecs) = linalg::eigh_descending(&matrix);
        SampleCovariance { matrix, eigvals, eigvecs }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Eigenvalues `Σ`, nonincreasing.
    pub fn eigvals(&self) -> &DVector<f64> {
        &self.eigvals
    }

    /// Eigenvectors `U`, column `i` paired with `eigvals()[i]`.
    pub fn eigvecs(&self) -> &DMatrix<f64> {
        &self.eigvecs
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SampleCovariance { matrix: &self.matrix * factor, eigvals: &self.eigvals * factor, eigvecs: self.eigvecs.clone() }
    }
}

pub fn sample_covariance(s: &SnapshotSet) -> SampleCovariance {
    let y = s.signals();
    let m = y.transpose() * y / s.m() as f64;
    SampleCovariance::from_matrix(m)
}

/// `C_y = σ² V h(Λ)² Vᵀ`.
pub fn analytic_covariance(l: &Laplacian, f: &FilterSpec, sigma2: f64) -> Result<DMatrix<f64>, DynamicsError> {
    if !f.is_empty() {
        f.check_stable(l.lambda_max())?;
    }
    let eig = l.eigen();
    let diag = eig.values.map(|lam| sigma2 * f.response(lam).powi(2));
    Ok(linalg::reconstruct(&eig.vectors, &diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{laplacian_of, WeightedGraph};
    use approx::assert_relative_eq;

    fn set(rows: usize, data: &[f64]) -> SnapshotSet {
        SnapshotSet::new(DMatrix::from_row_slice(rows, data.len() / rows, data), 1.0).unwrap()
    }

    #[test]
    fn single_sample_outer_product() {
        let c = sample_covariance(&set(1, &[1.0, -2.0, 0.5]));
        let y = DVector::from_row_slice(&[1.0, -2.0, 0.5]);
        assert_relative_eq!(c.matrix().clone(), &y * y.transpose(), epsilon = 1e-15);
    }

    #[test]
    fn two_unit_samples_give_half_identity() {
        let c = sample_covariance(&set(2, &[1.0, 0.0, 0.0, 1.0]));
        assert_relative_eq!(c.matrix().clone(), DMatrix::identity(2, 2) * 0.5);
    }

    #[test]
    fn repeated_rows_do_not_change_the_moment() {
        let c = sample_covariance(&set(3, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]));
        let y = DVector::from_row_slice(&[1.0, 2.0]);
        assert_relative_eq!(c.matrix().clone(), &y * y.transpose(), epsilon = 1e-14);
        assert!(c.eigvals()[0] >= c.eigvals()[1]);
    }

    #[test]
    fn eigen_data_reconstructs() {
        let c = sample_covariance(&set(3, &[1.0, 2.0, 0.0, -1.0, 0.5, 3.0, 0.2, 0.1, -0.4]));
        let back = linalg::reconstruct(c.eigvecs(), c.eigvals());
        assert_relative_eq!(back, c.matrix().clone(), epsilon = 1e-12);
        assert!(c.eigvals().iter().all(|&v| v >= -1e-10));
    }

    #[test]
    fn analytic_covariance_examples() {
        let l = laplacian_of(&WeightedGraph::new(2, [(0, 1, 1.0)]).unwrap());
        assert_relative_eq!(analytic_covariance(&l, &FilterSpec::identity(), 1.0).unwrap(), DMatrix::identity(2, 2), epsilon = 1e-14);
        // λ ∈ {0, 2}, h(2) = 1 − 0.25·2 = 0.5 → eigenvalues {1, 0.25}.
        let c = analytic_covariance(&l, &FilterSpec::new(vec![0.25]).unwrap(), 1.0).unwrap();
        let (vals, _) = linalg::eigh_descending(&c);
        assert_relative_eq!(vals[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(vals[1], 0.25, epsilon = 1e-14);
    }

    #[test]
    fn analytic_spectrum_is_squared_response() {
        let g = WeightedGraph::new(4, [(0, 1, 1.0), (1, 2, 2.5), (2, 3, 0.7), (0, 2, 1.1)]).unwrap();
        let l = laplacian_of(&g);
        let f = FilterSpec::relative_to(l.lambda_max(), &[0.7, 0.8, 0.9]).unwrap();
        let c = analytic_covariance(&l, &f, 3.0).unwrap();
        let (vals, _) = linalg::eigh_descending(&c);
        for (i, &lam) in l.eigen().values.iter().enumerate() {
            assert_relative_eq!(vals[i], 3.0 * f.response(lam).powi(2), epsilon = 1e-12);
        }
        assert!(analytic_covariance(&l, &FilterSpec::new(vec![1.0]).unwrap(), 1.0).is_err());
    }
}
