//! Conditional-mean inference for jointly Gaussian labels.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{invalid, Error, Result};

const RIDGE_FACTOR: f64 = 1e-9;

/// Cholesky factor of a symmetric matrix, adding `1e-9 * trace / m * I` once
/// if the matrix is not positive definite.
fn spd_cholesky(mat: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let m = mat.nrows();
    if let Some(c) = Cholesky::new(mat.clone()) {
        return Ok(c);
    }
    let ridge = RIDGE_FACTOR * mat.trace().abs() / m as f64;
    let repaired = mat + DMatrix::identity(m, m) * ridge;
    Cholesky::new(repaired).ok_or(Error::SingularCovariance)
}

fn to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let m = rows.len();
    if m == 0 || rows.iter().any(|r| r.len() != m) {
        return invalid("covariance must be a nonempty square matrix");
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return invalid("covariance contains a non-finite entry");
    }
    for i in 0..m {
        for j in 0..i {
            let scale = rows[i][j].abs().max(rows[j][i].abs()).max(1.0);
            if (rows[i][j] - rows[j][i]).abs() > 1e-9 * scale {
                return invalid("covariance must be symmetric");
            }
        }
    }
    Ok(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
}

/// Inverse of a symmetric positive definite matrix (ridge-repaired once).
pub fn precision_matrix(cov: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let inv = spd_cholesky(to_matrix(cov)?)?.inverse();
    let m = inv.nrows();
    Ok((0..m).map(|i| (0..m).map(|j| 0.5 * (inv[(i, j)] + inv[(j, i)])).collect()).collect())
}

/// Precomputed `Sigma_Lambda^{-1} Sigma_{Lambda y}` for repeated conditional
/// means.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianInference {
    weights: Vec<f64>,
}

impl GaussianInference {
    pub fn new(acc_vector: &[f64], cov_matrix: &[Vec<f64>]) -> Result<Self> {
        let mat = to_matrix(cov_matrix)?;
        if acc_vector.len() != mat.nrows() {
            return invalid(format!("{} accuracies for a {}x{} covariance", acc_vector.len(), mat.nrows(), mat.nrows()));
        }
        let chol = spd_cholesky(mat)?;
        let w = chol.solve(&DVector::from_column_slice(acc_vector));
        Ok(GaussianInference { weights: w.iter().copied().collect() })
    }

    /// Coefficients applied to the LF values.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn predict(&self, lf_values: &[f64]) -> Result<f64> {
        if lf_values.len() != self.weights.len() {
            return invalid(format!("{} values for {} labeling functions", lf_values.len(), self.weights.len()));
        }
        Ok(self.weights.iter().zip(lf_values).map(|(w, x)| w * x).sum())
    }
}

/// `Sigma_{Lambda y}^T Sigma_Lambda^{-1} lambda`.
pub fn gaussian_conditional_mean(lf_values: &[f64], acc_vector: &[f64], cov_matrix: &[Vec<f64>]) -> Result<f64> {
    GaussianInference::new(acc_vector, cov_matrix)?.predict(lf_values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_case() {
        let y = gaussian_conditional_mean(&[2.0], &[0.6], &[vec![1.5]]).unwrap();
        assert!((y - 0.6 / 1.5 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn identity_covariance_is_weighted_sum() {
        let cov = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let y = gaussian_conditional_mean(&[1.0, -2.0, 3.0], &[0.5, 0.25, 2.0], &cov).unwrap();
        assert!((y - (0.5 - 0.5 + 6.0)).abs() < 1e-12);
    }

    #[test]
    fn ridge_repairs_semidefinite_and_rejects_indefinite() {
        let psd = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(GaussianInference::new(&[0.5, 0.5], &psd).is_ok());
        let indefinite = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(matches!(GaussianInference::new(&[0.5, 0.5], &indefinite), Err(Error::SingularCovariance)));
        assert!(GaussianInference::new(&[0.5], &[vec![1.0, 0.2], vec![0.3, 1.0]]).is_err());
    }

    #[test]
    fn precision_inverts() {
        let cov = vec![vec![2.0, 0.5, 0.1], vec![0.5, 1.0, 0.2], vec![0.1, 0.2, 1.5]];
        let p = precision_matrix(&cov).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| cov[i][k] * p[k][j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}
