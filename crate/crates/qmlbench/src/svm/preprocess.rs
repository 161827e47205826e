//! Standard scaler and PCA, the two preprocessing steps every pipeline uses.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column mean and population standard deviation. Zero-variance columns
/// keep std 1 so scaling maps them to all-zero instead of dividing by zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

pub fn fit_scaler(x: &DMatrix<f64>) -> Result<ScalerParams> {
    let (n, d) = (x.nrows(), x.ncols());
    if n == 0 {
        return Err(Error::EmptyInput("scaler input"));
    }
    let mut means = vec![0.0; d];
    let mut stds = vec![0.0; d];
    for j in 0..d {
        let mean = x.column(j).iter().sum::<f64>() / n as f64;
        let var = x.column(j).iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        means[j] = mean;
        let std = var.sqrt();
        stds[j] = if std > 0.0 { std } else { 1.0 };
    }
    Ok(ScalerParams { means, stds })
}

pub fn apply_scaler(x: &DMatrix<f64>, params: &ScalerParams) -> Result<DMatrix<f64>> {
    if x.ncols() != params.means.len() {
        return Err(Error::DimensionMismatch {
            expected: params.means.len(),
            got: x.ncols(),
        });
    }
    Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
        (x[(i, j)] - params.means[j]) / params.stds[j]
    }))
}

pub fn fit_apply_scaler(x: &DMatrix<f64>) -> Result<(ScalerParams, DMatrix<f64>)> {
    let params = fit_scaler(x)?;
    let scaled = apply_scaler(x, &params)?;
    Ok((params, scaled))
}

/// Top-k principal components of the column-centered data.
///
/// `components` is k x d with orthonormal rows; eigenvalues of the population
/// covariance come back non-increasing in `explained_variance`. Sign
/// convention: the largest-|entry| coordinate of each component is positive,
/// so repeated fits agree bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaParams {
    pub components: Vec<Vec<f64>>,
    pub column_means: Vec<f64>,
    pub explained_variance: Vec<f64>,
}

impl PcaParams {
    pub fn components_matrix(&self) -> DMatrix<f64> {
        let k = self.components.len();
        let d = self.column_means.len();
        DMatrix::from_fn(k, d, |i, j| self.components[i][j])
    }
}

pub fn fit_pca(x: &DMatrix<f64>, k: usize) -> Result<PcaParams> {
    let (n, d) = (x.nrows(), x.ncols());
    if n == 0 {
        return Err(Error::EmptyInput("pca input"));
    }
    if k == 0 || k > d {
        return Err(Error::TooManyComponents { k, d });
    }
    if d > n {
        return Err(Error::InvalidParameter(format!(
            "pca requires n >= d (n = {n}, d = {d})"
        )));
    }
    let means: Vec<f64> = (0..d)
        .map(|j| x.column(j).iter().sum::<f64>() / n as f64)
        .collect();
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - means[j]);
    let cov = centered.transpose() * &centered / n as f64;
    let eig = cov.symmetric_eigen();
    // sort eigenpairs by descending eigenvalue
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let mut components = Vec::with_capacity(k);
    let mut explained = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut comp: Vec<f64> = eig.eigenvectors.column(idx).iter().cloned().collect();
        let max_j = comp
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(j, _)| j)
            .unwrap();
        if comp[max_j] < 0.0 {
            for v in &mut comp {
                *v = -*v;
            }
        }
        components.push(comp);
        explained.push(eig.eigenvalues[idx].max(0.0));
    }
    Ok(PcaParams {
        components,
        column_means: means,
        explained_variance: explained,
    })
}

/// Project rows of `x` onto the fitted components: (x - means) * C^T.
pub fn pca_project(x: &DMatrix<f64>, params: &PcaParams) -> Result<DMatrix<f64>> {
    let d = params.column_means.len();
    if x.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.ncols(),
        });
    }
    let centered = DMatrix::from_fn(x.nrows(), d, |i, j| x[(i, j)] - params.column_means[j]);
    Ok(centered * params.components_matrix().transpose())
}

pub fn fit_pca_project(x: &DMatrix<f64>, k: usize) -> Result<(PcaParams, DMatrix<f64>)> {
    let params = fit_pca(x, k)?;
    let projected = pca_project(x, &params)?;
    Ok((params, projected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn scaler_standardizes_columns() {
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let (_, s) = fit_apply_scaler(&x).unwrap();
        let expect = 1.224744871391589; // (3-2)/sqrt(2/3)
        assert_abs_diff_eq!(s[(0, 0)], -expect, epsilon = 1e-9);
        assert_abs_diff_eq!(s[(1, 0)], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s[(2, 0)], expect, epsilon = 1e-9);
    }

    #[test]
    fn constant_column_becomes_zero() {
        let x = DMatrix::from_column_slice(2, 1, &[5.0, 5.0]);
        let (p, s) = fit_apply_scaler(&x).unwrap();
        assert_eq!(p.stds, vec![1.0]);
        assert_abs_diff_eq!(s[(0, 0)], 0.0);
        assert_abs_diff_eq!(s[(1, 0)], 0.0);
    }

    #[test]
    fn idempotent_on_standardized_data() {
        let x = DMatrix::from_column_slice(4, 1, &[-1.5, -0.5, 0.5, 1.5]);
        let (_, once) = fit_apply_scaler(&x).unwrap();
        let (_, twice) = fit_apply_scaler(&once).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(once[(i, 0)], twice[(i, 0)], epsilon = 1e-9);
        }
    }

    #[test]
    fn empty_matrix_rejected() {
        assert!(fit_scaler(&DMatrix::zeros(0, 2)).is_err());
        assert!(fit_pca(&DMatrix::zeros(0, 2), 1).is_err());
    }

    #[test]
    fn rank_one_data_captured_by_first_component() {
        // points on the line x2 = x1
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0]);
        let p = fit_pca(&x, 1).unwrap();
        let total: f64 = {
            let means = [2.5, 2.5];
            (0..4)
                .map(|i| {
                    (x[(i, 0)] - means[0]).powi(2) / 4.0 + (x[(i, 1)] - means[1]).powi(2) / 4.0
                })
                .sum()
        };
        assert_abs_diff_eq!(p.explained_variance[0], total, epsilon = 1e-9);
    }

    #[test]
    fn full_rank_projection_preserves_distances() {
        let mut rng = crate::rng::stream_rng(3, 0, 0);
        let x = DMatrix::from_fn(10, 3, |_, _| rng.gen_range(-2.0..2.0));
        let (_, proj) = fit_pca_project(&x, 3).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let orig: f64 = (0..3).map(|c| (x[(i, c)] - x[(j, c)]).powi(2)).sum();
                let new: f64 = (0..3).map(|c| (proj[(i, c)] - proj[(j, c)]).powi(2)).sum();
                assert_abs_diff_eq!(orig.sqrt(), new.sqrt(), epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn components_orthonormal_and_variances_sorted() {
        let mut rng = crate::rng::stream_rng(9, 0, 0);
        let x = DMatrix::from_fn(50, 5, |_, j| rng.gen_range(-1.0..1.0) * (j as f64 + 1.0));
        let p = fit_pca(&x, 5).unwrap();
        let c = p.components_matrix();
        let gram = &c * c.transpose();
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(gram[(i, j)], expect, epsilon = 1e-8);
            }
        }
        for w in p.explained_variance.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
    }

    #[test]
    fn reconstruction_error_equals_dropped_eigenvalue_mass() {
        let mut rng = crate::rng::stream_rng(21, 0, 0);
        let x = DMatrix::from_fn(50, 5, |_, j| rng.gen_range(-1.0..1.0) * (j as f64 + 0.5));
        let n = 50.0;
        let full = fit_pca(&x, 5).unwrap();
        let (p2, proj) = fit_pca_project(&x, 2).unwrap();
        let recon = proj * p2.components_matrix()
            + DMatrix::from_fn(50, 5, |_, j| p2.column_means[j]);
        let sse: f64 = (0..50)
            .map(|i| (0..5).map(|j| (x[(i, j)] - recon[(i, j)]).powi(2)).sum::<f64>())
            .sum();
        let dropped: f64 = full.explained_variance[2..].iter().sum();
        assert_abs_diff_eq!(sse, dropped * n, epsilon = 1e-6);
    }

    #[test]
    fn k_larger_than_d_rejected() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert!(matches!(fit_pca(&x, 3), Err(Error::TooManyComponents { .. })));
    }
}
