//! Soft-margin kernel SVM trained with sequential minimal optimization,
//! plus the preprocessing (scaler, PCA) and hyperplane geometry the
//! pipelines build on.

pub mod preprocess;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-3;
/// Pass budget for the SMO solver; one pass covers up to n pair updates.
pub const DEFAULT_MAX_PASSES: usize = 10_000;
const ALPHA_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
    Precomputed,
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        if let KernelSpec::Rbf { gamma } = self {
            if !gamma.is_finite() || *gamma <= 0.0 {
                return Err(Error::InvalidParameter(format!("rbf gamma must be positive, got {gamma}")));
            }
        }
        Ok(())
    }

    fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        match self {
            KernelSpec::Linear => u.iter().zip(v).map(|(a, b)| a * b).sum(),
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
                (-gamma * d2).exp()
            }
            KernelSpec::Precomputed => unreachable!("precomputed kernels are evaluated by the caller"),
        }
    }
}

/// The common scikit-learn default gamma = 1 / (d * Var(X)), with the
/// variance taken over all matrix entries.
pub fn default_rbf_gamma(x: &DMatrix<f64>) -> f64 {
    let n = (x.nrows() * x.ncols()) as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (x.ncols() as f64 * var)
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedSvm {
    pub kernel: KernelSpec,
    /// Stored rows with alpha > 1e-12 (empty for precomputed kernels, which
    /// address training points through `support_indices`).
    pub support_vectors: Vec<Vec<f64>>,
    /// Indices of the support vectors in the training set.
    pub support_indices: Vec<usize>,
    /// alpha_i * y_i per support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    /// (negative class, positive class) by ascending label.
    pub classes: (i32, i32),
    /// Materialized primal weights, linear kernel only.
    pub weights: Option<Vec<f64>>,
}

impl TrainedSvm {
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        match &self.kernel {
            KernelSpec::Precomputed => Err(Error::InvalidParameter(
                "precomputed-kernel model needs a kernel row; use decision_value_precomputed".into(),
            )),
            KernelSpec::Linear => {
                let w = self.weights.as_ref().ok_or(Error::NotLinearModel)?;
                if w.len() != x.len() {
                    return Err(Error::DimensionMismatch { expected: w.len(), got: x.len() });
                }
                Ok(w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.bias)
            }
            kernel => {
                if let Some(sv) = self.support_vectors.first() {
                    if sv.len() != x.len() {
                        return Err(Error::DimensionMismatch { expected: sv.len(), got: x.len() });
                    }
                }
                let sum: f64 = self
                    .support_vectors
                    .iter()
                    .zip(&self.dual_coefs)
                    .map(|(sv, coef)| coef * kernel.eval(x, sv))
                    .sum();
                Ok(sum + self.bias)
            }
        }
    }

    /// Decision value from a caller-supplied kernel row k(x, train_j) over
    /// all training points.
    pub fn decision_value_precomputed(&self, kernel_row: &[f64]) -> Result<f64> {
        let sum: f64 = self
            .support_indices
            .iter()
            .zip(&self.dual_coefs)
            .map(|(&j, coef)| {
                kernel_row
                    .get(j)
                    .map(|k| coef * k)
                    .ok_or(Error::DimensionMismatch { expected: j + 1, got: kernel_row.len() })
            })
            .sum::<Result<f64>>()?;
        Ok(sum + self.bias)
    }

    pub fn label_for(&self, decision_value: f64) -> i32 {
        if decision_value >= 0.0 {
            self.classes.1
        } else {
            self.classes.0
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<(i32, f64)> {
        let dv = self.decision_value(x)?;
        Ok((self.label_for(dv), dv))
    }

    /// Point-to-hyperplane distance |w.x + b| / |w| for linear models.
    pub fn hyperplane_distance(&self, x: &[f64]) -> Result<f64> {
        let w = self.weights.as_ref().ok_or(Error::NotLinearModel)?;
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::NotLinearModel);
        }
        if w.len() != x.len() {
            return Err(Error::DimensionMismatch { expected: w.len(), got: x.len() });
        }
        let dv: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.bias;
        Ok(dv.abs() / norm)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn signed_labels(y: &[i32]) -> Result<(Vec<f64>, (i32, i32))> {
    let classes: std::collections::BTreeSet<i32> = y.iter().copied().collect();
    match classes.len() {
        0 => Err(Error::EmptyInput("training labels")),
        1 => Err(Error::SingleClass(*y.first().unwrap())),
        2 => {
            let mut it = classes.into_iter();
            let neg = it.next().unwrap();
            let pos = it.next().unwrap();
            let signed = y.iter().map(|&l| if l == pos { 1.0 } else { -1.0 }).collect();
            Ok((signed, (neg, pos)))
        }
        n => Err(Error::NotBinary(n)),
    }
}

/// Result of the SMO dual solve.
struct SmoSolution {
    alphas: Vec<f64>,
    bias: f64,
}

/// Maximal-violating-pair SMO on the dual
/// min 0.5 a'Qa - e'a, 0 <= a <= C, y'a = 0 with Q_ij = y_i y_j K_ij.
/// Terminates when the KKT gap m(a) - M(a) drops below `tol`, or errors
/// after `max_passes` sweeps (n pair updates each) without convergence.
fn smo_solve(k: &DMatrix<f64>, y: &[f64], c: f64, tol: f64, max_passes: usize) -> Result<SmoSolution> {
    let n = y.len();
    let max_iter = max_passes.saturating_mul(n);
    let tau = 1e-12;
    let mut alpha = vec![0.0f64; n];
    // gradient of the dual objective, G_i = sum_j Q_ij a_j - 1
    let mut grad = vec![-1.0f64; n];
    let q = |i: usize, j: usize| y[i] * y[j] * k[(i, j)];

    let mut iter = 0usize;
    loop {
        // working-set selection by maximal KKT violation
        let mut m_val = f64::NEG_INFINITY;
        let mut i_sel = None;
        let mut m_low = f64::INFINITY;
        let mut j_sel = None;
        for t in 0..n {
            let up = (y[t] > 0.0 && alpha[t] < c - ALPHA_EPS) || (y[t] < 0.0 && alpha[t] > ALPHA_EPS);
            let low = (y[t] > 0.0 && alpha[t] > ALPHA_EPS) || (y[t] < 0.0 && alpha[t] < c - ALPHA_EPS);
            let v = -y[t] * grad[t];
            if up && v > m_val {
                m_val = v;
                i_sel = Some(t);
            }
            if low && v < m_low {
                m_low = v;
                j_sel = Some(t);
            }
        }
        let (i, j) = match (i_sel, j_sel) {
            (Some(i), Some(j)) => (i, j),
            _ => break,
        };
        if m_val - m_low <= tol {
            break;
        }
        if iter >= max_iter {
            return Err(Error::ConvergenceFailure(max_iter));
        }
        iter += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = tau;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = tau;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    // bias from free support vectors, else midpoint of the violation bounds
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..n {
        if alpha[t] > ALPHA_EPS && alpha[t] < c - ALPHA_EPS {
            free_sum += -y[t] * grad[t];
            free_count += 1;
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        let mut m_val = f64::NEG_INFINITY;
        let mut m_low = f64::INFINITY;
        for t in 0..n {
            let up = (y[t] > 0.0 && alpha[t] < c - ALPHA_EPS) || (y[t] < 0.0 && alpha[t] > ALPHA_EPS);
            let low = (y[t] > 0.0 && alpha[t] > ALPHA_EPS) || (y[t] < 0.0 && alpha[t] < c - ALPHA_EPS);
            let v = -y[t] * grad[t];
            if up {
                m_val = m_val.max(v);
            }
            if low {
                m_low = m_low.min(v);
            }
        }
        0.5 * (m_val + m_low)
    };
    Ok(SmoSolution { alphas: alpha, bias })
}

/// Train a binary SVM on features with a linear or RBF kernel.
pub fn train_svm(x: &DMatrix<f64>, y: &[i32], kernel: KernelSpec, c: f64) -> Result<TrainedSvm> {
    train_svm_with(x, y, kernel, c, DEFAULT_TOL, DEFAULT_MAX_PASSES)
}

pub fn train_svm_with(
    x: &DMatrix<f64>,
    y: &[i32],
    kernel: KernelSpec,
    c: f64,
    tol: f64,
    max_iter: usize,
) -> Result<TrainedSvm> {
    if matches!(kernel, KernelSpec::Precomputed) {
        return Err(Error::InvalidParameter(
            "use train_svm_precomputed for precomputed kernels".into(),
        ));
    }
    kernel.validate()?;
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), got: y.len() });
    }
    let (signed, classes) = signed_labels(y)?;
    let n = x.nrows();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| x.row(i).iter().cloned().collect()).collect();
    let gram = DMatrix::from_fn(n, n, |i, j| kernel.eval(&rows[i], &rows[j]));
    let sol = smo_solve(&gram, &signed, c, tol, max_iter)?;

    let mut support_vectors = Vec::new();
    let mut support_indices = Vec::new();
    let mut dual_coefs = Vec::new();
    for i in 0..n {
        if sol.alphas[i] > ALPHA_EPS {
            support_vectors.push(rows[i].clone());
            support_indices.push(i);
            dual_coefs.push(sol.alphas[i] * signed[i]);
        }
    }
    let weights = if matches!(kernel, KernelSpec::Linear) {
        let d = x.ncols();
        let mut w = vec![0.0; d];
        for (sv, coef) in support_vectors.iter().zip(&dual_coefs) {
            for (wj, xj) in w.iter_mut().zip(sv) {
                *wj += coef * xj;
            }
        }
        Some(w)
    } else {
        None
    };
    Ok(TrainedSvm {
        kernel,
        support_vectors,
        support_indices,
        dual_coefs,
        bias: sol.bias,
        c,
        classes,
        weights,
    })
}

/// Train on a precomputed kernel matrix. A kernel that dips below -1e-6 in
/// its spectrum is clipped to PSD with a warning rather than rejected.
pub fn train_svm_precomputed(k: &DMatrix<f64>, y: &[i32], c: f64) -> Result<TrainedSvm> {
    let n = k.nrows();
    if n != k.ncols() || n != y.len() {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    let (signed, classes) = signed_labels(y)?;
    let sym = (k + k.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let gram = if min_eig < -1e-6 {
        eprintln!(
            "warning: precomputed kernel has min eigenvalue {min_eig:.3e}; clipping spectrum at 0"
        );
        let clipped = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0)));
        &eig.eigenvectors * clipped * eig.eigenvectors.transpose()
    } else {
        sym
    };
    let sol = smo_solve(&gram, &signed, c, DEFAULT_TOL, DEFAULT_MAX_PASSES)?;
    let mut support_indices = Vec::new();
    let mut dual_coefs = Vec::new();
    for i in 0..n {
        if sol.alphas[i] > ALPHA_EPS {
            support_indices.push(i);
            dual_coefs.push(sol.alphas[i] * signed[i]);
        }
    }
    Ok(TrainedSvm {
        kernel: KernelSpec::Precomputed,
        support_vectors: Vec::new(),
        support_indices,
        dual_coefs,
        bias: sol.bias,
        c,
        classes,
        weights: None,
    })
}

/// One binary model per class (class vs rest); prediction is the argmax of
/// the decision values, ties resolved toward the lowest class id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MulticlassSvm {
    pub models: Vec<(i32, TrainedSvm)>,
}

pub fn one_vs_rest(x: &DMatrix<f64>, y: &[i32], kernel: KernelSpec, c: f64) -> Result<MulticlassSvm> {
    let classes: Vec<i32> = {
        let set: std::collections::BTreeSet<i32> = y.iter().copied().collect();
        set.into_iter().collect()
    };
    if classes.len() < 2 {
        return Err(Error::SingleClass(classes.first().copied().unwrap_or(0)));
    }
    let mut models = Vec::new();
    for &cls in &classes {
        let count = y.iter().filter(|&&l| l == cls).count();
        if count == 0 {
            return Err(Error::EmptyClass(cls));
        }
        // 1 marks "this class" so it maps to the positive side
        let binary: Vec<i32> = y.iter().map(|&l| i32::from(l == cls)).collect();
        models.push((cls, train_svm(x, &binary, kernel, c)?));
    }
    Ok(MulticlassSvm { models })
}

impl MulticlassSvm {
    pub fn predict(&self, x: &[f64]) -> Result<i32> {
        let mut best = None;
        for (cls, model) in &self.models {
            let dv = model.decision_value(x)?;
            best = match best {
                None => Some((*cls, dv)),
                Some((bc, bv)) => {
                    if dv > bv || (dv == bv && *cls < bc) {
                        Some((*cls, dv))
                    } else {
                        Some((bc, bv))
                    }
                }
            };
        }
        Ok(best.expect("at least two models").0)
    }
}
