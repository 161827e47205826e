//! Second-order Pauli-Z evolution feature map and the fidelity kernel
//! k(x, y) = |<phi(y)|phi(x)>|^2 it induces.
//!
//! One repetition of the map on d qubits: H on every qubit, a phase
//! P(2 x_i) on qubit i, then for each adjacent pair (i, i+1) the entangling
//! block CX(i->i+1), P(2 (pi - x_i)(pi - x_j)) on qubit i+1, CX(i->i+1).
//! The default is two repetitions with linear entanglement.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qsim::{Gate, Statevector, MAX_QUBITS};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Entanglement {
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeatureMapSpec {
    /// Feature dimension = qubit count.
    pub dimension: usize,
    pub reps: usize,
    pub entanglement: Entanglement,
}

impl FeatureMapSpec {
    pub fn new(dimension: usize) -> Result<Self> {
        Self::with_reps(dimension, 2)
    }

    pub fn with_reps(dimension: usize, reps: usize) -> Result<Self> {
        if dimension == 0 || dimension > MAX_QUBITS {
            return Err(Error::QubitCountOutOfRange(dimension));
        }
        if reps == 0 {
            return Err(Error::InvalidParameter("reps must be >= 1".into()));
        }
        Ok(FeatureMapSpec {
            dimension,
            reps,
            entanglement: Entanglement::Linear,
        })
    }
}

/// Gate list for the feature map applied to `x`.
pub fn feature_map_gates(x: &[f64], spec: &FeatureMapSpec) -> Result<Vec<Gate>> {
    let d = spec.dimension;
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    let pi = std::f64::consts::PI;
    let mut gates = Vec::new();
    for _ in 0..spec.reps {
        for q in 0..d {
            gates.push(Gate::H(q));
        }
        for q in 0..d {
            gates.push(Gate::Phase(q, 2.0 * x[q]));
        }
        // pair stage is empty for d = 1
        for i in 0..d.saturating_sub(1) {
            let phi = (pi - x[i]) * (pi - x[i + 1]);
            gates.push(Gate::Cx { control: i, target: i + 1 });
            gates.push(Gate::Phase(i + 1, 2.0 * phi));
            gates.push(Gate::Cx { control: i, target: i + 1 });
        }
    }
    Ok(gates)
}

/// Encode a data point as a statevector via the feature map.
pub fn encode_feature_map(x: &[f64], spec: &FeatureMapSpec) -> Result<Statevector> {
    let gates = feature_map_gates(x, spec)?;
    let mut state = Statevector::zero(spec.dimension)?;
    state.apply_all(&gates)?;
    Ok(state)
}

/// Exact kernel entry |<phi(y)|phi(x)>|^2.
pub fn kernel_entry(x: &[f64], y: &[f64], spec: &FeatureMapSpec) -> Result<f64> {
    let sx = encode_feature_map(x, spec)?;
    let sy = encode_feature_map(y, spec)?;
    Ok(sy.inner_product(&sx)?.norm_sqr().min(1.0))
}

/// Shot-based kernel entry: the fraction of successes in `shots` Bernoulli
/// draws at the exact fidelity, emulating zero-count estimation on a sampling
/// backend.
pub fn kernel_entry_shots(
    x: &[f64],
    y: &[f64],
    spec: &FeatureMapSpec,
    shots: u64,
    seed: u64,
) -> Result<f64> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let p = kernel_entry(x, y, spec)?;
    let mut rng = stream_rng(seed, 0x6b65, 0);
    let mut hits = 0u64;
    for _ in 0..shots {
        if rng.gen::<f64>() < p {
            hits += 1;
        }
    }
    Ok(hits as f64 / shots as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelMode {
    Exact,
    Shots { shots: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub entries: DMatrix<f64>,
}

impl KernelMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Row-major CSV with header `n=<n>`.
    pub fn to_csv_string(&self) -> String {
        let n = self.n();
        let mut s = format!("n={n}\n");
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| format!("{}", self.entries[(i, j)])).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.entries + self.entries.transpose()) * 0.5;
        sym.symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Gram matrix of the feature map over the rows of `x`.
///
/// Entries are computed for i <= j and mirrored; in exact mode the diagonal
/// is forced to exactly 1 so rounding never trips downstream PSD checks.
/// Pair (i, j) in shot mode draws from an RNG stream keyed by (seed, i, j),
/// so the result is independent of evaluation order.
pub fn kernel_matrix(x: &DMatrix<f64>, spec: &FeatureMapSpec, mode: KernelMode) -> Result<KernelMatrix> {
    let n = x.nrows();
    if n == 0 {
        return Err(Error::EmptyInput("kernel matrix input"));
    }
    if x.ncols() != spec.dimension {
        return Err(Error::DimensionMismatch {
            expected: spec.dimension,
            got: x.ncols(),
        });
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|i| x.row(i).iter().cloned().collect()).collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let vals: Vec<((usize, usize), f64)> = pairs
        .into_par_iter()
        .map(|(i, j)| {
            let v = match mode {
                KernelMode::Exact => {
                    if i == j {
                        Ok(1.0)
                    } else {
                        kernel_entry(&rows[i], &rows[j], spec)
                    }
                }
                KernelMode::Shots { shots, seed } => kernel_entry_shots(
                    &rows[i],
                    &rows[j],
                    spec,
                    shots,
                    crate::rng::derive_seed(seed, i as u64, j as u64),
                ),
            };
            v.map(|v| ((i, j), v))
        })
        .collect::<Result<_>>()?;
    let mut entries = DMatrix::zeros(n, n);
    for ((i, j), v) in vals {
        entries[(i, j)] = v;
        entries[(j, i)] = v;
    }
    Ok(KernelMatrix { entries })
}

/// Kernel rows between test points and training points, for prediction with
/// a precomputed-kernel model: out[(i, j)] = k(test_i, train_j).
pub fn kernel_rows(
    test: &DMatrix<f64>,
    train: &DMatrix<f64>,
    spec: &FeatureMapSpec,
    mode: KernelMode,
) -> Result<DMatrix<f64>> {
    if test.ncols() != spec.dimension || train.ncols() != spec.dimension {
        return Err(Error::DimensionMismatch {
            expected: spec.dimension,
            got: test.ncols().max(train.ncols()),
        });
    }
    let trows: Vec<Vec<f64>> = (0..test.nrows()).map(|i| test.row(i).iter().cloned().collect()).collect();
    let rrows: Vec<Vec<f64>> = (0..train.nrows()).map(|i| train.row(i).iter().cloned().collect()).collect();
    let vals: Vec<Vec<f64>> = trows
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            rrows
                .iter()
                .enumerate()
                .map(|(j, r)| match mode {
                    KernelMode::Exact => kernel_entry(t, r, spec),
                    KernelMode::Shots { shots, seed } => kernel_entry_shots(
                        t,
                        r,
                        spec,
                        shots,
                        crate::rng::derive_seed(seed, 0x1000_0000 + i as u64, j as u64),
                    ),
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(test.nrows(), train.nrows(), |i, j| vals[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn zero_angle_single_qubit() {
        let spec = FeatureMapSpec::with_reps(1, 1).unwrap();
        let s = encode_feature_map(&[0.0], &spec).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(s.amplitudes()[1].re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn pi_input_kills_entangler() {
        // x = (pi, pi): the pair angle (pi-x0)(pi-x1) vanishes and P(2*pi)
        // is the identity, so each rep reduces to H on every qubit. One rep
        // gives the uniform state; two reps undo it back to |00>.
        let one_rep = FeatureMapSpec::with_reps(2, 1).unwrap();
        let s = encode_feature_map(&[PI, PI], &one_rep).unwrap();
        for p in s.probabilities() {
            assert_abs_diff_eq!(p, 0.25, epsilon = 1e-10);
        }
        let two_reps = FeatureMapSpec::new(2).unwrap();
        let s = encode_feature_map(&[PI, PI], &two_reps).unwrap();
        assert_abs_diff_eq!(s.probabilities()[0], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn self_overlap_is_one() {
        let spec = FeatureMapSpec::new(2).unwrap();
        assert_abs_diff_eq!(kernel_entry(&[0.3, -0.7], &[0.3, -0.7], &spec).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(kernel_entry(&[PI, PI], &[PI, PI], &spec).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let spec = FeatureMapSpec::new(2).unwrap();
        assert!(encode_feature_map(&[1.0], &spec).is_err());
        assert!(kernel_entry(&[1.0], &[1.0, 2.0], &spec).is_err());
    }

    #[test]
    fn single_point_matrix() {
        let spec = FeatureMapSpec::new(2).unwrap();
        let x = DMatrix::from_row_slice(1, 2, &[0.4, 0.9]);
        let k = kernel_matrix(&x, &spec, KernelMode::Exact).unwrap();
        assert_eq!(k.n(), 1);
        assert_abs_diff_eq!(k.entries[(0, 0)], 1.0);
    }

    #[test]
    fn matrix_entries_match_pairwise_calls() {
        let spec = FeatureMapSpec::new(2).unwrap();
        let mut rng = stream_rng(11, 0, 0);
        let x = DMatrix::from_fn(5, 2, |_, _| rng.gen_range(-1.0..1.0));
        let k = kernel_matrix(&x, &spec, KernelMode::Exact).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let xi: Vec<f64> = x.row(i).iter().cloned().collect();
                let xj: Vec<f64> = x.row(j).iter().cloned().collect();
                let fresh = kernel_entry(&xi, &xj, &spec).unwrap();
                let expect = if i == j { 1.0 } else { fresh };
                assert_abs_diff_eq!(k.entries[(i, j)], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gram_matrix_properties() {
        for d in 1..=3usize {
            let spec = FeatureMapSpec::new(d).unwrap();
            let mut rng = stream_rng(42, d as u64, 0);
            let x = DMatrix::from_fn(12, d, |_, _| rng.gen_range(-1.0..1.0));
            let k = kernel_matrix(&x, &spec, KernelMode::Exact).unwrap();
            for i in 0..12 {
                assert_abs_diff_eq!(k.entries[(i, i)], 1.0, epsilon = 1e-10);
                for j in 0..12 {
                    assert_abs_diff_eq!(k.entries[(i, j)], k.entries[(j, i)], epsilon = 1e-10);
                    assert!(k.entries[(i, j)] >= -1e-12 && k.entries[(i, j)] <= 1.0 + 1e-12);
                }
            }
            assert!(k.min_eigenvalue() >= -1e-8, "d={d} min eig {}", k.min_eigenvalue());
        }
    }

    #[test]
    fn shot_mode_converges_and_is_deterministic() {
        let spec = FeatureMapSpec::new(2).unwrap();
        let x = [0.3, -0.7];
        let y = [1.1, 0.2];
        let exact = kernel_entry(&x, &y, &spec).unwrap();
        let a = kernel_entry_shots(&x, &y, &spec, 100_000, 3).unwrap();
        let b = kernel_entry_shots(&x, &y, &spec, 100_000, 3).unwrap();
        assert_eq!(a, b);
        let err = (a - exact).abs();
        if err > 0.02 {
            // statistical bound; flag rather than hard-fail
            eprintln!("warning: shot-mode deviation {err} exceeds 0.02");
        }
        assert!(err < 0.05);
    }

    #[test]
    fn csv_header_carries_n() {
        let spec = FeatureMapSpec::new(1).unwrap();
        let x = DMatrix::from_row_slice(2, 1, &[0.1, 0.8]);
        let k = kernel_matrix(&x, &spec, KernelMode::Exact).unwrap();
        let csv = k.to_csv_string();
        assert!(csv.starts_with("n=2\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
