//! Experiment harness: runs (algorithm x dataset x preprocessing) pipelines,
//! records wall time, accuracy, and the one-class pathology, fits runtime
//! scaling laws, and renders results as tables.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{AlgoOptions, Backend, Registry};
use crate::data::{prng_apply, reduce_near_hyperplane, train_test_split, Direction, PrngParams};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::qkernel::{kernel_entry, FeatureMapSpec};
use crate::rng::stream_rng;
use crate::svm::preprocess::{apply_scaler, fit_scaler, fit_pca, pca_project};
use crate::svm::{train_svm, KernelSpec};
use crate::vqc::{vqc_forward, vqc_loss, VqcParams, VqcSpec};

/// Feature scrambling step of a pipeline: linear-congruential parameters
/// plus the power-of-ten quantization scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomizeSpec {
    pub params: PrngParams,
    pub scale: u64,
}

/// One fully-specified experiment: which strategy, on which backend, with
/// which preprocessing, split, and hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub algorithm: String,
    pub backend: Backend,
    pub dataset: String,
    #[serde(default)]
    pub scale: bool,
    #[serde(default)]
    pub pca_dim: Option<usize>,
    #[serde(default)]
    pub reduce_delta: Option<f64>,
    #[serde(default)]
    pub randomize: Option<RandomizeSpec>,
    pub test_fraction: f64,
    pub state: u64,
    #[serde(default)]
    pub options: AlgoOptions,
}

impl ExperimentSpec {
    pub fn new(algorithm: &str, backend: Backend, dataset: &str) -> Self {
        ExperimentSpec {
            algorithm: algorithm.to_string(),
            backend,
            dataset: dataset.to_string(),
            scale: false,
            pca_dim: None,
            reduce_delta: None,
            randomize: None,
            test_fraction: 0.33,
            state: 42,
            options: AlgoOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.test_fraction) || self.test_fraction <= 0.0 {
            return Err(Error::BadTestFraction(self.test_fraction));
        }
        let quantum = matches!(self.algorithm.as_str(), "qsvm" | "vqc");
        if quantum && self.backend == Backend::Local {
            return Err(Error::InvalidParameter(format!(
                "{} requires a simulator backend, not local",
                self.algorithm
            )));
        }
        if !quantum && self.backend != Backend::Local {
            return Err(Error::InvalidParameter(format!(
                "{} runs on the local backend only",
                self.algorithm
            )));
        }
        Ok(())
    }

    /// Display name for report tables, e.g. "svm-linear, scaled".
    pub fn display_algorithm(&self) -> String {
        if self.scale {
            format!("{}, scaled", self.algorithm)
        } else {
            self.algorithm.clone()
        }
    }
}

/// Outcome of one experiment; everything except `wall_time_seconds` is a
/// deterministic function of the spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub wall_time_seconds: f64,
    pub accuracy_percent: f64,
    pub one_class: bool,
    pub train_size: usize,
    pub test_size: usize,
    pub predictions: Vec<i32>,
    pub truth: Vec<i32>,
}

impl ExperimentReport {
    /// Accuracy recomputed from the persisted prediction vector.
    pub fn recomputed_accuracy_percent(&self) -> f64 {
        let hits = self.predictions.iter().zip(&self.truth).filter(|(a, b)| a == b).count();
        100.0 * hits as f64 / self.truth.len().max(1) as f64
    }
}

/// Shared preprocessing prefix: optional standard scaling, optional PCA,
/// optional reduction to points near a linear-SVM hyperplane, optional
/// PRNG scrambling. Order matches the source tables (reduction before
/// randomization).
fn prepare(dataset: &Dataset, spec: &ExperimentSpec) -> Result<Dataset> {
    let mut current = dataset.clone();
    if spec.scale {
        let params = fit_scaler(&current.features)?;
        let scaled = apply_scaler(&current.features, &params)?;
        current = current.with_features(scaled, current.feature_names.clone())?;
    }
    if let Some(k) = spec.pca_dim {
        let params = fit_pca(&current.features, k)?;
        let projected = pca_project(&current.features, &params)?;
        let names = (0..k).map(|i| format!("pc{i}")).collect();
        current = current.with_features(projected, names)?;
    }
    if let Some(delta) = spec.reduce_delta {
        let linear = train_svm(&current.features, &current.labels, KernelSpec::Linear, 1.0)?;
        let (reduced, _, _) = reduce_near_hyperplane(&current, &linear, delta)?;
        current = reduced;
    }
    if let Some(r) = &spec.randomize {
        current = prng_apply(&current, &r.params, Direction::Forward, r.scale)?;
    }
    Ok(current)
}

fn run_on_split(
    registry: &Registry,
    train: &Dataset,
    test: &Dataset,
    spec: &ExperimentSpec,
) -> Result<ExperimentReport> {
    let classifier = registry.get(&spec.algorithm)?;
    let start = Instant::now();
    let model = classifier.train(train, spec.backend, &spec.options)?;
    let predictions = model.predict_batch(&test.features)?;
    let wall_time_seconds = start.elapsed().as_secs_f64();
    let hits = predictions.iter().zip(&test.labels).filter(|(a, b)| a == b).count();
    let distinct: std::collections::BTreeSet<i32> = predictions.iter().copied().collect();
    Ok(ExperimentReport {
        spec: spec.clone(),
        wall_time_seconds,
        accuracy_percent: 100.0 * hits as f64 / test.n() as f64,
        one_class: distinct.len() == 1,
        train_size: train.n(),
        test_size: test.n(),
        predictions,
        truth: test.labels.clone(),
    })
}

/// Full pipeline on a single dataset: preprocess, split by `spec.state`,
/// train, predict. Wall time covers training and prediction only.
pub fn run_experiment(
    registry: &Registry,
    dataset: &Dataset,
    spec: &ExperimentSpec,
) -> Result<ExperimentReport> {
    spec.validate()?;
    let prepared = prepare(dataset, spec)?;
    let (train, test) = train_test_split(&prepared, spec.test_fraction, spec.state)?;
    run_on_split(registry, &train, &test, spec)
}

/// Train on one dataset and evaluate on another (e.g. labels from a later
/// date). Scaling and PCA are fit on the training set and applied to the
/// test set; reduction applies to the training set only; scrambling applies
/// to both with identical parameters.
pub fn run_experiment_cross(
    registry: &Registry,
    train_ds: &Dataset,
    test_ds: &Dataset,
    spec: &ExperimentSpec,
) -> Result<ExperimentReport> {
    spec.validate()?;
    if train_ds.dim() != test_ds.dim() {
        return Err(Error::DimensionMismatch { expected: train_ds.dim(), got: test_ds.dim() });
    }
    let mut train = train_ds.clone();
    let mut test = test_ds.clone();
    if spec.scale {
        let params = fit_scaler(&train.features)?;
        train = train.with_features(apply_scaler(&train.features, &params)?, train.feature_names.clone())?;
        test = test.with_features(apply_scaler(&test.features, &params)?, test.feature_names.clone())?;
    }
    if let Some(k) = spec.pca_dim {
        let params = fit_pca(&train.features, k)?;
        let names: Vec<String> = (0..k).map(|i| format!("pc{i}")).collect();
        train = train.with_features(pca_project(&train.features, &params)?, names.clone())?;
        test = test.with_features(pca_project(&test.features, &params)?, names)?;
    }
    if let Some(delta) = spec.reduce_delta {
        let linear = train_svm(&train.features, &train.labels, KernelSpec::Linear, 1.0)?;
        let (reduced, _, _) = reduce_near_hyperplane(&train, &linear, delta)?;
        train = reduced;
    }
    if let Some(r) = &spec.randomize {
        train = prng_apply(&train, &r.params, Direction::Forward, r.scale)?;
        test = prng_apply(&test, &r.params, Direction::Forward, r.scale)?;
    }
    run_on_split(registry, &train, &test, spec)
}

/// One run per (state, fraction) combination, to expose partition
/// sensitivity. Defaults mirror the documented pairs: states {42, 12},
/// fractions {0.33, 0.30}.
pub fn volatility_matrix(
    registry: &Registry,
    dataset: &Dataset,
    base: &ExperimentSpec,
    states: &[u64],
    fractions: &[f64],
) -> Result<Vec<ExperimentReport>> {
    let mut reports = Vec::with_capacity(states.len() * fractions.len());
    for &state in states {
        for &fraction in fractions {
            let mut spec = base.clone();
            spec.state = state;
            spec.test_fraction = fraction;
            reports.push(run_experiment(registry, dataset, &spec)?);
        }
    }
    Ok(reports)
}

pub const VOLATILITY_STATES: [u64; 2] = [42, 12];
pub const VOLATILITY_FRACTIONS: [f64; 2] = [0.33, 0.30];

// ---------------------------------------------------------------------------
// Scaling-law fits

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    PowerLaw,
    ExponentialPlusLinear,
    PureExponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityFit {
    pub xs: Vec<f64>,
    pub times: Vec<f64>,
    pub model: FitModel,
    /// Power-law exponent p, or exponential growth base beta.
    pub exponent: f64,
    /// Remaining fitted coefficients: power law (c in log t = p log n + c);
    /// exponential-plus-linear (alpha, gamma, delta0).
    pub coefficients: Vec<f64>,
    /// Sum of squared residuals in the fitted space.
    pub residual: f64,
}

fn check_xs(xs: &[f64], times: &[f64], need: usize, what: &'static str) -> Result<()> {
    if xs.len() != times.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: times.len() });
    }
    if xs.len() < need {
        return Err(Error::TooFewPoints { need, got: xs.len(), what });
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("sizes must be strictly increasing".into()));
    }
    Ok(())
}

/// Ordinary least squares on log t = p log n + c.
pub fn fit_power_law(xs: &[f64], times: &[f64]) -> Result<ComplexityFit> {
    check_xs(xs, times, 3, "power-law fit")?;
    if xs.iter().chain(times).any(|&v| v <= 0.0) {
        return Err(Error::InvalidParameter("power-law fit needs positive sizes and times".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let lt: Vec<f64> = times.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let mt = lt.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxt: f64 = lx.iter().zip(&lt).map(|(a, b)| (a - mx) * (b - mt)).sum();
    let p = sxt / sxx;
    let c = mt - p * mx;
    let residual: f64 = lx.iter().zip(&lt).map(|(x, t)| (t - (p * x + c)).powi(2)).sum();
    Ok(ComplexityFit {
        xs: xs.to_vec(),
        times: times.to_vec(),
        model: FitModel::PowerLaw,
        exponent: p,
        coefficients: vec![c],
        residual,
    })
}

/// Linear least squares for (alpha, gamma, delta0) in
/// t = alpha * beta^d + gamma * d + delta0 at a fixed beta.
fn lls_at_beta(xs: &[f64], times: &[f64], beta: f64) -> (Vec<f64>, f64) {
    let n = xs.len();
    let a = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => beta.powf(xs[i]),
        1 => xs[i],
        _ => 1.0,
    });
    let t = DMatrix::from_fn(n, 1, |i, _| times[i]);
    let svd = a.clone().svd(true, true);
    let coef = svd.solve(&t, 1e-12).expect("SVD solve");
    let fitted = a * &coef;
    let residual: f64 = (0..n).map(|i| (times[i] - fitted[(i, 0)]).powi(2)).sum();
    (vec![coef[(0, 0)], coef[(1, 0)], coef[(2, 0)]], residual)
}

/// Fits t(d) = alpha * beta^d + gamma * d + delta0, scanning beta in (1, 4]
/// by golden-section search with linear least squares for the remaining
/// coefficients at each beta. Also returns the pure-exponential fit
/// (log t = d log beta + log alpha).
pub fn fit_exponential(xs: &[f64], times: &[f64]) -> Result<(ComplexityFit, ComplexityFit)> {
    check_xs(xs, times, 4, "exponential fit")?;
    let spread = times.iter().cloned().fold(f64::MIN, f64::max)
        - times.iter().cloned().fold(f64::MAX, f64::min);
    if spread == 0.0 {
        return Err(Error::InvalidParameter("times are constant; nothing to fit".into()));
    }

    // golden-section minimization of the residual over beta
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (1.000_001f64, 4.0f64);
    let mut b1 = hi - phi * (hi - lo);
    let mut b2 = lo + phi * (hi - lo);
    let mut r1 = lls_at_beta(xs, times, b1).1;
    let mut r2 = lls_at_beta(xs, times, b2).1;
    for _ in 0..200 {
        if r1 < r2 {
            hi = b2;
            b2 = b1;
            r2 = r1;
            b1 = hi - phi * (hi - lo);
            r1 = lls_at_beta(xs, times, b1).1;
        } else {
            lo = b1;
            b1 = b2;
            r1 = r2;
            b2 = lo + phi * (hi - lo);
            r2 = lls_at_beta(xs, times, b2).1;
        }
    }
    let beta = (lo + hi) / 2.0;
    let (coefficients, residual) = lls_at_beta(xs, times, beta);
    let combined = ComplexityFit {
        xs: xs.to_vec(),
        times: times.to_vec(),
        model: FitModel::ExponentialPlusLinear,
        exponent: beta,
        coefficients,
        residual,
    };

    // pure exponential via OLS in log space (requires positive times)
    let pure = if times.iter().all(|&t| t > 0.0) {
        let lt: Vec<f64> = times.iter().map(|v| v.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let mt = lt.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|v| (v - mx) * (v - mx)).sum();
        let sxt: f64 = xs.iter().zip(&lt).map(|(a, b)| (a - mx) * (b - mt)).sum();
        let slope = sxt / sxx;
        let intercept = mt - slope * mx;
        let residual: f64 =
            xs.iter().zip(&lt).map(|(x, t)| (t - (slope * x + intercept)).powi(2)).sum();
        ComplexityFit {
            xs: xs.to_vec(),
            times: times.to_vec(),
            model: FitModel::PureExponential,
            exponent: slope.exp(),
            coefficients: vec![intercept.exp()],
            residual,
        }
    } else {
        combined.clone()
    };
    Ok((combined, pure))
}

// ---------------------------------------------------------------------------
// Timing probes

/// Median of three timed runs, in seconds.
pub fn median_time_of_3(mut f: impl FnMut()) -> f64 {
    let mut samples: Vec<f64> = (0..3)
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed().as_secs_f64()
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    samples[1]
}

fn random_features(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = stream_rng(seed, 0x7469_6d65, 0);
    DMatrix::from_fn(n, d, |_, _| rng.gen_range(-1.0..1.0))
}

/// Sequential Gram-matrix build time (all n(n+1)/2 fidelity evaluations) for
/// each training-set size; single-threaded so the quadratic pair count is
/// what the clock sees.
pub fn qsvm_kernel_build_times(ns: &[usize], d: usize, seed: u64) -> Result<Vec<f64>> {
    let spec = FeatureMapSpec::new(d)?;
    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        let x = random_features(n, d, seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|i| x.row(i).iter().cloned().collect()).collect();
        out.push(median_time_of_3(|| {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..=i {
                    acc += kernel_entry(&rows[i], &rows[j], &spec).unwrap();
                }
            }
            std::hint::black_box(acc);
        }));
    }
    Ok(out)
}

/// Cost of one optimizer iteration (a full-batch loss evaluation) for each
/// training-set size; linear in n.
pub fn vqc_iteration_times(ns: &[usize], d: usize, seed: u64) -> Result<Vec<f64>> {
    let spec = VqcSpec::new(FeatureMapSpec::new(d)?);
    let mut rng = stream_rng(seed, 0x7669_7465, 1);
    let theta: Vec<f64> = (0..spec.param_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let params = VqcParams { theta };
    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        let x = random_features(n, d, seed);
        let y: Vec<i32> = (0..n).map(|i| (i % 2) as i32).collect();
        out.push(median_time_of_3(|| {
            std::hint::black_box(vqc_loss(&params, &x, &y, &spec).unwrap());
        }));
    }
    Ok(out)
}

/// Cost of a single forward pass as the feature dimension (qubit count)
/// grows; dominated by the 2^d statevector. A single pass at small d runs in
/// well under a microsecond, so each sample times a batch of passes (after a
/// warm-up call) and reports the per-pass average.
pub fn vqc_forward_times(dims: &[usize], seed: u64) -> Result<Vec<f64>> {
    const BATCH: usize = 64;
    let mut out = Vec::with_capacity(dims.len());
    for &d in dims {
        let spec = VqcSpec::new(FeatureMapSpec::new(d)?);
        let mut rng = stream_rng(seed, 0x7666_7764, d as u64);
        let theta: Vec<f64> = (0..spec.param_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let params = VqcParams { theta };
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        std::hint::black_box(vqc_forward(&x, &params, &spec)?);
        let batch_time = median_time_of_3(|| {
            for _ in 0..BATCH {
                std::hint::black_box(vqc_forward(&x, &params, &spec).unwrap());
            }
        });
        out.push(batch_time / BATCH as f64);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Rendering

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    TextTable,
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "text" | "text-table" => Ok(ReportFormat::TextTable),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

/// Percent with two decimals, trailing zero trimmed: 75 -> "75.0",
/// 72.93 -> "72.93".
pub fn format_accuracy(percent: f64) -> String {
    let s = format!("{percent:.2}");
    match s.strip_suffix('0') {
        Some(t) if !t.ends_with('.') => t.to_string(),
        _ => s,
    }
}

pub fn render_report(reports: &[ExperimentReport], format: ReportFormat) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("no reports to render"));
    }
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(reports).map_err(Error::from),
        ReportFormat::Csv => {
            let mut out =
                String::from("algorithm,backend,time_seconds,accuracy_percent,one_class\n");
            for r in reports {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.spec.display_algorithm(),
                    r.spec.backend.name(),
                    r.wall_time_seconds.round() as i64,
                    format_accuracy(r.accuracy_percent),
                    r.one_class
                ));
            }
            Ok(out)
        }
        ReportFormat::TextTable => {
            let header = [
                "Algorithm".to_string(),
                "Backend".to_string(),
                "Time (Seconds, rounded)".to_string(),
                "Accuracy (%)".to_string(),
                "Only one Class Predicted?".to_string(),
            ];
            let rows: Vec<[String; 5]> = reports
                .iter()
                .map(|r| {
                    [
                        r.spec.display_algorithm(),
                        r.spec.backend.name().to_string(),
                        format!("{}", r.wall_time_seconds.round() as i64),
                        format_accuracy(r.accuracy_percent),
                        format!("{}", r.one_class),
                    ]
                })
                .collect();
            let mut widths = [0usize; 5];
            for col in 0..5 {
                widths[col] = std::iter::once(&header)
                    .chain(rows.iter())
                    .map(|r| r[col].len())
                    .max()
                    .unwrap();
            }
            let fmt_row = |r: &[String; 5]| {
                let cells: Vec<String> =
                    (0..5).map(|c| format!("{:<w$}", r[c], w = widths[c])).collect();
                format!("| {} |", cells.join(" | "))
            };
            let sep = format!(
                "|{}|",
                widths.iter().map(|w| "-".repeat(w + 2)).collect::<Vec<_>>().join("|")
            );
            let mut out = String::new();
            out.push_str(&fmt_row(&header));
            out.push('\n');
            out.push_str(&sep);
            out.push('\n');
            for r in &rows {
                out.push_str(&fmt_row(r));
                out.push('\n');
            }
            Ok(out)
        }
    }
}
