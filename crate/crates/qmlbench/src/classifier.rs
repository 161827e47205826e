//! Interchangeable classification strategies behind a common trait: classical
//! kernel SVMs (linear, RBF), the quantum-kernel SVM, and the variational
//! quantum classifier. Strategies register by name and are selected from
//! config or CLI flags.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::qkernel::{kernel_matrix, kernel_rows, FeatureMapSpec, KernelMode};
use crate::rng::stream_rng;
use crate::svm::{
    default_rbf_gamma, one_vs_rest, train_svm, train_svm_precomputed, KernelSpec, MulticlassSvm,
    TrainedSvm,
};
use crate::vqc::{train_vqc_with, vqc_forward, SpsaConfig, VqcParams, VqcSpec};

/// Execution backend. Classical SVMs run `local`; quantum models run on the
/// statevector simulator, either with exact amplitudes (`exact-sim`) or with
/// sampled readout (`shot-sim`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Local,
    ExactSim,
    ShotSim,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Local => "local",
            Backend::ExactSim => "exact-sim",
            Backend::ShotSim => "shot-sim",
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "local" => Ok(Backend::Local),
            "exact-sim" => Ok(Backend::ExactSim),
            "shot-sim" => Ok(Backend::ShotSim),
            other => Err(format!("unknown backend {other:?}")),
        }
    }
}

/// Hyperparameters shared across strategies; each strategy reads the subset
/// it understands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoOptions {
    /// SVM box constraint.
    pub c: f64,
    /// RBF width; `None` means 1 / (d * Var(X)).
    pub gamma: Option<f64>,
    /// Feature-map repetitions for quantum models.
    pub reps: usize,
    /// Shots per kernel entry / readout on the sampling backend.
    pub shots: u64,
    /// Seed for shot noise and variational initialization.
    pub seed: u64,
    /// Variational ansatz depth.
    pub ansatz_depth: usize,
    /// SPSA iteration budget.
    pub max_iterations: usize,
    /// Feature range quantum encoders rescale into.
    pub encode_range: (f64, f64),
    /// Largest feature dimension the quantum-kernel SVM accepts.
    pub qsvm_dim_limit: usize,
}

impl Default for AlgoOptions {
    fn default() -> Self {
        AlgoOptions {
            c: 1.0,
            gamma: None,
            reps: 2,
            shots: 1024,
            seed: 0,
            ansatz_depth: 3,
            max_iterations: 200,
            encode_range: (-1.0, 1.0),
            qsvm_dim_limit: 3,
        }
    }
}

/// Per-column min-max rescaling into a fixed range, fit on training data.
/// Constant columns map to the range midpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxEncoder {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub range: (f64, f64),
}

impl MinMaxEncoder {
    pub fn fit(x: &DMatrix<f64>, range: (f64, f64)) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::EmptyInput("min-max encoder needs data"));
        }
        if range.1 <= range.0 {
            return Err(Error::InvalidParameter(format!(
                "encode range ({}, {}) must be increasing",
                range.0, range.1
            )));
        }
        let mins = (0..x.ncols()).map(|j| x.column(j).min()).collect();
        let maxs = (0..x.ncols()).map(|j| x.column(j).max()).collect();
        Ok(MinMaxEncoder { mins, maxs, range })
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.mins.len() {
            return Err(Error::DimensionMismatch { expected: self.mins.len(), got: x.ncols() });
        }
        let (lo, hi) = self.range;
        let mid = (lo + hi) / 2.0;
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            let span = self.maxs[j] - self.mins[j];
            if span == 0.0 {
                mid
            } else {
                lo + (x[(i, j)] - self.mins[j]) / span * (hi - lo)
            }
        }))
    }
}

/// A fitted model able to label unseen feature rows.
pub trait TrainedModel {
    fn algorithm(&self) -> &'static str;
    fn predict_batch(&self, x: &DMatrix<f64>) -> Result<Vec<i32>>;
}

/// A trainable classification strategy, selected by name from the registry.
pub trait Classifier {
    fn name(&self) -> &'static str;
    fn train(
        &self,
        train: &Dataset,
        backend: Backend,
        opts: &AlgoOptions,
    ) -> Result<Box<dyn TrainedModel>>;
}

fn require_local(name: &str, backend: Backend) -> Result<()> {
    if backend != Backend::Local {
        return Err(Error::InvalidParameter(format!(
            "{name} runs only on the local backend, got {}",
            backend.name()
        )));
    }
    Ok(())
}

fn require_simulator(name: &str, backend: Backend) -> Result<()> {
    if backend == Backend::Local {
        return Err(Error::InvalidParameter(format!(
            "{name} needs a simulator backend (exact-sim or shot-sim), not local"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Classical SVMs

enum SvmModel {
    Binary(TrainedSvm),
    Multi(MulticlassSvm),
}

struct FittedSvm {
    name: &'static str,
    model: SvmModel,
}

impl TrainedModel for FittedSvm {
    fn algorithm(&self) -> &'static str {
        self.name
    }

    fn predict_batch(&self, x: &DMatrix<f64>) -> Result<Vec<i32>> {
        (0..x.nrows())
            .map(|i| {
                let row: Vec<f64> = x.row(i).iter().cloned().collect();
                match &self.model {
                    SvmModel::Binary(m) => m.predict(&row).map(|(label, _)| label),
                    SvmModel::Multi(m) => m.predict(&row),
                }
            })
            .collect()
    }
}

struct SvmStrategy {
    name: &'static str,
    linear: bool,
}

impl Classifier for SvmStrategy {
    fn name(&self) -> &'static str {
        self.name
    }

    fn train(
        &self,
        train: &Dataset,
        backend: Backend,
        opts: &AlgoOptions,
    ) -> Result<Box<dyn TrainedModel>> {
        require_local(self.name, backend)?;
        let kernel = if self.linear {
            KernelSpec::Linear
        } else {
            KernelSpec::Rbf { gamma: opts.gamma.unwrap_or_else(|| default_rbf_gamma(&train.features)) }
        };
        let model = if train.classes().len() == 2 {
            SvmModel::Binary(train_svm(&train.features, &train.labels, kernel, opts.c)?)
        } else {
            SvmModel::Multi(one_vs_rest(&train.features, &train.labels, kernel, opts.c)?)
        };
        Ok(Box::new(FittedSvm { name: self.name, model }))
    }
}

// ---------------------------------------------------------------------------
// Quantum-kernel SVM

struct FittedQsvm {
    encoder: MinMaxEncoder,
    train_encoded: DMatrix<f64>,
    spec: FeatureMapSpec,
    mode: KernelMode,
    /// One (class, binary model) pair per class; a single pair for binary
    /// problems, a one-vs-rest family otherwise.
    models: Vec<(i32, TrainedSvm)>,
    binary: bool,
}

impl TrainedModel for FittedQsvm {
    fn algorithm(&self) -> &'static str {
        "qsvm"
    }

    fn predict_batch(&self, x: &DMatrix<f64>) -> Result<Vec<i32>> {
        let encoded = self.encoder.apply(x)?;
        let rows = kernel_rows(&encoded, &self.train_encoded, &self.spec, self.mode)?;
        (0..rows.nrows())
            .map(|i| {
                let row: Vec<f64> = rows.row(i).iter().cloned().collect();
                if self.binary {
                    let (_, model) = &self.models[0];
                    let dv = model.decision_value_precomputed(&row)?;
                    Ok(model.label_for(dv))
                } else {
                    let mut best: Option<(i32, f64)> = None;
                    for (cls, model) in &self.models {
                        let dv = model.decision_value_precomputed(&row)?;
                        best = match best {
                            Some((_, b)) if dv <= b => best,
                            _ => Some((*cls, dv)),
                        };
                    }
                    Ok(best.expect("at least one class model").0)
                }
            })
            .collect()
    }
}

struct QsvmStrategy;

impl Classifier for QsvmStrategy {
    fn name(&self) -> &'static str {
        "qsvm"
    }

    fn train(
        &self,
        train: &Dataset,
        backend: Backend,
        opts: &AlgoOptions,
    ) -> Result<Box<dyn TrainedModel>> {
        require_simulator("qsvm", backend)?;
        let d = train.dim();
        if d > opts.qsvm_dim_limit {
            return Err(Error::QsvmDimensionLimit { d, limit: opts.qsvm_dim_limit });
        }
        let encoder = MinMaxEncoder::fit(&train.features, opts.encode_range)?;
        let encoded = encoder.apply(&train.features)?;
        let spec = FeatureMapSpec::with_reps(d, opts.reps)?;
        let mode = match backend {
            Backend::ShotSim => KernelMode::Shots { shots: opts.shots, seed: opts.seed },
            _ => KernelMode::Exact,
        };
        let gram = kernel_matrix(&encoded, &spec, mode)?;
        let classes = train.classes();
        let (models, binary) = if classes.len() == 2 {
            let m = train_svm_precomputed(&gram.entries, &train.labels, opts.c)?;
            (vec![(classes[1], m)], true)
        } else {
            let mut models = Vec::with_capacity(classes.len());
            for &cls in &classes {
                let binary_labels: Vec<i32> =
                    train.labels.iter().map(|&l| i32::from(l == cls)).collect();
                models.push((cls, train_svm_precomputed(&gram.entries, &binary_labels, opts.c)?));
            }
            (models, false)
        };
        Ok(Box::new(FittedQsvm { encoder, train_encoded: encoded, spec, mode, models, binary }))
    }
}

// ---------------------------------------------------------------------------
// Variational quantum classifier

struct FittedVqc {
    encoder: MinMaxEncoder,
    spec: VqcSpec,
    params: VqcParams,
    /// Original labels in ascending order: parity 0 maps to classes.0,
    /// parity 1 to classes.1.
    classes: (i32, i32),
    /// Readout shots for majority-vote prediction on the sampling backend.
    shots: Option<(u64, u64)>,
}

impl TrainedModel for FittedVqc {
    fn algorithm(&self) -> &'static str {
        "vqc"
    }

    fn predict_batch(&self, x: &DMatrix<f64>) -> Result<Vec<i32>> {
        let encoded = self.encoder.apply(x)?;
        (0..encoded.nrows())
            .map(|i| {
                let row: Vec<f64> = encoded.row(i).iter().cloned().collect();
                let (p0, p1) = vqc_forward(&row, &self.params, &self.spec)?;
                let odd = match self.shots {
                    None => p1 - p0 > 1e-12,
                    Some((shots, seed)) => {
                        let mut rng =
                            stream_rng(seed, 0x7671_6370, i as u64);
                        let hits = (0..shots).filter(|_| rng.gen::<f64>() < p1).count() as u64;
                        2 * hits > shots
                    }
                };
                Ok(if odd { self.classes.1 } else { self.classes.0 })
            })
            .collect()
    }
}

struct VqcStrategy;

impl Classifier for VqcStrategy {
    fn name(&self) -> &'static str {
        "vqc"
    }

    fn train(
        &self,
        train: &Dataset,
        backend: Backend,
        opts: &AlgoOptions,
    ) -> Result<Box<dyn TrainedModel>> {
        require_simulator("vqc", backend)?;
        let classes = train.classes();
        match classes.len() {
            0 | 1 => return Err(Error::SingleClass(classes.first().copied().unwrap_or(0))),
            2 => {}
            k => return Err(Error::NotBinary(k)),
        }
        let encoder = MinMaxEncoder::fit(&train.features, opts.encode_range)?;
        let encoded = encoder.apply(&train.features)?;
        let parity_labels: Vec<i32> =
            train.labels.iter().map(|&l| i32::from(l == classes[1])).collect();
        let feature_map = FeatureMapSpec::with_reps(train.dim(), opts.reps)?;
        let mut spec = VqcSpec::new(feature_map);
        spec.ansatz_depth = opts.ansatz_depth;
        spec.max_iterations = opts.max_iterations;
        let params =
            train_vqc_with(&encoded, &parity_labels, &spec, opts.seed, SpsaConfig::default())?;
        let shots = match backend {
            Backend::ShotSim => Some((opts.shots, opts.seed)),
            _ => None,
        };
        Ok(Box::new(FittedVqc {
            encoder,
            spec,
            params,
            classes: (classes[0], classes[1]),
            shots,
        }))
    }
}

// ---------------------------------------------------------------------------
// Registry

/// Name-indexed collection of strategies; lookup failures list what exists.
pub struct Registry {
    entries: BTreeMap<&'static str, Box<dyn Classifier + Send + Sync>>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry { entries: BTreeMap::new() }
    }

    /// All four built-in strategies.
    pub fn with_defaults() -> Self {
        let mut r = Registry::empty();
        r.register(Box::new(SvmStrategy { name: "svm-linear", linear: true }));
        r.register(Box::new(SvmStrategy { name: "svm-rbf", linear: false }));
        r.register(Box::new(QsvmStrategy));
        r.register(Box::new(VqcStrategy));
        r
    }

    pub fn register(&mut self, classifier: Box<dyn Classifier + Send + Sync>) {
        self.entries.insert(classifier.name(), classifier);
    }

    pub fn get(&self, name: &str) -> Result<&(dyn Classifier + Send + Sync)> {
        self.entries
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownAlgorithm(name.to_string(), self.names()))
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().map(|k| k.to_string()).collect()
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::with_defaults()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_adhoc, train_test_split, AdhocShape};

    fn accuracy(pred: &[i32], truth: &[i32]) -> f64 {
        let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
        hits as f64 / truth.len() as f64
    }

    #[test]
    fn registry_lists_all_strategies() {
        let r = Registry::with_defaults();
        assert_eq!(r.names(), vec!["qsvm", "svm-linear", "svm-rbf", "vqc"]);
        assert!(r.get("svm-linear").is_ok());
        assert!(matches!(r.get("nope"), Err(Error::UnknownAlgorithm(_, _))));
    }

    #[test]
    fn backend_constraints_enforced() {
        let r = Registry::with_defaults();
        let ds = gen_adhoc(AdhocShape::Separable, 0).unwrap();
        let opts = AlgoOptions::default();
        assert!(r.get("svm-linear").unwrap().train(&ds, Backend::ExactSim, &opts).is_err());
        assert!(r.get("qsvm").unwrap().train(&ds, Backend::Local, &opts).is_err());
        assert!(r.get("vqc").unwrap().train(&ds, Backend::Local, &opts).is_err());
    }

    #[test]
    fn linear_svm_separates_the_separable_grid() {
        let r = Registry::with_defaults();
        let ds = gen_adhoc(AdhocShape::Separable, 0).unwrap();
        let (train, test) = train_test_split(&ds, 0.33, 42).unwrap();
        let model = r
            .get("svm-linear")
            .unwrap()
            .train(&train, Backend::Local, &AlgoOptions::default())
            .unwrap();
        let pred = model.predict_batch(&test.features).unwrap();
        assert_eq!(accuracy(&pred, &test.labels), 1.0);
    }

    #[test]
    fn qsvm_respects_dimension_limit() {
        let r = Registry::with_defaults();
        let ds = crate::dataset::Dataset::from_rows(
            "wide",
            vec![vec![0.0; 4], vec![1.0; 4]],
            vec![0, 1],
        )
        .unwrap();
        assert!(matches!(
            r.get("qsvm").unwrap().train(&ds, Backend::ExactSim, &AlgoOptions::default()),
            Err(Error::QsvmDimensionLimit { d: 4, limit: 3 })
        ));
    }

    #[test]
    fn qsvm_runs_on_a_small_separable_subset() {
        // The fidelity kernel is a poor match for this geometry (the source
        // tables report near-chance accuracy on the separable grid), so this
        // checks mechanics, not accuracy: valid labels, both classes seen in
        // training, deterministic output.
        let r = Registry::with_defaults();
        let ds = gen_adhoc(AdhocShape::Separable, 0).unwrap();
        // every 8th point keeps this cheap: 50 points
        let idx: Vec<usize> = (0..ds.n()).step_by(8).collect();
        let small = ds.subset(&idx);
        let (train, test) = train_test_split(&small, 0.33, 42).unwrap();
        let qsvm = r.get("qsvm").unwrap();
        let model = qsvm.train(&train, Backend::ExactSim, &AlgoOptions::default()).unwrap();
        let pred = model.predict_batch(&test.features).unwrap();
        assert_eq!(pred.len(), test.n());
        assert!(pred.iter().all(|l| *l == 0 || *l == 1));
        let again = qsvm.train(&train, Backend::ExactSim, &AlgoOptions::default()).unwrap();
        assert_eq!(pred, again.predict_batch(&test.features).unwrap());
    }

    #[test]
    fn qsvm_shot_backend_is_deterministic() {
        let r = Registry::with_defaults();
        let ds = gen_adhoc(AdhocShape::Separable, 0).unwrap();
        let idx: Vec<usize> = (0..ds.n()).step_by(16).collect();
        let small = ds.subset(&idx);
        let (train, test) = train_test_split(&small, 0.33, 42).unwrap();
        let opts = AlgoOptions { shots: 256, seed: 9, ..AlgoOptions::default() };
        let qsvm = r.get("qsvm").unwrap();
        let a = qsvm.train(&train, Backend::ShotSim, &opts).unwrap();
        let b = qsvm.train(&train, Backend::ShotSim, &opts).unwrap();
        assert_eq!(
            a.predict_batch(&test.features).unwrap(),
            b.predict_batch(&test.features).unwrap()
        );
    }

    #[test]
    fn vqc_rejects_multiclass() {
        let r = Registry::with_defaults();
        let ds = crate::dataset::Dataset::from_rows(
            "three",
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![0, 1, 2, 0],
        )
        .unwrap();
        assert!(matches!(
            r.get("vqc").unwrap().train(&ds, Backend::ExactSim, &AlgoOptions::default()),
            Err(Error::NotBinary(3))
        ));
    }

    #[test]
    fn vqc_trains_and_predicts_valid_labels() {
        let r = Registry::with_defaults();
        let ds = gen_adhoc(AdhocShape::Separable, 0).unwrap();
        let idx: Vec<usize> = (0..ds.n()).step_by(16).collect();
        let small = ds.subset(&idx);
        let (train, test) = train_test_split(&small, 0.33, 42).unwrap();
        let opts = AlgoOptions { max_iterations: 40, seed: 7, ..AlgoOptions::default() };
        let model = r.get("vqc").unwrap().train(&train, Backend::ExactSim, &opts).unwrap();
        let pred = model.predict_batch(&test.features).unwrap();
        assert_eq!(pred.len(), test.n());
        assert!(pred.iter().all(|l| *l == 0 || *l == 1));
    }

    #[test]
    fn minmax_encoder_maps_train_extremes_to_range() {
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 10.0, 5.0, 20.0, 10.0, 30.0]);
        let enc = MinMaxEncoder::fit(&x, (-1.0, 1.0)).unwrap();
        let y = enc.apply(&x).unwrap();
        assert_eq!(y[(0, 0)], -1.0);
        assert_eq!(y[(2, 0)], 1.0);
        assert_eq!(y[(1, 1)], 0.0);
        // constant column maps to the midpoint
        let xc = DMatrix::from_row_slice(2, 1, &[4.0, 4.0]);
        let encc = MinMaxEncoder::fit(&xc, (-1.0, 1.0)).unwrap();
        assert_eq!(encc.apply(&xc).unwrap()[(0, 0)], 0.0);
    }
}
