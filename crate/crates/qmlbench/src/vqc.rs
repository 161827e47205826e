//! Variational quantum classifier: feature-map encoding, an RY + linear-CX
//! ansatz, bit-parity readout, and SPSA training.
//!
//! The ansatz is `ansatz_depth` blocks of [RY(theta) on every qubit, then
//! CX(i -> i+1) down the line] followed by one final RY layer, so the
//! parameter count is d * (ansatz_depth + 1). Class probability p1 is the
//! total probability of basis states with odd bit-parity.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qkernel::{feature_map_gates, FeatureMapSpec};
use crate::qsim::{Gate, Statevector};
use crate::rng::stream_rng;

const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VqcSpec {
    pub feature_map: FeatureMapSpec,
    pub ansatz_depth: usize,
    pub max_iterations: usize,
}

impl VqcSpec {
    pub fn new(feature_map: FeatureMapSpec) -> Self {
        VqcSpec {
            feature_map,
            ansatz_depth: 3,
            max_iterations: 200,
        }
    }

    pub fn dimension(&self) -> usize {
        self.feature_map.dimension
    }

    pub fn param_count(&self) -> usize {
        self.dimension() * (self.ansatz_depth + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqcParams {
    pub theta: Vec<f64>,
}

/// Trained parameters together with their spec, as serialized to JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedVqc {
    pub spec: VqcSpec,
    pub theta: Vec<f64>,
}

/// SPSA gain schedule: a_k = a/(k+1+A)^0.602, c_k = c/(k+1)^0.101.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpsaConfig {
    pub a: f64,
    pub c: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Stability constant A; defaults to 0.1 * max_iterations.
    pub stability: Option<f64>,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        SpsaConfig {
            a: 0.3,
            c: 0.1,
            alpha: 0.602,
            gamma: 0.101,
            stability: None,
        }
    }
}

fn check_params(params: &VqcParams, spec: &VqcSpec) -> Result<()> {
    if params.theta.len() != spec.param_count() {
        return Err(Error::DimensionMismatch {
            expected: spec.param_count(),
            got: params.theta.len(),
        });
    }
    if params.theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("non-finite ansatz parameter".into()));
    }
    Ok(())
}

/// Ansatz gate list for a given parameter vector.
pub fn ansatz_gates(params: &VqcParams, spec: &VqcSpec) -> Result<Vec<Gate>> {
    check_params(params, spec)?;
    let d = spec.dimension();
    let mut gates = Vec::new();
    let mut next = 0usize;
    for layer in 0..=spec.ansatz_depth {
        for q in 0..d {
            gates.push(Gate::Ry(q, params.theta[next]));
            next += 1;
        }
        if layer < spec.ansatz_depth {
            for i in 0..d.saturating_sub(1) {
                gates.push(Gate::Cx { control: i, target: i + 1 });
            }
        }
    }
    debug_assert_eq!(next, params.theta.len());
    Ok(gates)
}

/// Class probabilities (p0, p1); p1 is the odd-parity probability.
pub fn vqc_forward(x: &[f64], params: &VqcParams, spec: &VqcSpec) -> Result<(f64, f64)> {
    check_params(params, spec)?;
    let mut state = Statevector::zero(spec.dimension())?;
    state.apply_all(&feature_map_gates(x, &spec.feature_map)?)?;
    state.apply_all(&ansatz_gates(params, spec)?)?;
    let mut p1 = 0.0;
    for (idx, p) in state.probabilities().into_iter().enumerate() {
        if idx.count_ones() % 2 == 1 {
            p1 += p;
        }
    }
    p1 = p1.clamp(0.0, 1.0);
    Ok((1.0 - p1, p1))
}

/// Mean cross-entropy of the parity probabilities against binary labels.
pub fn vqc_loss(params: &VqcParams, x: &DMatrix<f64>, y: &[i32], spec: &VqcSpec) -> Result<f64> {
    if x.nrows() == 0 {
        return Err(Error::EmptyInput("vqc loss batch"));
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if y.iter().any(|&l| l != 0 && l != 1) {
        return Err(Error::InvalidParameter("vqc labels must be 0 or 1".into()));
    }
    let mut total = 0.0;
    for i in 0..x.nrows() {
        let row: Vec<f64> = x.row(i).iter().cloned().collect();
        let (p0, p1) = vqc_forward(&row, params, spec)?;
        let p = if y[i] == 1 { p1 } else { p0 };
        total -= p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP).ln();
    }
    Ok(total / x.nrows() as f64)
}

/// Argmax prediction; an exact tie goes to label 0.
pub fn predict_vqc(x: &[f64], params: &VqcParams, spec: &VqcSpec) -> Result<i32> {
    let (p0, p1) = vqc_forward(x, params, spec)?;
    Ok(if p1 - p0 > 1e-12 { 1 } else { 0 })
}

/// SPSA minimization of the training loss. Returns the iterate with the
/// lowest recorded loss (mean of the two perturbed evaluations), not the
/// final one: the trajectory is noisy by construction.
pub fn train_vqc(x: &DMatrix<f64>, y: &[i32], spec: &VqcSpec, seed: u64) -> Result<VqcParams> {
    train_vqc_with(x, y, spec, seed, SpsaConfig::default())
}

pub fn train_vqc_with(
    x: &DMatrix<f64>,
    y: &[i32],
    spec: &VqcSpec,
    seed: u64,
    cfg: SpsaConfig,
) -> Result<VqcParams> {
    if x.nrows() < 2 {
        return Err(Error::TooFewPoints {
            need: 2,
            got: x.nrows(),
            what: "vqc training",
        });
    }
    let classes: std::collections::BTreeSet<i32> = y.iter().copied().collect();
    if classes.len() < 2 {
        return Err(Error::SingleClass(*y.first().unwrap_or(&0)));
    }
    let p = spec.param_count();
    let big_a = cfg.stability.unwrap_or(0.1 * spec.max_iterations as f64);
    let mut rng = stream_rng(seed, 0x7671, 0);
    let pi = std::f64::consts::PI;
    let mut theta: Vec<f64> = (0..p).map(|_| rng.gen_range(-pi..pi)).collect();
    let mut best = theta.clone();
    let mut best_loss = f64::INFINITY;

    for k in 0..spec.max_iterations {
        let ak = cfg.a / (k as f64 + 1.0 + big_a).powf(cfg.alpha);
        let ck = cfg.c / (k as f64 + 1.0).powf(cfg.gamma);
        let delta: Vec<f64> = (0..p).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        let plus = VqcParams {
            theta: theta.iter().zip(&delta).map(|(t, d)| t + ck * d).collect(),
        };
        let minus = VqcParams {
            theta: theta.iter().zip(&delta).map(|(t, d)| t - ck * d).collect(),
        };
        let lp = vqc_loss(&plus, x, y, spec)?;
        let lm = vqc_loss(&minus, x, y, spec)?;
        let mid = 0.5 * (lp + lm);
        if mid < best_loss {
            best_loss = mid;
            best = theta.clone();
        }
        let scale = (lp - lm) / (2.0 * ck);
        for (t, d) in theta.iter_mut().zip(&delta) {
            *t -= ak * scale / d;
        }
    }
    let final_params = VqcParams { theta: theta.clone() };
    let final_loss = vqc_loss(&final_params, x, y, spec)?;
    if final_loss < best_loss {
        best = theta;
    }
    Ok(VqcParams { theta: best })
}

/// Two-evaluation simultaneous-perturbation gradient estimate of `f` at
/// `theta` with perturbation size `c`.
pub fn spsa_gradient<F>(f: F, theta: &[f64], c: f64, rng: &mut impl Rng) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let delta: Vec<f64> = (0..theta.len())
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let plus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + c * d).collect();
    let minus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t - c * d).collect();
    let diff = (f(&plus) - f(&minus)) / (2.0 * c);
    delta.iter().map(|d| diff / d).collect()
}
