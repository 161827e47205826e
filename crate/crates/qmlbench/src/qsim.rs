//! Exact dense statevector simulator.
//!
//! Qubit ordering is little-endian: bit `q` of a basis-state index holds the
//! value of qubit `q`. Kernel values built on overlap magnitudes are ordering
//! invariant, but intermediate amplitudes are not, so all tests against
//! external references must use the same convention.
//!
//! Memory is 16 bytes per amplitude; the qubit count is capped at 24
//! (~256 MiB) since none of the experiment pipelines go past a handful of
//! features.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::stream_rng;

pub const MAX_QUBITS: usize = 24;

/// Gate set sufficient for the ZZ feature map and the RY/CX ansatz.
///
/// Matrix conventions:
/// H = (1/sqrt2) [[1,1],[1,-1]];
/// P(phi) = diag(1, e^{i phi});
/// RY(theta) = [[cos t/2, -sin t/2],[sin t/2, cos t/2]];
/// CX flips the target wherever the control bit is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H(usize),
    Ry(usize, f64),
    Phase(usize, f64),
    Cx { control: usize, target: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// |0...0> on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::QubitCountOutOfRange(n_qubits));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Statevector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::QubitIndexOutOfRange {
                index: q,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// Apply one gate in place over strided amplitude pairs.
    pub fn apply(&mut self, gate: Gate) -> Result<()> {
        match gate {
            Gate::H(q) => {
                self.check_qubit(q)?;
                self.single_qubit(q, |a0, a1| {
                    (
                        (a0 + a1) * FRAC_1_SQRT_2,
                        (a0 - a1) * FRAC_1_SQRT_2,
                    )
                });
            }
            Gate::Ry(q, theta) => {
                self.check_qubit(q)?;
                let (s, c) = (theta / 2.0).sin_cos();
                self.single_qubit(q, |a0, a1| (a0 * c - a1 * s, a0 * s + a1 * c));
            }
            Gate::Phase(q, phi) => {
                self.check_qubit(q)?;
                let e = Complex64::from_polar(1.0, phi);
                self.single_qubit(q, |a0, a1| (a0, a1 * e));
            }
            Gate::Cx { control, target } => {
                self.check_qubit(control)?;
                self.check_qubit(target)?;
                if control == target {
                    return Err(Error::ControlEqualsTarget(control));
                }
                let cmask = 1usize << control;
                let tmask = 1usize << target;
                for i in 0..self.amps.len() {
                    if i & cmask != 0 && i & tmask == 0 {
                        self.amps.swap(i, i | tmask);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn apply_all(&mut self, gates: &[Gate]) -> Result<()> {
        for &g in gates {
            self.apply(g)?;
        }
        Ok(())
    }

    fn single_qubit<F>(&mut self, q: usize, f: F)
    where
        F: Fn(Complex64, Complex64) -> (Complex64, Complex64),
    {
        let stride = 1usize << q;
        let half = self.amps.len() >> 1;
        for base in 0..half {
            let i0 = ((base >> q) << (q + 1)) | (base & (stride - 1));
            let i1 = i0 | stride;
            let (a0, a1) = (self.amps[i0], self.amps[i1]);
            let (b0, b1) = f(a0, a1);
            self.amps[i0] = b0;
            self.amps[i1] = b1;
        }
    }

    /// <self|other>.
    pub fn inner_product(&self, other: &Statevector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: other.n_qubits,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Per-basis-state probabilities |amplitude|^2.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Multinomial draw from the measurement distribution.
    ///
    /// Bitstring keys are little-endian: character position `q` is the value
    /// of qubit `q`. Deterministic given (state, shots, seed).
    pub fn sample_counts(&self, shots: u64, seed: u64) -> Result<BTreeMap<String, u64>> {
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        let probs = self.probabilities();
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cdf.push(acc);
        }
        let total = acc;
        let mut rng = stream_rng(seed, 0x5a4d, 0);
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        for _ in 0..shots {
            let u: f64 = rng.gen::<f64>() * total;
            let idx = cdf.partition_point(|&c| c < u).min(probs.len() - 1);
            *counts.entry(idx).or_insert(0) += 1;
        }
        Ok(counts
            .into_iter()
            .map(|(idx, c)| (self.bitstring(idx), c))
            .collect())
    }

    fn bitstring(&self, index: usize) -> String {
        (0..self.n_qubits)
            .map(|q| if index >> q & 1 == 1 { '1' } else { '0' })
            .collect()
    }
}
