//! Dense-matrix oracles shared by the integration and acceptance suites:
//! full 2^n x 2^n circuit unitaries built from Kronecker products, and
//! one-shot Fisher-Lee transmission from a whole-cube inversion.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

use qmlbench::anderson::{lead_self_energy, slice_hamiltonians};
use qmlbench::qsim::{Gate, Statevector};

pub type CMat = DMatrix<Complex64>;
pub type CVec = nalgebra::DVector<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Expand a single-qubit matrix on qubit q (little-endian: qubit 0 is the
/// least-significant bit) into the full-register unitary:
/// I_{2^(n-1-q)} (x) U (x) I_{2^q}.
pub fn embed_single(u: &CMat, q: usize, n_qubits: usize) -> CMat {
    let left = identity(1 << (n_qubits - 1 - q));
    let right = identity(1 << q);
    left.kronecker(u).kronecker(&right)
}

pub fn embed_cx(control: usize, target: usize, n_qubits: usize) -> CMat {
    let dim = 1 << n_qubits;
    let mut m = CMat::zeros(dim, dim);
    for col in 0..dim {
        let row = if (col >> control) & 1 == 1 { col ^ (1 << target) } else { col };
        m[(row, col)] = c(1.0, 0.0);
    }
    m
}

pub fn gate_matrix(gate: &Gate, n_qubits: usize) -> CMat {
    match *gate {
        Gate::H(q) => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let u = CMat::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
            embed_single(&u, q, n_qubits)
        }
        Gate::Ry(q, theta) => {
            let (sin, cos) = (theta / 2.0).sin_cos();
            let u = CMat::from_row_slice(
                2,
                2,
                &[c(cos, 0.0), c(-sin, 0.0), c(sin, 0.0), c(cos, 0.0)],
            );
            embed_single(&u, q, n_qubits)
        }
        Gate::Phase(q, phi) => {
            let u = CMat::from_row_slice(
                2,
                2,
                &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), Complex64::from_polar(1.0, phi)],
            );
            embed_single(&u, q, n_qubits)
        }
        Gate::Cx { control, target } => embed_cx(control, target, n_qubits),
    }
}

/// Run a gate list on |0...0> by dense matrix-vector products.
pub fn dense_run(gates: &[Gate], n_qubits: usize) -> CVec {
    let dim = 1 << n_qubits;
    let mut state = CVec::zeros(dim);
    state[0] = c(1.0, 0.0);
    for gate in gates {
        state = gate_matrix(gate, n_qubits) * state;
    }
    state
}

pub fn assert_states_match(fast: &Statevector, dense: &CVec, tol: f64) {
    assert_eq!(fast.amplitudes().len(), dense.len());
    for (a, b) in fast.amplitudes().iter().zip(dense.iter()) {
        assert!((a - b).norm() < tol, "amplitude mismatch: {a} vs {b}");
    }
}

/// The full E - H - Sigma_L - Sigma_R matrix over the whole cube.
fn scattering_matrix(e: f64, va: f64, l: usize, config_seed: u64) -> CMat {
    let n = l * l;
    let dim = n * l;
    let slices = slice_hamiltonians(va, l, config_seed);
    let leads = lead_self_energy(e, l);

    let mut a = CMat::zeros(dim, dim);
    for (s, h) in slices.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                a[(s * n + i, s * n + j)] = -Complex64::new(h[(i, j)], 0.0);
            }
            a[(s * n + i, s * n + i)] += Complex64::new(e, 0.0);
        }
        if s + 1 < l {
            for i in 0..n {
                a[(s * n + i, (s + 1) * n + i)] = Complex64::new(1.0, 0.0);
                a[((s + 1) * n + i, s * n + i)] = Complex64::new(1.0, 0.0);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] -= leads.sigma[(i, j)];
            a[((l - 1) * n + i, (l - 1) * n + j)] -= leads.sigma[(i, j)];
        }
    }
    a
}

/// Left-to-right Fisher-Lee transmission from one dense inversion.
pub fn dense_transmission(e: f64, va: f64, l: usize, config_seed: u64) -> f64 {
    let n = l * l;
    let leads = lead_self_energy(e, l);
    let g = scattering_matrix(e, va, l, config_seed)
        .try_inverse()
        .expect("dense scattering matrix is invertible");
    let g_1l = CMat::from_fn(n, n, |i, j| g[(i, (l - 1) * n + j)]);
    let t_matrix = &leads.gamma * &g_1l * &leads.gamma * g_1l.adjoint();
    let trace: Complex64 = (0..n).map(|i| t_matrix[(i, i)]).sum();
    assert!(trace.im.abs() < 1e-8, "imaginary residue {}", trace.im);
    trace.re
}

/// Right-to-left transmission (Gamma_R G_L1 Gamma_L G_L1^dag) from the same
/// inversion; equals the left-to-right value by reciprocity.
pub fn dense_transmission_reverse(e: f64, va: f64, l: usize, config_seed: u64) -> f64 {
    let n = l * l;
    let leads = lead_self_energy(e, l);
    let g = scattering_matrix(e, va, l, config_seed)
        .try_inverse()
        .expect("dense scattering matrix is invertible");
    let g_l1 = CMat::from_fn(n, n, |i, j| g[((l - 1) * n + i, j)]);
    let t_matrix = &leads.gamma * &g_l1 * &leads.gamma * g_l1.adjoint();
    let trace: Complex64 = (0..n).map(|i| t_matrix[(i, i)]).sum();
    trace.re
}
