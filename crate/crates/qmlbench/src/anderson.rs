//! Anderson metal-insulator dataset generator.
//!
//! An L x L x L tight-binding cube (hopping t = 1, on-site disorder uniform
//! on [-Va/2, Va/2]) sits between two clean semi-infinite leads of the same
//! cross-section. Transmission comes from the slice-recursive Green's
//! function and the Fisher-Lee trace T = Tr[Gamma_L G_1L Gamma_R G_1L^dag];
//! the phase label at each (E, Va) is the sign of the least-squares slope of
//! the log-averaged transmission versus L.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};

type CMatrix = DMatrix<Complex64>;

/// Phase classification threshold on the scaling slope.
pub const SLOPE_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Conductor,
    Insulator,
    Excluded,
}

impl Phase {
    pub fn from_slope(slope: f64) -> Phase {
        if slope > SLOPE_THRESHOLD {
            Phase::Conductor
        } else if slope < -SLOPE_THRESHOLD {
            Phase::Insulator
        } else {
            Phase::Excluded
        }
    }
}

/// Lead surface self-energy and the broadening Gamma = i(Sigma - Sigma^dag).
pub struct LeadSelfEnergy {
    pub sigma: CMatrix,
    pub gamma: CMatrix,
}

/// Transverse eigenmodes of a clean L x L slice with hard-wall boundaries:
/// eps_mn = -2(cos(m pi/(L+1)) + cos(n pi/(L+1))), m, n in 1..=L.
fn transverse_modes(l: usize) -> (DMatrix<f64>, Vec<f64>) {
    let lf = l as f64;
    let norm = 2.0 / (lf + 1.0);
    let n_sites = l * l;
    // site (x, y) -> index y*L + x; mode (m, n) -> index (n-1)*L + (m-1)
    let mut u = DMatrix::zeros(n_sites, n_sites);
    let mut eps = vec![0.0; n_sites];
    for m in 1..=l {
        for n in 1..=l {
            let mode = (n - 1) * l + (m - 1);
            eps[mode] = -2.0
                * ((m as f64 * std::f64::consts::PI / (lf + 1.0)).cos()
                    + (n as f64 * std::f64::consts::PI / (lf + 1.0)).cos());
            for x in 1..=l {
                for y in 1..=l {
                    let site = (y - 1) * l + (x - 1);
                    u[(site, mode)] = norm
                        * (m as f64 * x as f64 * std::f64::consts::PI / (lf + 1.0)).sin()
                        * (n as f64 * y as f64 * std::f64::consts::PI / (lf + 1.0)).sin();
                }
            }
        }
    }
    (u, eps)
}

/// Per-mode surface Green's function of a semi-infinite chain at reduced
/// energy e' = E - eps: (e' - i sqrt(4 - e'^2))/2 inside the band, the
/// decaying real root outside.
fn surface_g(e_prime: f64) -> Complex64 {
    if e_prime.abs() <= 2.0 {
        Complex64::new(e_prime / 2.0, -(4.0 - e_prime * e_prime).sqrt() / 2.0)
    } else {
        let root = (e_prime * e_prime - 4.0).sqrt();
        Complex64::new((e_prime - e_prime.signum() * root) / 2.0, 0.0)
    }
}

pub fn lead_self_energy(e: f64, l: usize) -> LeadSelfEnergy {
    let (u, eps) = transverse_modes(l);
    let n = l * l;
    // Sigma = U diag(t^2 g) U^T with t = 1
    let g: Vec<Complex64> = eps.iter().map(|&ep| surface_g(e - ep)).collect();
    let mut sigma = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += g[k] * (u[(i, k)] * u[(j, k)]);
            }
            sigma[(i, j)] = acc;
        }
    }
    let gamma = (&sigma - sigma.adjoint()) * Complex64::new(0.0, 1.0);
    LeadSelfEnergy { sigma, gamma }
}

/// Number of propagating lead modes at energy `e`.
pub fn open_channel_count(e: f64, l: usize) -> usize {
    let (_, eps) = transverse_modes(l);
    eps.iter().filter(|&&ep| (e - ep).abs() < 2.0).count()
}

/// Disordered slice Hamiltonians for one configuration: L matrices of size
/// L^2 with on-site energies uniform on [-Va/2, Va/2] drawn from
/// `config_seed` and intra-slice hopping -1 on the 2D grid.
pub fn slice_hamiltonians(va: f64, l: usize, config_seed: u64) -> Vec<DMatrix<f64>> {
    let n = l * l;
    let mut rng = stream_rng(config_seed, 0x616e64, 0);
    (0..l)
        .map(|_| {
            let mut h = DMatrix::zeros(n, n);
            for site in 0..n {
                h[(site, site)] = if va > 0.0 {
                    rng.gen_range(-va / 2.0..=va / 2.0)
                } else {
                    // keep the stream in lockstep so Va = 0 shares the layout
                    let _ = rng.gen::<f64>();
                    0.0
                };
            }
            for y in 0..l {
                for x in 0..l {
                    let site = y * l + x;
                    if x + 1 < l {
                        h[(site, site + 1)] = -1.0;
                        h[(site + 1, site)] = -1.0;
                    }
                    if y + 1 < l {
                        h[(site, site + l)] = -1.0;
                        h[(site + l, site)] = -1.0;
                    }
                }
            }
            h
        })
        .collect()
}

fn invert(m: &CMatrix) -> Option<CMatrix> {
    m.clone().try_inverse()
}

fn transmission_at(e: Complex64, va: f64, l: usize, config_seed: u64) -> Option<f64> {
    let n = l * l;
    let leads = lead_self_energy(e.re, l);
    let slices = slice_hamiltonians(va, l, config_seed);
    let to_c = |h: &DMatrix<f64>| CMatrix::from_fn(n, n, |i, j| Complex64::new(h[(i, j)], 0.0));
    let eye = CMatrix::identity(n, n);

    // first slice carries the left self-energy (and the right one for L = 1)
    let mut block = &eye * e - to_c(&slices[0]) - &leads.sigma;
    if l == 1 {
        block -= &leads.sigma;
    }
    let mut g_nn = invert(&block)?;
    let mut g_1n = g_nn.clone();
    for (idx, h) in slices.iter().enumerate().skip(1) {
        // V = -t I, so V^dag G V = G
        let mut block = &eye * e - to_c(h) - &g_nn;
        if idx == l - 1 {
            block -= &leads.sigma;
        }
        g_nn = invert(&block)?;
        // G_1n = G_1,n-1 V G_nn with V = -I
        g_1n = -(&g_1n * &g_nn);
    }
    let t_matrix = &leads.gamma * &g_1n * &leads.gamma * g_1n.adjoint();
    let trace: Complex64 = (0..n).map(|i| t_matrix[(i, i)]).sum();
    debug_assert!(trace.im.abs() < 1e-8, "imaginary residue {}", trace.im);
    Some(trace.re)
}

/// Transmission through one disorder configuration.
///
/// A singular block (clean system exactly at a pole) is retried once with an
/// imaginary broadening of 1e-9.
pub fn transmission(e: f64, va: f64, l: usize, config_seed: u64) -> Result<f64> {
    if l == 0 {
        return Err(Error::InvalidParameter("cube side must be >= 1".into()));
    }
    if va < 0.0 {
        return Err(Error::InvalidParameter("disorder strength must be >= 0".into()));
    }
    transmission_at(Complex64::new(e, 0.0), va, l, config_seed)
        .or_else(|| transmission_at(Complex64::new(e, 1e-9), va, l, config_seed))
        .ok_or(Error::SingularBlock)
}

/// Geometric mean of transmission over the disorder ensemble:
/// exp(mean of ln max(T_c, 1e-300)), config c seeded by derive(seed, c).
pub fn log_avg_transmission(e: f64, va: f64, l: usize, n_configs: usize, seed: u64) -> Result<f64> {
    if n_configs == 0 {
        return Err(Error::InvalidParameter("need at least one configuration".into()));
    }
    let logs: Vec<f64> = (0..n_configs)
        .into_par_iter()
        .map(|c| {
            transmission(e, va, l, derive_seed(seed, CONFIG_TAG, c as u64))
                .map(|t| t.max(1e-300).ln())
        })
        .collect::<Result<_>>()?;
    Ok((logs.iter().sum::<f64>() / n_configs as f64).exp())
}

const CONFIG_TAG: u64 = 0x636f6e66;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub e: f64,
    pub va: f64,
    /// (L, log-averaged transmission) pairs in ascending L.
    pub g_bar: Vec<(usize, f64)>,
    /// OLS slope of G-bar versus L.
    pub slope: f64,
    /// OLS slope of ln(G-bar) versus L, emitted for inspection.
    pub log_slope: f64,
    pub phase: Phase,
}

impl ScalingPoint {
    /// sgn(slope) * |log|slope||, the color scale used for raw maps.
    pub fn signed_log_slope(&self) -> f64 {
        if self.slope == 0.0 {
            0.0
        } else {
            self.slope.signum() * self.slope.abs().ln().abs()
        }
    }
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Least-squares slope of the log-averaged transmission over the given cube
/// sizes, classified by sign.
pub fn scaling_slope(
    e: f64,
    va: f64,
    l_list: &[usize],
    n_configs: usize,
    seed: u64,
) -> Result<ScalingPoint> {
    if l_list.len() < 2 {
        return Err(Error::TooFewPoints {
            need: 2,
            got: l_list.len(),
            what: "finite-size scaling fit",
        });
    }
    if l_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("cube sizes must be strictly increasing".into()));
    }
    let g_bar: Vec<(usize, f64)> = l_list
        .iter()
        .map(|&l| log_avg_transmission(e, va, l, n_configs, seed).map(|g| (l, g)))
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = g_bar.iter().map(|&(l, _)| l as f64).collect();
    let ys: Vec<f64> = g_bar.iter().map(|&(_, g)| g).collect();
    let lys: Vec<f64> = ys.iter().map(|g| g.max(1e-300).ln()).collect();
    let slope = ols_slope(&xs, &ys);
    let log_slope = ols_slope(&xs, &lys);
    Ok(ScalingPoint {
        e,
        va,
        g_bar,
        slope,
        log_slope,
        phase: Phase::from_slope(slope),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseMap {
    pub points: Vec<ScalingPoint>,
    pub l_list: Vec<usize>,
    pub excluded: usize,
}

/// Scan an (E, Va) grid and classify every point. Grid points are
/// independent work items; each derives its own seed from its grid position,
/// so the output is identical at any thread count.
pub fn generate_phase_map(
    e_grid: &[f64],
    va_grid: &[f64],
    l_list: &[usize],
    n_configs: usize,
    seed: u64,
) -> Result<PhaseMap> {
    if e_grid.is_empty() || va_grid.is_empty() {
        return Err(Error::EmptyInput("phase map grid"));
    }
    let cells: Vec<(usize, usize)> = (0..e_grid.len())
        .flat_map(|i| (0..va_grid.len()).map(move |j| (i, j)))
        .collect();
    let points: Vec<ScalingPoint> = cells
        .into_par_iter()
        .map(|(i, j)| {
            scaling_slope(
                e_grid[i],
                va_grid[j],
                l_list,
                n_configs,
                derive_seed(seed, i as u64, j as u64),
            )
        })
        .collect::<Result<_>>()?;
    let excluded = points.iter().filter(|p| p.phase == Phase::Excluded).count();
    Ok(PhaseMap {
        points,
        l_list: l_list.to_vec(),
        excluded,
    })
}

impl PhaseMap {
    /// Classified dataset with features (E, Va); conductor = 1, insulator = 0;
    /// excluded points are omitted.
    pub fn to_dataset(&self) -> Result<Dataset> {
        let rows: Vec<Vec<f64>> = self
            .points
            .iter()
            .filter(|p| p.phase != Phase::Excluded)
            .map(|p| vec![p.e, p.va])
            .collect();
        let labels: Vec<i32> = self
            .points
            .iter()
            .filter(|p| p.phase != Phase::Excluded)
            .map(|p| i32::from(p.phase == Phase::Conductor))
            .collect();
        let n = rows.len();
        let features = DMatrix::from_fn(n, 2, |i, j| rows[i][j]);
        Dataset::new(
            "anderson-phase-map",
            features,
            labels,
            vec!["E".into(), "Va".into()],
        )
    }

    /// Dataset CSV: `E,Va,label`.
    pub fn dataset_csv(&self) -> Result<String> {
        let ds = self.to_dataset()?;
        let mut s = String::from("E,Va,label\n");
        for i in 0..ds.n() {
            s.push_str(&format!(
                "{},{},{}\n",
                ds.features[(i, 0)],
                ds.features[(i, 1)],
                ds.labels[i]
            ));
        }
        Ok(s)
    }

    /// Raw CSV with slopes and the per-L geometric means:
    /// `E,Va,slope,log_slope,signed_log_slope,Gbar_L4,Gbar_L6,...`.
    pub fn raw_csv(&self) -> String {
        let mut header = String::from("E,Va,slope,log_slope,signed_log_slope");
        for l in &self.l_list {
            header.push_str(&format!(",Gbar_L{l}"));
        }
        let mut s = header;
        s.push('\n');
        for p in &self.points {
            s.push_str(&format!(
                "{},{},{},{},{}",
                p.e,
                p.va,
                p.slope,
                p.log_slope,
                p.signed_log_slope()
            ));
            for &(_, g) in &p.g_bar {
                s.push_str(&format!(",{g}"));
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn one_dimensional_lead_at_band_center() {
        let lead = lead_self_energy(0.0, 1);
        assert_abs_diff_eq!(lead.sigma[(0, 0)].re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lead.sigma[(0, 0)].im, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lead.gamma[(0, 0)].re, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn evanescent_mode_carries_no_flux() {
        // L = 1: eps_11 = 0, so E = 3 is outside the band
        let lead = lead_self_energy(3.0, 1);
        assert_abs_diff_eq!(lead.sigma[(0, 0)].im, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lead.gamma[(0, 0)].norm(), 0.0, epsilon = 1e-12);
        assert!(lead.sigma[(0, 0)].re.abs() <= 1.0);
    }

    #[test]
    fn open_channel_counting() {
        // L = 2 modes: eps in {-2, 0, 0, 2}; at E = 1 three satisfy |E-eps| < 2
        assert_eq!(open_channel_count(1.0, 2), 3);
        let lead = lead_self_energy(1.0, 2);
        let eig = ((&lead.gamma + lead.gamma.adjoint()) * Complex64::new(0.5, 0.0))
            .map(|c| c.re)
            .symmetric_eigen();
        let open = eig.eigenvalues.iter().filter(|&&v| v > 1e-8).count();
        assert_eq!(open, 3);
        // Gamma is PSD
        assert!(eig.eigenvalues.iter().all(|&v| v > -1e-10));
    }

    #[test]
    fn clean_chain_is_perfectly_transparent() {
        let t = transmission(0.0, 0.0, 1, 99).unwrap();
        assert_abs_diff_eq!(t, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn clean_transmission_equals_open_channels() {
        let t = transmission(1.0, 0.0, 2, 3).unwrap();
        assert_abs_diff_eq!(t, 3.0, epsilon = 1e-8);
        let t = transmission(0.5, 0.0, 3, 8).unwrap();
        assert_abs_diff_eq!(t, open_channel_count(0.5, 3) as f64, epsilon = 1e-8);
    }

    #[test]
    fn channel_bound_holds_with_disorder() {
        for seed in 0..10 {
            let t = transmission(0.7, 4.0, 3, seed).unwrap();
            let bound = open_channel_count(0.7, 3) as f64;
            assert!(t >= 0.0 && t <= bound + 1e-8, "T = {t}, bound {bound}");
        }
    }

    #[test]
    fn log_average_basics() {
        let single = log_avg_transmission(0.3, 2.0, 2, 1, 5).unwrap();
        let direct = transmission(0.3, 2.0, 2, derive_seed(5, CONFIG_TAG, 0)).unwrap();
        assert_abs_diff_eq!(single, direct, epsilon = 1e-12);

        // clean limit: every configuration is identical
        let clean = log_avg_transmission(1.0, 0.0, 2, 7, 42).unwrap();
        assert_abs_diff_eq!(clean, 3.0, epsilon = 1e-8);
    }

    #[test]
    fn slope_fit_on_exact_line() {
        let xs = [4.0, 6.0, 8.0];
        let ys = [1.0, 2.0, 3.0];
        assert_abs_diff_eq!(ols_slope(&xs, &ys), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn constant_gbar_is_excluded() {
        assert_eq!(Phase::from_slope(0.0), Phase::Excluded);
        assert_eq!(Phase::from_slope(5e-7), Phase::Excluded);
        assert_eq!(Phase::from_slope(0.5), Phase::Conductor);
        assert_eq!(Phase::from_slope(-0.5), Phase::Insulator);
    }

    #[test]
    fn scaling_requires_two_sizes() {
        assert!(scaling_slope(0.0, 1.0, &[4], 1, 0).is_err());
        assert!(scaling_slope(0.0, 1.0, &[6, 4], 1, 0).is_err());
    }

    #[test]
    fn left_right_symmetry() {
        // reversing the slice order swaps the leads
        for seed in [3u64, 11, 19] {
            let l = 3;
            let forward = transmission(0.4, 3.0, l, seed).unwrap();
            let slices = slice_hamiltonians(3.0, l, seed);
            let reversed = transmission_with_slices(0.4, &slices.iter().rev().cloned().collect::<Vec<_>>());
            assert_abs_diff_eq!(forward, reversed, epsilon = 1e-10);
        }
    }

    // test-only recursive sweep over explicit slices, for the lead-swap check
    fn transmission_with_slices(e: f64, slices: &[DMatrix<f64>]) -> f64 {
        let l = slices.len();
        let n = slices[0].nrows();
        let side = (n as f64).sqrt() as usize;
        let leads = lead_self_energy(e, side);
        let ec = Complex64::new(e, 0.0);
        let eye = CMatrix::identity(n, n);
        let to_c = |h: &DMatrix<f64>| CMatrix::from_fn(n, n, |i, j| Complex64::new(h[(i, j)], 0.0));
        let mut block = &eye * ec - to_c(&slices[0]) - &leads.sigma;
        if l == 1 {
            block -= &leads.sigma;
        }
        let mut g_nn = block.try_inverse().unwrap();
        let mut g_1n = g_nn.clone();
        for (idx, h) in slices.iter().enumerate().skip(1) {
            let mut block = &eye * ec - to_c(h) - &g_nn;
            if idx == l - 1 {
                block -= &leads.sigma;
            }
            g_nn = block.try_inverse().unwrap();
            g_1n = -(&g_1n * &g_nn);
        }
        let t_matrix = &leads.gamma * &g_1n * &leads.gamma * g_1n.adjoint();
        (0..n).map(|i| t_matrix[(i, i)].re).sum()
    }

    #[test]
    fn ensemble_average_deterministic() {
        let a = log_avg_transmission(0.0, 5.0, 3, 8, 123).unwrap();
        let b = log_avg_transmission(0.0, 5.0, 3, 8, 123).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn tiny_phase_map_bookkeeping() {
        let map = generate_phase_map(&[0.0], &[2.0], &[2, 3], 3, 7).unwrap();
        assert_eq!(map.points.len(), 1);
        let ds = map.to_dataset().unwrap();
        assert!(ds.n() <= 1);
        assert_eq!(ds.n() + map.excluded, 1);
        let raw = map.raw_csv();
        assert!(raw.starts_with("E,Va,slope,log_slope,signed_log_slope,Gbar_L2,Gbar_L3"));
    }
}
