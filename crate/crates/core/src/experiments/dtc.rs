use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::couplings::CouplingMatrix;
use crate::hilbert::{Axis, SpinState};

use super::disorder::DisorderEnsemble;
use super::ExperimentError;

/// Three-piece Floquet cycle: a perturbed global pi pulse, the Ising
/// coupling, and site disorder along x, with period `T = t1 + t2 + t3`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DtcParams {
    /// Effective Rabi frequency of the pulse segment; `2 g t1 = pi` makes it
    /// an exact pi pulse at `epsilon = 0`.
    pub g: f64,
    /// Fractional pulse perturbation.
    pub epsilon: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub n_periods: usize,
}

impl DtcParams {
    pub fn period(&self) -> f64 {
        self.t1 + self.t2 + self.t3
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if self.t1 < 0.0 || self.t2 < 0.0 || self.t3 < 0.0 || self.period() <= 0.0 {
            return Err(ExperimentError::InvalidParams(format!(
                "segment durations must be nonnegative with positive period, got ({}, {}, {})",
                self.t1, self.t2, self.t3
            )));
        }
        if self.n_periods < 2 || self.n_periods % 2 != 0 {
            return Err(ExperimentError::InvalidParams(format!(
                "n_periods must be even and >= 2, got {}",
                self.n_periods
            )));
        }
        Ok(())
    }
}

/// One disorder realization: stroboscopic magnetizations and their spectra.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DtcResult {
    /// `strobe_mags[k][i]` = `<sigma_i^x>` after period k+1.
    pub strobe_mags: Vec<Vec<f64>>,
    /// `spectra[j][i]` = DFT magnitude of site i's series in frequency bin j
    /// (unnormalized, rectangular window); bin j sits at `j/(n_periods T)`.
    pub spectra: Vec<Vec<f64>>,
    /// Site-averaged spectral magnitude at the sub-harmonic bin
    /// `n_periods/2`, i.e. at `nu_tc = 1/(2T)`.
    pub peak_height: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DtcOutput {
    pub per_realization: Vec<DtcResult>,
    /// Site- and realization-averaged spectrum per frequency bin.
    pub mean_spectrum: Vec<f64>,
    pub peak_height_mean: f64,
    /// Sample variance of the per-realization peak heights.
    pub peak_variance: f64,
    /// Frequency grid in cycles per time unit: bin j at `j/(n_periods T)`.
    pub freqs: Vec<f64>,
}

// Segment kernels. Each Floquet segment exponentiates exactly: the pulse and
// disorder segments factor into single-site rotations, and the Ising segment
// into commuting two-site phase gates.

fn rotate_y_all(amps: &mut [Complex64], n: usize, phi: f64) {
    let (c, s) = (phi.cos(), phi.sin());
    for site in 0..n {
        let mask = 1usize << site;
        for idx in 0..amps.len() {
            if idx & mask == 0 {
                let a0 = amps[idx];
                let a1 = amps[idx | mask];
                amps[idx] = c * a0 + s * a1;
                amps[idx | mask] = c * a1 - s * a0;
            }
        }
    }
}

fn rotate_x_site(amps: &mut [Complex64], site: usize, phi: f64) {
    let c = Complex64::new(phi.cos(), 0.0);
    let is = Complex64::new(0.0, -phi.sin());
    let mask = 1usize << site;
    for idx in 0..amps.len() {
        if idx & mask == 0 {
            let a0 = amps[idx];
            let a1 = amps[idx | mask];
            amps[idx] = c * a0 + is * a1;
            amps[idx | mask] = c * a1 + is * a0;
        }
    }
}

fn ising_xx_phases(amps: &mut [Complex64], j: &CouplingMatrix, t: f64) {
    let n = j.n();
    for i in 0..n {
        for k in (i + 1)..n {
            let phi = j.get(i, k) * t;
            if phi == 0.0 {
                continue;
            }
            let c = Complex64::new(phi.cos(), 0.0);
            let is = Complex64::new(0.0, -phi.sin());
            let mask = (1usize << i) | (1usize << k);
            for idx in 0..amps.len() {
                if idx < idx ^ mask {
                    let a0 = amps[idx];
                    let a1 = amps[idx ^ mask];
                    amps[idx] = c * a0 + is * a1;
                    amps[idx ^ mask] = c * a1 + is * a0;
                }
            }
        }
    }
}

/// Advance one Floquet period in place.
pub(crate) fn floquet_period(
    amps: &mut [Complex64],
    n: usize,
    params: &DtcParams,
    j: &CouplingMatrix,
    fields: &[f64],
) {
    rotate_y_all(amps, n, params.g * (1.0 - params.epsilon) * params.t1);
    ising_xx_phases(amps, j, params.t2);
    for (site, d) in fields.iter().enumerate() {
        rotate_x_site(amps, site, d * params.t3);
    }
}

fn dft_magnitudes(series: &[Vec<f64>], n_sites: usize) -> Vec<Vec<f64>> {
    let p = series.len();
    let mut spectra = vec![vec![0.0; n_sites]; p];
    for site in 0..n_sites {
        for bin in 0..p {
            let mut acc = Complex64::ZERO;
            for (k, row) in series.iter().enumerate() {
                let angle = -2.0 * std::f64::consts::PI * (bin * k) as f64 / p as f64;
                acc += row[site] * Complex64::new(angle.cos(), angle.sin());
            }
            spectra[bin][site] = acc.norm();
        }
    }
    spectra
}

/// Drive the all-down-x state for `n_periods` Floquet cycles per disorder
/// realization and Fourier-analyze the stroboscopic magnetization.
pub fn run_dtc(
    params: &DtcParams,
    j: &CouplingMatrix,
    ensemble: &DisorderEnsemble,
) -> Result<DtcOutput, ExperimentError> {
    params.validate()?;
    if ensemble.n_realizations == 0 {
        return Err(ExperimentError::InvalidParams("n_realizations must be >= 1".into()));
    }
    let n = j.n();
    let p = params.n_periods;
    let initial = SpinState::all_down_x(n);

    let per_realization: Vec<DtcResult> = (0..ensemble.n_realizations)
        .into_par_iter()
        .map(|r| {
            let fields = ensemble.fields(r, n);
            let mut amps = initial.amplitudes().to_vec();
            let mut strobe_mags = Vec::with_capacity(p);
            for _ in 0..p {
                floquet_period(&mut amps, n, params, j, &fields);
                let state = SpinState::from_raw(n, amps.clone());
                strobe_mags.push(state.magnetizations(Axis::X));
            }
            let spectra = dft_magnitudes(&strobe_mags, n);
            let peak_height = spectra[p / 2].iter().sum::<f64>() / n as f64;
            DtcResult { strobe_mags, spectra, peak_height }
        })
        .collect();

    let n_real = per_realization.len() as f64;
    let mut mean_spectrum = vec![0.0; p];
    for r in &per_realization {
        for (bin, row) in r.spectra.iter().enumerate() {
            mean_spectrum[bin] += row.iter().sum::<f64>() / (n as f64 * n_real);
        }
    }
    let heights: Vec<f64> = per_realization.iter().map(|r| r.peak_height).collect();
    let peak_height_mean = heights.iter().sum::<f64>() / n_real;
    let peak_variance = if heights.len() > 1 {
        heights.iter().map(|h| (h - peak_height_mean).powi(2)).sum::<f64>() / (n_real - 1.0)
    } else {
        0.0
    };
    let period = params.period();
    let freqs = (0..p).map(|bin| bin as f64 / (p as f64 * period)).collect();
    Ok(DtcOutput { per_realization, mean_spectrum, peak_height_mean, peak_variance, freqs })
}

/// One column of the phase scan: variance of the sub-harmonic peak across
/// disorder, as a function of the pulse perturbation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanColumn {
    pub j0t2: f64,
    pub epsilons: Vec<f64>,
    pub peak_heights: Vec<f64>,
    pub variances: Vec<f64>,
    /// Perturbation with the largest peak variance (crossover estimate).
    pub eps_star: f64,
    /// Set when the variance profile has no usable peak.
    pub flat: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DtcScan {
    pub columns: Vec<ScanColumn>,
    /// Linear fit `eps_star = slope * j0t2 + intercept` over non-flat columns.
    pub slope: f64,
    pub intercept: f64,
}

/// Scan the (epsilon, J0 t2) plane at fixed `W t3 = pi`, locating the
/// crossover from the variance peak per interaction strength.
///
/// `j_shape` fixes the interaction profile; it is rescaled per column so the
/// nearest-neighbor coupling times `t2` equals the requested `J0 t2`. The
/// same disorder realizations are reused across all grid cells.
pub fn dtc_phase_scan(
    base: &DtcParams,
    j_shape: &CouplingMatrix,
    epsilons: &[f64],
    j0t2_values: &[f64],
    n_realizations: usize,
    seed: u64,
) -> Result<DtcScan, ExperimentError> {
    if epsilons.is_empty() || j0t2_values.is_empty() {
        return Err(ExperimentError::InvalidParams("scan grids must be nonempty".into()));
    }
    if base.t2 <= 0.0 || base.t3 <= 0.0 {
        return Err(ExperimentError::InvalidParams("t2 and t3 must be positive for scans".into()));
    }
    let width = std::f64::consts::PI / base.t3;
    let ensemble = DisorderEnsemble { width, n_realizations, seed };
    let shape_scale = j_shape.nearest_neighbor_scale();
    if shape_scale <= 0.0 {
        return Err(ExperimentError::InvalidParams("j_shape must have nonzero couplings".into()));
    }

    let mut columns = Vec::with_capacity(j0t2_values.len());
    for &j0t2 in j0t2_values {
        let j = j_shape.scaled(j0t2 / (base.t2 * shape_scale));
        let mut variances = Vec::with_capacity(epsilons.len());
        let mut peak_heights = Vec::with_capacity(epsilons.len());
        for &eps in epsilons {
            let mut params = base.clone();
            params.epsilon = eps;
            let out = run_dtc(&params, &j, &ensemble)?;
            variances.push(out.peak_variance);
            peak_heights.push(out.peak_height_mean);
        }
        let (argmax, &vmax) = variances
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty grid");
        let vmin = variances.iter().cloned().fold(f64::INFINITY, f64::min);
        let flat = vmax <= 0.0 || (vmax - vmin) < 1e-6 * vmax.max(1e-300);
        columns.push(ScanColumn {
            j0t2,
            epsilons: epsilons.to_vec(),
            peak_heights,
            variances,
            eps_star: epsilons[argmax],
            flat,
        });
    }

    let pts: Vec<(f64, f64)> = columns
        .iter()
        .filter(|c| !c.flat)
        .map(|c| (c.j0t2, c.eps_star))
        .collect();
    let (slope, intercept) = if pts.len() >= 2 {
        let m = pts.len() as f64;
        let xbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = pts.iter().map(|p| (p.0 - xbar).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
        let slope = sxy / sxx;
        (slope, ybar - slope * xbar)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(DtcScan { columns, slope, intercept })
}
