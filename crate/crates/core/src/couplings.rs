//! Spin-spin coupling matrix from Raman and phonon-mode data, its power-law
//! characterization, and the fourth-order light-shift formulas used for
//! site-resolved disorder.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::HBAR;
use crate::ionchain::{solve_equilibrium, transverse_modes, ChainError, ModeSpectrum, TrapConfig};

/// Default guard band around phonon resonances: 2 pi * 100 Hz.
pub const DEFAULT_GUARD_BAND: f64 = 2.0 * std::f64::consts::PI * 100.0;

#[derive(Debug, Error)]
pub enum CouplingError {
    #[error("invalid Raman configuration: {0}")]
    InvalidConfig(String),
    #[error("beatnote {mu:.6e} rad/s is within the guard band of mode {mode} at {omega:.6e} rad/s (|mu - w_m| = {gap:.3e} < {guard:.3e})")]
    Resonance { mu: f64, mode: usize, omega: f64, gap: f64, guard: f64 },
    #[error("power-law fit requires N >= 3, got {0}")]
    TooFewIons(usize),
    #[error("power-law fit undefined: J({i},{j}) = 0")]
    ZeroCoupling { i: usize, j: usize },
    #[error("no beatnote in [{lo:.6e}, {hi:.6e}] reaches alpha = {target}: bracket spans alpha in [{alpha_lo:.4}, {alpha_hi:.4}]")]
    NoSolution { lo: f64, hi: f64, target: f64, alpha_lo: f64, alpha_hi: f64 },
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// Raman drive parameters for the bichromatic spin-spin interaction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RamanConfig {
    /// Carrier two-photon Rabi frequency Omega [rad/s].
    pub rabi_freq: f64,
    /// Symmetric bichromatic detuning mu from the qubit frequency [rad/s].
    pub beatnote: f64,
    /// Recoil frequency w_R = hbar dk^2 / 2M [rad/s].
    pub recoil_freq: f64,
    /// Momentum transfer dk [1/m].
    pub delta_k: f64,
}

impl RamanConfig {
    /// Build from the momentum transfer, deriving the recoil frequency.
    pub fn from_delta_k(rabi_freq: f64, beatnote: f64, delta_k: f64, mass: f64) -> Self {
        let recoil_freq = HBAR * delta_k * delta_k / (2.0 * mass);
        RamanConfig { rabi_freq, beatnote, recoil_freq, delta_k }
    }

    pub fn validate(&self) -> Result<(), CouplingError> {
        for (name, v) in [
            ("rabi_freq", self.rabi_freq),
            ("beatnote", self.beatnote),
            ("recoil_freq", self.recoil_freq),
            ("delta_k", self.delta_k),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CouplingError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Lamb-Dicke parameter for a mode of angular frequency `omega`.
    pub fn lamb_dicke(&self, omega: f64, mass: f64) -> f64 {
        self.delta_k * (HBAR / (2.0 * mass * omega)).sqrt()
    }

    /// Regime warnings: Lamb-Dicke smallness (eta < 0.3) and detuned
    /// operation (|mu - w_m| >= 5 eta Omega) for every mode.
    pub fn regime_warnings(&self, modes: &ModeSpectrum, mass: f64) -> Vec<String> {
        let mut warnings = Vec::new();
        for (m, &omega) in modes.frequencies.iter().enumerate() {
            let eta = self.lamb_dicke(omega, mass);
            if eta >= 0.3 {
                warnings.push(format!("mode {m}: Lamb-Dicke parameter {eta:.3} >= 0.3"));
            }
            let gap = (self.beatnote - omega).abs();
            if gap < 5.0 * eta * self.rabi_freq {
                warnings.push(format!(
                    "mode {m}: |mu - w_m| = {gap:.3e} < 5 eta Omega = {:.3e}; effective-Hamiltonian regime marginal",
                    5.0 * eta * self.rabi_freq
                ));
            }
        }
        warnings
    }
}

/// Symmetric spin-spin coupling matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    values: Array2<f64>,
}

impl CouplingMatrix {
    /// Symmetrize-free constructor; rejects asymmetric or nonzero-diagonal input.
    pub fn new(values: Array2<f64>) -> Result<Self, CouplingError> {
        let (r, c) = values.dim();
        if r != c {
            return Err(CouplingError::InvalidConfig(format!("matrix must be square, got {r}x{c}")));
        }
        for i in 0..r {
            if values[(i, i)] != 0.0 {
                return Err(CouplingError::InvalidConfig(format!("diagonal entry ({i},{i}) must be zero")));
            }
            for j in 0..i {
                if values[(i, j)] != values[(j, i)] {
                    return Err(CouplingError::InvalidConfig(format!("matrix not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(CouplingMatrix { values })
    }

    /// Ideal power-law couplings `J_ij = j0 / |i-j|^alpha`.
    pub fn power_law(n: usize, j0: f64, alpha: f64) -> Self {
        let mut values = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    values[(i, j)] = j0 / (i as f64 - j as f64).abs().powf(alpha);
                }
            }
        }
        CouplingMatrix { values }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Uniformly rescale all couplings.
    pub fn scaled(&self, factor: f64) -> Self {
        CouplingMatrix { values: &self.values * factor }
    }

    /// Mean nearest-neighbor magnitude, the J0 of the power-law description.
    pub fn nearest_neighbor_scale(&self) -> f64 {
        let n = self.n();
        (0..n - 1).map(|i| self.values[(i, i + 1)].abs()).sum::<f64>() / (n as f64 - 1.0)
    }
}

/// Result of fitting `|J_ij| ~ j0 / |i-j|^alpha` in log-log space.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Average nearest-neighbor strength (arithmetic mean of |J_{i,i+1}|).
    pub j0: f64,
    /// Decay exponent.
    pub alpha: f64,
    /// Root-mean-square misfit of log|J_ij| about the fitted line.
    pub residual: f64,
}

/// `J_ij = Omega^2 w_R sum_m b_im b_jm / (mu^2 - w_m^2)` with the default
/// resonance guard band.
pub fn compute_couplings(
    raman: &RamanConfig,
    modes: &ModeSpectrum,
) -> Result<CouplingMatrix, CouplingError> {
    compute_couplings_with_guard(raman, modes, DEFAULT_GUARD_BAND)
}

pub fn compute_couplings_with_guard(
    raman: &RamanConfig,
    modes: &ModeSpectrum,
    guard_band: f64,
) -> Result<CouplingMatrix, CouplingError> {
    raman.validate()?;
    let n = modes.n();
    let mu = raman.beatnote;
    for (m, &omega) in modes.frequencies.iter().enumerate() {
        let gap = (mu - omega).abs();
        if gap < guard_band {
            return Err(CouplingError::Resonance { mu, mode: m, omega, gap, guard: guard_band });
        }
    }
    let prefactor = raman.rabi_freq.powi(2) * raman.recoil_freq;
    let b = &modes.eigenvectors;
    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let mut sum = 0.0;
            for m in 0..n {
                sum += b[(i, m)] * b[(j, m)] / (mu * mu - modes.frequencies[m].powi(2));
            }
            let jij = prefactor * sum;
            values[(i, j)] = jij;
            values[(j, i)] = jij;
        }
    }
    Ok(CouplingMatrix { values })
}

/// Unweighted least squares of `log|J_ij|` against `log|i-j|` over all pairs.
pub fn fit_power_law(j: &CouplingMatrix) -> Result<PowerLawFit, CouplingError> {
    let n = j.n();
    if n < 3 {
        return Err(CouplingError::TooFewIons(n));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        for jj in (i + 1)..n {
            let v = j.get(i, jj).abs();
            if v == 0.0 {
                return Err(CouplingError::ZeroCoupling { i, j: jj });
            }
            xs.push(((jj - i) as f64).ln());
            ys.push(v.ln());
        }
    }
    let m = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(PowerLawFit { j0: j.nearest_neighbor_scale(), alpha: -slope, residual })
}

const ALPHA_TOL: f64 = 1e-3;
const BISECTION_CAP: usize = 200;

/// Invert the alpha(mu) map: find a beatnote in `bracket` whose fitted
/// decay exponent matches `target_alpha` within 1e-3, by bisection.
///
/// Above the center-of-mass mode alpha is monotone increasing in mu, so the
/// bracket endpoints must straddle the target.
pub fn detuning_for_range(
    trap: &TrapConfig,
    raman_template: &RamanConfig,
    target_alpha: f64,
    bracket: (f64, f64),
) -> Result<(RamanConfig, PowerLawFit), CouplingError> {
    let eq = solve_equilibrium(trap)?;
    let modes = transverse_modes(trap, &eq)?;
    let alpha_at = |mu: f64| -> Result<PowerLawFit, CouplingError> {
        let mut r = raman_template.clone();
        r.beatnote = mu;
        fit_power_law(&compute_couplings(&r, &modes)?)
    };
    let (mut lo, mut hi) = bracket;
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let f_lo = alpha_at(lo)?.alpha;
    let f_hi = alpha_at(hi)?.alpha;
    if (target_alpha - f_lo) * (target_alpha - f_hi) > 0.0 {
        return Err(CouplingError::NoSolution {
            lo,
            hi,
            target: target_alpha,
            alpha_lo: f_lo,
            alpha_hi: f_hi,
        });
    }
    let increasing = f_hi > f_lo;
    let mut fit = alpha_at(0.5 * (lo + hi))?;
    for _ in 0..BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        fit = alpha_at(mid)?;
        if (fit.alpha - target_alpha).abs() <= ALPHA_TOL {
            let mut r = raman_template.clone();
            r.beatnote = mid;
            return Ok((r, fit));
        }
        if (fit.alpha < target_alpha) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(CouplingError::NoSolution {
        lo,
        hi,
        target: target_alpha,
        alpha_lo: fit.alpha,
        alpha_hi: fit.alpha,
    })
}

/// Parameters of the two-frequency light field used for site shifts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LightShiftParams {
    /// Resonant Rabi frequency of the S -> P transition [rad/s].
    pub g0: f64,
    /// Laser detuning from the P states [rad/s].
    pub delta: f64,
    /// Comb beatnote offset from the qubit frequency [rad/s].
    pub delta2: f64,
    /// Qubit hyperfine splitting [rad/s].
    pub qubit_freq: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FourthOrderShift {
    /// Fourth-order shift of the qubit frequency [rad/s].
    pub shift4: f64,
    /// Ratio of the fourth-order to the second-order light shift.
    pub ratio_to_second_order: f64,
}

/// Fourth-order light shift `(g0^2/2 delta)^2 / (2 delta2)` and its strength
/// relative to the second-order shift, `g0^2 / (4 delta2 w_hf)`.
pub fn fourth_order_shift(p: &LightShiftParams) -> Result<FourthOrderShift, CouplingError> {
    if p.delta == 0.0 || p.delta2 == 0.0 {
        return Err(CouplingError::InvalidConfig("delta and delta2 must be nonzero".into()));
    }
    let rabi = p.g0 * p.g0 / (2.0 * p.delta);
    Ok(FourthOrderShift {
        shift4: rabi * rabi / (2.0 * p.delta2),
        ratio_to_second_order: p.g0 * p.g0 / (4.0 * p.delta2 * p.qubit_freq),
    })
}
