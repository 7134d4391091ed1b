//! Equilibrium geometry and transverse normal modes of a linear ion chain.
//!
//! Positions are computed in units of the characteristic length
//! `l = (q^2 / (4 pi eps0 M wz^2))^(1/3)`, in which the potential of the
//! chain reads `V(u) = sum_i u_i^2 / 2 + sum_{i<j} 1 / |u_i - u_j|`.
//! Transverse modes come from the Hessian of the transverse displacement
//! energy evaluated at that equilibrium, scaled back to physical angular
//! frequencies.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, Solve, UPLO};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{ELEMENTARY_CHARGE, EPSILON_0};

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("invalid trap configuration: {0}")]
    InvalidConfig(String),
    #[error("equilibrium solver did not converge after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },
    #[error("chain unstable at this aspect ratio: transverse mode {mode} has non-positive eigenvalue {lambda:.6e} (in units of wz^2)")]
    Unstable { mode: usize, lambda: f64 },
    #[error("linear algebra failure: {0}")]
    Linalg(String),
}

/// Trap and ion parameters for a linear chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrapConfig {
    pub n_ions: usize,
    /// Axial (weak) angular trap frequency wz [rad/s].
    pub axial_freq: f64,
    /// Transverse angular trap frequency wt [rad/s].
    pub transverse_freq: f64,
    /// Ion mass [kg].
    pub mass: f64,
    /// Charge in units of the elementary charge.
    #[serde(default = "default_charge")]
    pub charge: f64,
}

fn default_charge() -> f64 {
    1.0
}

impl TrapConfig {
    pub fn validate(&self) -> Result<(), ChainError> {
        if self.n_ions < 1 {
            return Err(ChainError::InvalidConfig("n_ions must be >= 1".into()));
        }
        for (name, v) in [
            ("axial_freq", self.axial_freq),
            ("transverse_freq", self.transverse_freq),
            ("mass", self.mass),
            ("charge", self.charge),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ChainError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Characteristic length scale l [m].
    pub fn length_scale(&self) -> f64 {
        let q = self.charge * ELEMENTARY_CHARGE;
        (q * q / (4.0 * std::f64::consts::PI * EPSILON_0 * self.mass * self.axial_freq.powi(2)))
            .cbrt()
    }
}

/// Dimensionless axial equilibrium coordinates, sorted ascending.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumPositions {
    pub positions: Vec<f64>,
}

impl EquilibriumPositions {
    pub fn n(&self) -> usize {
        self.positions.len()
    }
}

/// Transverse phonon eigensystem. Mode 0 is the center-of-mass mode.
#[derive(Debug, Clone)]
pub struct ModeSpectrum {
    /// Angular mode frequencies [rad/s], sorted descending.
    pub frequencies: Vec<f64>,
    /// `eigenvectors[(i, m)]` = amplitude of ion i in mode m; columns orthonormal.
    pub eigenvectors: Array2<f64>,
}

impl ModeSpectrum {
    pub fn n(&self) -> usize {
        self.frequencies.len()
    }
}

fn gradient(u: &[f64]) -> Array1<f64> {
    let n = u.len();
    let mut g = Array1::zeros(n);
    for i in 0..n {
        let mut gi = u[i];
        for j in 0..n {
            if j != i {
                let d = u[i] - u[j];
                gi -= d.signum() / (d * d);
            }
        }
        g[i] = gi;
    }
    g
}

fn hessian(u: &[f64]) -> Array2<f64> {
    let n = u.len();
    let mut h = Array2::zeros((n, n));
    for i in 0..n {
        let mut hii = 1.0;
        for j in 0..n {
            if j != i {
                let r3 = (u[i] - u[j]).abs().powi(3);
                hii += 2.0 / r3;
                h[(i, j)] = -2.0 / r3;
            }
        }
        h[(i, i)] = hii;
    }
    h
}

const MAX_NEWTON_ITERS: usize = 10_000;
const GRAD_TOL: f64 = 1e-12;

/// Solve for the stationary point of the dimensionless chain potential.
///
/// Damped Newton iteration on the gradient, starting from a linear ramp
/// with the empirical minimum-spacing scale `2.018 / N^0.559`.
pub fn solve_equilibrium(trap: &TrapConfig) -> Result<EquilibriumPositions, ChainError> {
    trap.validate()?;
    let n = trap.n_ions;
    if n == 1 {
        return Ok(EquilibriumPositions { positions: vec![0.0] });
    }
    let spacing = 2.018 / (n as f64).powf(0.559);
    let mut u: Vec<f64> = (0..n)
        .map(|i| spacing * (i as f64 - 0.5 * (n as f64 - 1.0)))
        .collect();

    let mut grad_norm = f64::INFINITY;
    for _iter in 0..MAX_NEWTON_ITERS {
        let g = gradient(&u);
        grad_norm = g.dot(&g).sqrt();
        if grad_norm < GRAD_TOL {
            let positions = u;
            return Ok(EquilibriumPositions { positions });
        }
        let h = hessian(&u);
        let step = h
            .solve(&g)
            .map_err(|e| ChainError::Linalg(format!("Newton solve failed: {e}")))?;
        // Backtracking line search on the gradient norm; the full step is
        // accepted in all but the first few iterations.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(ui, si)| ui - lambda * si).collect();
            let ordered = trial.windows(2).all(|w| w[0] < w[1]);
            if ordered {
                let gt = gradient(&trial);
                if gt.dot(&gt).sqrt() < grad_norm {
                    u = trial;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Err(ChainError::NonConvergence { iterations: MAX_NEWTON_ITERS, grad_norm })
}

/// Diagonalize the transverse Hessian
/// `A_ij = d_ij [ (wt/wz)^2 - sum_{k!=i} 1/|u_i-u_k|^3 ] + (1-d_ij)/|u_i-u_j|^3`
/// and return physical mode frequencies `w_m = wz sqrt(lambda_m)`.
pub fn transverse_modes(
    trap: &TrapConfig,
    eq: &EquilibriumPositions,
) -> Result<ModeSpectrum, ChainError> {
    trap.validate()?;
    let n = eq.n();
    if n != trap.n_ions {
        return Err(ChainError::InvalidConfig(format!(
            "equilibrium has {n} ions but trap expects {}",
            trap.n_ions
        )));
    }
    let u = &eq.positions;
    let ratio2 = (trap.transverse_freq / trap.axial_freq).powi(2);
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        let mut aii = ratio2;
        for k in 0..n {
            if k != i {
                let r3 = (u[i] - u[k]).abs().powi(3);
                aii -= 1.0 / r3;
                a[(i, k)] = 1.0 / r3;
            }
        }
        a[(i, i)] = aii;
    }

    let (lambdas, vecs) = a
        .eigh(UPLO::Lower)
        .map_err(|e| ChainError::Linalg(format!("transverse eigensystem failed: {e}")))?;

    // LAPACK returns eigenvalues ascending; reorder to descending frequency
    // so index 0 is the center-of-mass mode.
    let mut freqs = Vec::with_capacity(n);
    let mut cols = Array2::zeros((n, n));
    for m in 0..n {
        let src = n - 1 - m;
        let lambda = lambdas[src];
        if lambda <= 0.0 {
            return Err(ChainError::Unstable { mode: src, lambda });
        }
        freqs.push(trap.axial_freq * lambda.sqrt());
        let mut col: Vec<f64> = (0..n).map(|i| vecs[(i, src)]).collect();
        fix_sign(&mut col);
        for i in 0..n {
            cols[(i, m)] = col[i];
        }
    }
    Ok(ModeSpectrum { frequencies: freqs, eigenvectors: cols })
}

/// Fix the global sign so that the entry sum is nonnegative, tie-broken by
/// making the first nonzero entry positive.
fn fix_sign(col: &mut [f64]) {
    let sum: f64 = col.iter().sum();
    let flip = if sum.abs() > 1e-9 {
        sum < 0.0
    } else {
        match col.iter().find(|x| x.abs() > 1e-12) {
            Some(x) => *x < 0.0,
            None => false,
        }
    };
    if flip {
        for x in col.iter_mut() {
            *x = -*x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn trap(n: usize) -> TrapConfig {
        TrapConfig {
            n_ions: n,
            axial_freq: 2.0 * std::f64::consts::PI * 0.5e6,
            transverse_freq: 2.0 * std::f64::consts::PI * 5.0e6,
            mass: crate::constants::YB171_MASS,
            charge: 1.0,
        }
    }

    /// Derivative-free oracle: coordinate-wise golden-section descent of the
    /// chain potential, independent of the Newton path under test.
    fn minimize_oracle(n: usize) -> Vec<f64> {
        let potential = |u: &[f64]| -> f64 {
            let mut v: f64 = u.iter().map(|x| 0.5 * x * x).sum();
            for i in 0..n {
                for j in (i + 1)..n {
                    v += 1.0 / (u[i] - u[j]).abs();
                }
            }
            v
        };
        let spacing = 2.018 / (n as f64).powf(0.559);
        let mut u: Vec<f64> = (0..n)
            .map(|i| spacing * (i as f64 - 0.5 * (n as f64 - 1.0)))
            .collect();
        for _sweep in 0..4000 {
            for i in 0..n {
                let mut lo = u[i] - 0.5;
                let mut hi = u[i] + 0.5;
                for _ in 0..80 {
                    let m1 = lo + 0.381_966 * (hi - lo);
                    let m2 = hi - 0.381_966 * (hi - lo);
                    let mut ua = u.clone();
                    ua[i] = m1;
                    let mut ub = u.clone();
                    ub[i] = m2;
                    if potential(&ua) < potential(&ub) {
                        hi = m2;
                    } else {
                        lo = m1;
                    }
                }
                u[i] = 0.5 * (lo + hi);
            }
        }
        u
    }

    #[test]
    fn single_ion_sits_at_origin() {
        let eq = solve_equilibrium(&trap(1)).unwrap();
        assert_eq!(eq.positions, vec![0.0]);
    }

    #[test]
    fn two_ions_at_quarter_cube_root() {
        // Stationarity: 2d = 1/(2d)^2 with positions at +-d.
        let d = 0.25_f64.cbrt();
        let eq = solve_equilibrium(&trap(2)).unwrap();
        assert_abs_diff_eq!(eq.positions[0], -d, epsilon = 1e-10);
        assert_abs_diff_eq!(eq.positions[1], d, epsilon = 1e-10);
        let oracle = minimize_oracle(2);
        assert_abs_diff_eq!(eq.positions[0], oracle[0], epsilon = 1e-7);
        assert_abs_diff_eq!(eq.positions[1], oracle[1], epsilon = 1e-7);
    }

    #[test]
    fn three_ions_at_five_quarters_cube_root() {
        let d = 1.25_f64.cbrt();
        let eq = solve_equilibrium(&trap(3)).unwrap();
        assert_abs_diff_eq!(eq.positions[0], -d, epsilon = 1e-8);
        assert_abs_diff_eq!(eq.positions[1], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(eq.positions[2], d, epsilon = 1e-8);
        let oracle = minimize_oracle(3);
        for i in 0..3 {
            assert_abs_diff_eq!(eq.positions[i], oracle[i], epsilon = 1e-6);
        }
    }

    #[test]
    fn equilibrium_is_centered_and_mirror_symmetric() {
        for n in [2, 3, 5, 7, 10] {
            let eq = solve_equilibrium(&trap(n)).unwrap();
            let sum: f64 = eq.positions.iter().sum();
            assert!(sum.abs() < 1e-10, "N={n}: center of charge {sum:e}");
            for i in 0..n {
                assert_abs_diff_eq!(eq.positions[i], -eq.positions[n - 1 - i], epsilon = 1e-8);
            }
            assert!(eq.positions.windows(2).all(|w| w[0] < w[1]));
            let g = gradient(&eq.positions);
            assert!(g.dot(&g).sqrt() < 1e-10);
        }
    }

    #[test]
    fn axial_frequency_rescaling_law() {
        // Doubling wz leaves the dimensionless problem unchanged; the
        // physical positions scale through length_scale as 2^(-2/3).
        let t1 = trap(5);
        let mut t2 = t1.clone();
        t2.axial_freq *= 2.0;
        let e1 = solve_equilibrium(&t1).unwrap();
        let e2 = solve_equilibrium(&t2).unwrap();
        for (a, b) in e1.positions.iter().zip(&e2.positions) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(
            t2.length_scale() / t1.length_scale(),
            2.0_f64.powf(-2.0 / 3.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn com_mode_is_top_and_uniform() {
        for n in [2, 3, 6, 10] {
            let t = trap(n);
            let eq = solve_equilibrium(&t).unwrap();
            let modes = transverse_modes(&t, &eq).unwrap();
            assert_abs_diff_eq!(modes.frequencies[0], t.transverse_freq, epsilon = 1e-10 * t.transverse_freq);
            let uniform = 1.0 / (n as f64).sqrt();
            for i in 0..n {
                assert_abs_diff_eq!(modes.eigenvectors[(i, 0)], uniform, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn two_ion_tilt_mode() {
        let t = trap(2);
        let eq = solve_equilibrium(&t).unwrap();
        let modes = transverse_modes(&t, &eq).unwrap();
        let expect = (t.transverse_freq.powi(2) - t.axial_freq.powi(2)).sqrt();
        assert_abs_diff_eq!(modes.frequencies[1], expect, epsilon = 1e-9 * expect);
        let s = 1.0 / 2.0_f64.sqrt();
        let b = &modes.eigenvectors;
        assert_abs_diff_eq!((b[(0, 1)] - b[(1, 1)]).abs(), 2.0 * s, epsilon = 1e-10);
    }

    #[test]
    fn modes_orthonormal_and_reconstruct_hessian() {
        let t = trap(7);
        let eq = solve_equilibrium(&t).unwrap();
        let modes = transverse_modes(&t, &eq).unwrap();
        let n = 7;
        let b = &modes.eigenvectors;
        for m1 in 0..n {
            for m2 in 0..n {
                let dot: f64 = (0..n).map(|i| b[(i, m1)] * b[(i, m2)]).sum();
                let expect = if m1 == m2 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot, expect, epsilon = 1e-10);
            }
        }
        // Reconstruct A = B diag(lambda) B^T in wz^2 units.
        let wz2 = t.axial_freq.powi(2);
        let u = &eq.positions;
        for i in 0..n {
            for j in 0..n {
                let recon: f64 = (0..n)
                    .map(|m| b[(i, m)] * b[(j, m)] * modes.frequencies[m].powi(2) / wz2)
                    .sum();
                let direct = if i == j {
                    (t.transverse_freq / t.axial_freq).powi(2)
                        - (0..n)
                            .filter(|&k| k != i)
                            .map(|k| 1.0 / (u[i] - u[k]).abs().powi(3))
                            .sum::<f64>()
                } else {
                    1.0 / (u[i] - u[j]).abs().powi(3)
                };
                assert_abs_diff_eq!(recon, direct, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn frequencies_sorted_with_unique_uniform_mode() {
        let t = trap(6);
        let eq = solve_equilibrium(&t).unwrap();
        let modes = transverse_modes(&t, &eq).unwrap();
        assert!(modes.frequencies.windows(2).all(|w| w[0] >= w[1]));
        let uniform_count = (0..6)
            .filter(|&m| {
                let signs: Vec<f64> = (0..6).map(|i| modes.eigenvectors[(i, m)].signum()).collect();
                signs.iter().all(|s| *s == signs[0])
            })
            .count();
        assert_eq!(uniform_count, 1);
    }

    #[test]
    fn unstable_aspect_ratio_reports_mode() {
        let mut t = trap(10);
        // Squeeze the transverse confinement below the zigzag threshold.
        t.transverse_freq = 1.2 * t.axial_freq;
        let eq = solve_equilibrium(&t).unwrap();
        match transverse_modes(&t, &eq) {
            Err(ChainError::Unstable { .. }) => {}
            other => panic!("expected instability, got {other:?}"),
        }
    }
}
