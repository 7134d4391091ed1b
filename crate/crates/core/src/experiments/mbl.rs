use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::couplings::CouplingMatrix;
use crate::hilbert::{evolve_series, Axis, HamiltonianSpec, Propagator, SpinState, Term};

use super::disorder::DisorderEnsemble;
use super::ExperimentError;

/// Normalized Hamming distance between the current magnetizations and the
/// initial classical pattern `s_i = +-1`:
/// `D = 1/2 - (1/2N) sum_i s_i <sigma_i^z>`.
pub fn hamming_distance(magnetizations: &[f64], initial_pattern: &[i8]) -> f64 {
    assert_eq!(magnetizations.len(), initial_pattern.len(), "length mismatch");
    let n = magnetizations.len() as f64;
    let overlap: f64 = magnetizations
        .iter()
        .zip(initial_pattern)
        .map(|(m, s)| f64::from(*s) * m)
        .sum();
    0.5 - overlap / (2.0 * n)
}

/// Time series from one quench: per-site magnetizations, the Hamming
/// distance, and its steady-state average over the window `J0 t >= 5`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuenchResult {
    pub times: Vec<f64>,
    /// `magnetizations[t][i]` = `<sigma_i^z>` at `times[t]`.
    pub magnetizations: Vec<Vec<f64>>,
    pub hamming: Vec<f64>,
    pub steady_state_hd: f64,
}

/// Ensemble output: per-realization results plus the deterministic mean and
/// the standard error of the steady-state order parameter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MblOutput {
    pub per_realization: Vec<QuenchResult>,
    pub mean: QuenchResult,
    pub steady_state_sem: f64,
}

/// Quench the Neel state under
/// `H = sum_{i<j} J_ij sx sx + (B/2) sum_i sz + sum_i D_i sz`
/// for each disorder realization and average.
///
/// `b` is the full transverse field B; the driver applies the printed B/2
/// coefficient. The steady-state window uses `J0` = mean nearest-neighbor
/// coupling magnitude of `j`.
pub fn run_mbl_quench(
    j: &CouplingMatrix,
    b: f64,
    ensemble: &DisorderEnsemble,
    t_max: f64,
    n_times: usize,
) -> Result<MblOutput, ExperimentError> {
    let n = j.n();
    if n_times < 2 {
        return Err(ExperimentError::InvalidParams("n_times must be >= 2".into()));
    }
    if ensemble.n_realizations == 0 {
        return Err(ExperimentError::InvalidParams("n_realizations must be >= 1".into()));
    }
    let times: Vec<f64> = (0..n_times)
        .map(|k| t_max * k as f64 / (n_times - 1) as f64)
        .collect();
    let j0 = j.nearest_neighbor_scale();
    let pattern: Vec<i8> = (0..n).map(|i| if i % 2 == 0 { -1 } else { 1 }).collect();
    let initial = SpinState::neel_z(n);
    let prop = Propagator::auto(n);

    let per_realization: Vec<QuenchResult> = (0..ensemble.n_realizations)
        .into_par_iter()
        .map(|k| -> Result<QuenchResult, ExperimentError> {
            let fields = ensemble.fields(k, n);
            let spec = HamiltonianSpec::new(
                n,
                vec![
                    Term::IsingXX { couplings: j.clone() },
                    Term::UniformField { axis: Axis::Z, coefficient: b / 2.0 },
                    Term::SiteFields { axis: Axis::Z, values: fields },
                ],
            )
            .map_err(|e| ExperimentError::InvalidParams(e.to_string()))?;
            let states = evolve_series(&initial, &spec, &times, &prop)?;
            let magnetizations: Vec<Vec<f64>> =
                states.iter().map(|s| s.magnetizations(Axis::Z)).collect();
            let hamming: Vec<f64> =
                magnetizations.iter().map(|m| hamming_distance(m, &pattern)).collect();
            let steady_state_hd = steady_state(&times, &hamming, j0);
            Ok(QuenchResult { times: times.clone(), magnetizations, hamming, steady_state_hd })
        })
        .collect::<Result<_, _>>()?;

    // Aggregation in fixed realization order, independent of scheduling.
    let n_real = per_realization.len() as f64;
    let mut mean_mags = vec![vec![0.0; n]; n_times];
    for r in &per_realization {
        for (t, row) in r.magnetizations.iter().enumerate() {
            for (i, m) in row.iter().enumerate() {
                mean_mags[t][i] += m / n_real;
            }
        }
    }
    let mean_hamming: Vec<f64> =
        mean_mags.iter().map(|m| hamming_distance(m, &pattern)).collect();
    let mean_ss = steady_state(&times, &mean_hamming, j0);
    let ss_values: Vec<f64> = per_realization.iter().map(|r| r.steady_state_hd).collect();
    let ss_mean = ss_values.iter().sum::<f64>() / n_real;
    let steady_state_sem = if per_realization.len() > 1 {
        let var =
            ss_values.iter().map(|v| (v - ss_mean).powi(2)).sum::<f64>() / (n_real - 1.0);
        (var / n_real).sqrt()
    } else {
        0.0
    };
    let mean = QuenchResult {
        times: times.clone(),
        magnetizations: mean_mags,
        hamming: mean_hamming,
        steady_state_hd: mean_ss,
    };
    Ok(MblOutput { per_realization, mean, steady_state_sem })
}

fn steady_state(times: &[f64], hamming: &[f64], j0: f64) -> f64 {
    let threshold = if j0 > 0.0 { 5.0 / j0 } else { 0.0 };
    let window: Vec<f64> = times
        .iter()
        .zip(hamming)
        .filter(|(t, _)| **t >= threshold)
        .map(|(_, h)| *h)
        .collect();
    if window.is_empty() {
        f64::NAN
    } else {
        window.iter().sum::<f64>() / window.len() as f64
    }
}
