use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::couplings::CouplingMatrix;

use super::state::{Axis, SpinState};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("term {index} acts on {term_n} spins but the spec declares {n}")]
    DimensionMismatch { index: usize, term_n: usize, n: usize },
    #[error("at most one modulated field term is allowed, found {0}")]
    MultipleModulatedTerms(usize),
}

/// One summand of a spin Hamiltonian.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Term {
    /// `sum_{i<j} J_ij sigma_i^x sigma_j^x`.
    IsingXX { couplings: CouplingMatrix },
    /// `coefficient * sum_i sigma_i^axis`. The coefficient is the literal
    /// multiplier; callers own any B/2 convention.
    UniformField { axis: Axis, coefficient: f64 },
    /// `sum_i values[i] sigma_i^axis`.
    SiteFields { axis: Axis, values: Vec<f64> },
    /// `(b0 + bp sin(2 pi freq t)) * sum_i sigma_i^axis`.
    ModulatedField { axis: Axis, b0: f64, bp: f64, freq: f64 },
}

/// Declarative sum-of-terms Hamiltonian for `n_spins` spins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    n_spins: usize,
    terms: Vec<Term>,
}

impl HamiltonianSpec {
    pub fn new(n_spins: usize, terms: Vec<Term>) -> Result<Self, SpecError> {
        let mut modulated = 0usize;
        for (index, term) in terms.iter().enumerate() {
            match term {
                Term::IsingXX { couplings } => {
                    if couplings.n() != n_spins {
                        return Err(SpecError::DimensionMismatch {
                            index,
                            term_n: couplings.n(),
                            n: n_spins,
                        });
                    }
                }
                Term::SiteFields { values, .. } => {
                    if values.len() != n_spins {
                        return Err(SpecError::DimensionMismatch {
                            index,
                            term_n: values.len(),
                            n: n_spins,
                        });
                    }
                }
                Term::ModulatedField { .. } => modulated += 1,
                Term::UniformField { .. } => {}
            }
        }
        if modulated > 1 {
            return Err(SpecError::MultipleModulatedTerms(modulated));
        }
        Ok(HamiltonianSpec { n_spins, terms })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_time_dependent(&self) -> bool {
        self.terms
            .iter()
            .any(|t| matches!(t, Term::ModulatedField { bp, .. } if *bp != 0.0))
    }

    /// Drive frequency of the modulated term, if any [cycles per time unit].
    pub fn drive_frequency(&self) -> Option<f64> {
        self.terms.iter().find_map(|t| match t {
            Term::ModulatedField { freq, bp, .. } if *bp != 0.0 => Some(*freq),
            _ => None,
        })
    }

    /// Upper bound on the spectral radius: sum of absolute term coefficients.
    pub fn norm_bound(&self) -> f64 {
        let n = self.n_spins as f64;
        self.terms
            .iter()
            .map(|t| match t {
                Term::IsingXX { couplings } => {
                    let m = couplings.n();
                    let mut sum = 0.0;
                    for i in 0..m {
                        for j in (i + 1)..m {
                            sum += couplings.get(i, j).abs();
                        }
                    }
                    sum
                }
                Term::UniformField { coefficient, .. } => n * coefficient.abs(),
                Term::SiteFields { values, .. } => values.iter().map(|v| v.abs()).sum(),
                Term::ModulatedField { b0, bp, .. } => n * (b0.abs() + bp.abs()),
            })
            .sum()
    }

    /// H|psi> at time `t` (unnormalized result vector).
    pub fn apply(&self, state: &SpinState, t: f64) -> SpinState {
        let mut out = vec![Complex64::ZERO; state.dim()];
        self.apply_into(state.amplitudes(), &mut out, t);
        SpinState::from_raw(self.n_spins, out)
    }

    /// Matrix-free action on a raw amplitude slice, accumulated into `out`.
    pub(crate) fn apply_into(&self, a: &[Complex64], out: &mut [Complex64], t: f64) {
        for term in &self.terms {
            match term {
                Term::IsingXX { couplings } => {
                    let m = couplings.n();
                    for i in 0..m {
                        for j in (i + 1)..m {
                            let jij = couplings.get(i, j);
                            if jij != 0.0 {
                                let mask = (1usize << i) | (1usize << j);
                                for idx in 0..a.len() {
                                    out[idx ^ mask] += jij * a[idx];
                                }
                            }
                        }
                    }
                }
                Term::UniformField { axis, coefficient } => {
                    self.field_into(a, out, *axis, |_| *coefficient);
                }
                Term::SiteFields { axis, values } => {
                    self.field_into(a, out, *axis, |site| values[site]);
                }
                Term::ModulatedField { axis, b0, bp, freq } => {
                    let c = b0 + bp * (2.0 * std::f64::consts::PI * freq * t).sin();
                    self.field_into(a, out, *axis, |_| c);
                }
            }
        }
    }

    fn field_into(
        &self,
        a: &[Complex64],
        out: &mut [Complex64],
        axis: Axis,
        coeff: impl Fn(usize) -> f64,
    ) {
        match axis {
            Axis::Z => {
                for idx in 0..a.len() {
                    let mut c = 0.0;
                    for site in 0..self.n_spins {
                        let sign = if idx >> site & 1 == 1 { 1.0 } else { -1.0 };
                        c += sign * coeff(site);
                    }
                    out[idx] += c * a[idx];
                }
            }
            Axis::X => {
                for site in 0..self.n_spins {
                    let c = coeff(site);
                    if c != 0.0 {
                        let mask = 1usize << site;
                        for idx in 0..a.len() {
                            out[idx ^ mask] += c * a[idx];
                        }
                    }
                }
            }
            Axis::Y => {
                for site in 0..self.n_spins {
                    let c = coeff(site);
                    if c != 0.0 {
                        let mask = 1usize << site;
                        for idx in 0..a.len() {
                            // sigma_y |0> = -i |1>, sigma_y |1> = +i |0>.
                            let phase = if idx & mask != 0 {
                                Complex64::new(0.0, c)
                            } else {
                                Complex64::new(0.0, -c)
                            };
                            out[idx ^ mask] += phase * a[idx];
                        }
                    }
                }
            }
        }
    }

    /// Dense matrix at time `t`, built column-by-column from the kernels.
    pub fn dense(&self, t: f64) -> Array2<Complex64> {
        let dim = 1usize << self.n_spins;
        let mut h = Array2::zeros((dim, dim));
        let mut basis = vec![Complex64::ZERO; dim];
        let mut col = vec![Complex64::ZERO; dim];
        for jdx in 0..dim {
            basis[jdx] = Complex64::ONE;
            col.fill(Complex64::ZERO);
            self.apply_into(&basis, &mut col, t);
            for idx in 0..dim {
                h[(idx, jdx)] = col[idx];
            }
            basis[jdx] = Complex64::ZERO;
        }
        h
    }
}
