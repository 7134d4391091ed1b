use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("site {site} out of range for {n} spins")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("product-state description has {given} sites but {n} spins were requested")]
    SpecLengthMismatch { given: usize, n: usize },
    #[error("state of {n} spins needs {expected} amplitudes, got {given}")]
    DimensionMismatch { n: usize, expected: usize, given: usize },
    #[error("state norm {0} differs from 1 by more than 1e-10")]
    NotNormalized(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Local orientation of one spin in a product state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalSpin {
    pub axis: Axis,
    pub up: bool,
}

impl LocalSpin {
    pub const UP_Z: LocalSpin = LocalSpin { axis: Axis::Z, up: true };
    pub const DOWN_Z: LocalSpin = LocalSpin { axis: Axis::Z, up: false };
    pub const UP_X: LocalSpin = LocalSpin { axis: Axis::X, up: true };
    pub const DOWN_X: LocalSpin = LocalSpin { axis: Axis::X, up: false };

    /// Amplitudes (down-z component, up-z component).
    ///
    /// Sign conventions: |down>_x = (|down>_z - |up>_z)/sqrt(2), and the y
    /// eigenstates follow sigma_y |down>_z = -i |up>_z.
    fn local_amplitudes(&self) -> [Complex64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let r = |x: f64| Complex64::new(x, 0.0);
        let im = |x: f64| Complex64::new(0.0, x);
        match (self.axis, self.up) {
            (Axis::Z, true) => [r(0.0), r(1.0)],
            (Axis::Z, false) => [r(1.0), r(0.0)],
            (Axis::X, true) => [r(s), r(s)],
            (Axis::X, false) => [r(s), r(-s)],
            (Axis::Y, true) => [r(s), im(-s)],
            (Axis::Y, false) => [r(s), im(s)],
        }
    }
}

/// Normalized pure state of `n_spins` spin-1/2 particles.
#[derive(Debug, Clone)]
pub struct SpinState {
    n_spins: usize,
    amplitudes: Vec<Complex64>,
}

impl SpinState {
    pub fn new(n_spins: usize, amplitudes: Vec<Complex64>) -> Result<Self, StateError> {
        let expected = 1usize << n_spins;
        if amplitudes.len() != expected {
            return Err(StateError::DimensionMismatch { n: n_spins, expected, given: amplitudes.len() });
        }
        let state = SpinState { n_spins, amplitudes };
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(StateError::NotNormalized(norm));
        }
        Ok(state)
    }

    /// Basis state |index> in the z basis.
    pub fn basis_state(n_spins: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::ZERO; 1 << n_spins];
        amplitudes[index] = Complex64::ONE;
        SpinState { n_spins, amplitudes }
    }

    /// Product state with the requested local orientation at each site.
    pub fn product(sites: &[LocalSpin]) -> Result<Self, StateError> {
        let n = sites.len();
        if n == 0 {
            return Err(StateError::SpecLengthMismatch { given: 0, n: 1 });
        }
        let dim = 1usize << n;
        let mut amplitudes = Vec::with_capacity(dim);
        for idx in 0..dim {
            let mut a = Complex64::ONE;
            for (site, spec) in sites.iter().enumerate() {
                let bit = (idx >> site) & 1;
                a *= spec.local_amplitudes()[bit];
            }
            amplitudes.push(a);
        }
        Ok(SpinState { n_spins: n, amplitudes })
    }

    /// All spins down along z.
    pub fn all_down_z(n: usize) -> Self {
        SpinState::basis_state(n, 0)
    }

    /// All spins down along x.
    pub fn all_down_x(n: usize) -> Self {
        SpinState::product(&vec![LocalSpin::DOWN_X; n]).expect("n >= 1")
    }

    /// Staggered state |down up down up ...> along z (site 0 down).
    pub fn neel_z(n: usize) -> Self {
        let mut index = 0usize;
        for site in (1..n).step_by(2) {
            index |= 1 << site;
        }
        SpinState::basis_state(n, index)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn from_raw(n_spins: usize, amplitudes: Vec<Complex64>) -> Self {
        SpinState { n_spins, amplitudes }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// <self|other>.
    pub fn inner(&self, other: &SpinState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Overlap probability |<self|other>|^2.
    pub fn fidelity(&self, other: &SpinState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Expectation value <sigma_site^axis>, real by hermiticity.
    pub fn measure(&self, site: usize, axis: Axis) -> Result<f64, StateError> {
        if site >= self.n_spins {
            return Err(StateError::SiteOutOfRange { site, n: self.n_spins });
        }
        let mask = 1usize << site;
        let a = &self.amplitudes;
        let value = match axis {
            Axis::Z => a
                .iter()
                .enumerate()
                .map(|(idx, amp)| {
                    let sign = if idx & mask != 0 { 1.0 } else { -1.0 };
                    sign * amp.norm_sqr()
                })
                .sum(),
            Axis::X => a
                .iter()
                .enumerate()
                .map(|(idx, amp)| (a[idx ^ mask].conj() * amp).re)
                .sum(),
            Axis::Y => a
                .iter()
                .enumerate()
                .map(|(idx, amp)| {
                    // <idx^mask| sigma_y |idx> = -i for bit 0, +i for bit 1.
                    let phase = if idx & mask != 0 {
                        Complex64::new(0.0, 1.0)
                    } else {
                        Complex64::new(0.0, -1.0)
                    };
                    (a[idx ^ mask].conj() * phase * amp).re
                })
                .sum(),
        };
        Ok(value)
    }

    /// Per-site magnetization vector along `axis`.
    pub fn magnetizations(&self, axis: Axis) -> Vec<f64> {
        (0..self.n_spins)
            .map(|i| self.measure(i, axis).expect("site in range"))
            .collect()
    }
}
