//! End-to-end measurement protocols: disordered quench (MBL),
//! prethermalization, the driven discrete time crystal, and coupling
//! spectroscopy. Each driver produces per-realization results plus
//! deterministic ensemble aggregates.

mod disorder;
mod dtc;
mod mbl;
mod pretherm;
mod spectroscopy;

pub use disorder::{realization_seed, DisorderEnsemble};
pub use dtc::{dtc_phase_scan, run_dtc, DtcOutput, DtcParams, DtcResult, DtcScan, ScanColumn};
pub use mbl::{hamming_distance, run_mbl_quench, MblOutput, QuenchResult};
pub use pretherm::{run_prethermal, PrethermInitial, PrethermResult};
pub use spectroscopy::{
    classical_splittings, reconstruct_couplings, run_spectroscopy, FlipLabel, LabeledSplitting,
    Peak, ScanTrace, SpectroscopyParams, SpectroscopyScan,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Evolve(#[from] crate::hilbert::EvolveError),
    #[error(transparent)]
    State(#[from] crate::hilbert::StateError),
    #[error("splitting set is underdetermined: rank {rank} < {unknowns} unknowns; pairs without conditional-flip coverage: {missing:?}")]
    Underdetermined { rank: usize, unknowns: usize, missing: Vec<(usize, usize)> },
    #[error("least-squares solve failed: {0}")]
    Linalg(String),
}
