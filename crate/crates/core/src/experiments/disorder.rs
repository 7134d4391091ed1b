use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Seeded specification of random site-field realizations.
///
/// Site fields are uniform on `[-width/2, width/2]`, independent across
/// sites and realizations. Realization `k` draws from a ChaCha8 stream
/// seeded with [`realization_seed`], so any external tool can regenerate a
/// single realization without replaying the whole ensemble.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DisorderEnsemble {
    /// Width W of the uniform distribution (same units as the couplings).
    pub width: f64,
    pub n_realizations: usize,
    pub seed: u64,
}

/// Per-realization seed: the first 8 bytes (little-endian) of
/// `SHA-256(master_seed_le || k_le)` with both inputs as 8-byte
/// little-endian words.
pub fn realization_seed(master_seed: u64, k: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(k.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

impl DisorderEnsemble {
    /// Site fields `D_i` for realization `k` on `n` sites.
    pub fn fields(&self, k: usize, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(realization_seed(self.seed, k as u64));
        (0..n).map(|_| self.width * (rng.gen::<f64>() - 0.5)).collect()
    }

    /// No-disorder ensemble with a single trivial realization.
    pub fn none() -> Self {
        DisorderEnsemble { width: 0.0, n_realizations: 1, seed: 0 }
    }
}
