//! Run configuration: one TOML file per run, tagged by a top-level
//! `experiment` key. Unknown keys are rejected so a typo cannot silently
//! fall back to a default.

use serde::{Deserialize, Serialize};
use std::path::Path;

use ionsim_core::constants::YB171_MASS;
use ionsim_core::experiments::PrethermInitial;
use ionsim_core::{CouplingMatrix, RamanConfig, TrapConfig};

use crate::CliError;

fn default_charge() -> f64 {
    1.0
}
fn default_mass() -> f64 {
    YB171_MASS
}

/// Trap parameters [SI units, angular frequencies].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub n_ions: usize,
    pub axial_freq: f64,
    pub transverse_freq: f64,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default = "default_charge")]
    pub charge: f64,
}

impl TrapSection {
    pub fn to_core(&self) -> TrapConfig {
        TrapConfig {
            n_ions: self.n_ions,
            axial_freq: self.axial_freq,
            transverse_freq: self.transverse_freq,
            mass: self.mass,
            charge: self.charge,
        }
    }
}

/// Raman beam parameters. `beatnote` may be omitted when a `target_alpha`
/// is given instead (the detuning is then solved for).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamanSection {
    pub rabi_freq: f64,
    pub delta_k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beatnote: Option<f64>,
}

impl RamanSection {
    pub fn to_core(&self, beatnote: f64, mass: f64) -> RamanConfig {
        RamanConfig::from_delta_k(self.rabi_freq, beatnote, self.delta_k, mass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesConfig {
    pub trap: TrapSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingsConfig {
    pub trap: TrapSection,
    pub raman: RamanSection,
    /// Solve for the beatnote reproducing this power-law exponent instead of
    /// using `raman.beatnote` directly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_alpha: Option<f64>,
}

fn default_mbl_n() -> usize {
    10
}
fn default_alpha_one() -> f64 {
    1.0
}
fn default_j0() -> f64 {
    1.0
}
fn default_b_over_j0() -> f64 {
    4.0
}
fn default_t_max_j0() -> f64 {
    10.0
}
fn default_n_times() -> usize {
    100
}
fn default_mbl_realizations() -> usize {
    30
}
fn default_seed() -> u64 {
    0
}

/// Disordered quench from the Neel state. Couplings are the power-law
/// idealization `J0 / |i-j|^alpha`; fields are quoted in units of `J0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MblConfig {
    #[serde(default = "default_mbl_n")]
    pub n: usize,
    #[serde(default = "default_alpha_one")]
    pub alpha: f64,
    #[serde(default = "default_j0")]
    pub j0: f64,
    #[serde(default = "default_b_over_j0")]
    pub b_over_j0: f64,
    pub w_over_j0: f64,
    #[serde(default = "default_t_max_j0")]
    pub t_max_j0: f64,
    #[serde(default = "default_n_times")]
    pub n_times: usize,
    #[serde(default = "default_mbl_realizations")]
    pub n_realizations: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_pretherm_n() -> usize {
    7
}
fn default_b_over_j0_pretherm() -> f64 {
    20.0
}
fn default_t_max_j0_pretherm() -> f64 {
    25.0
}
fn default_initial() -> PrethermInitial {
    PrethermInitial::Left
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrethermConfig {
    #[serde(default = "default_pretherm_n")]
    pub n: usize,
    pub alpha: f64,
    #[serde(default = "default_j0")]
    pub j0: f64,
    #[serde(default = "default_b_over_j0_pretherm")]
    pub b_over_j0: f64,
    #[serde(default = "default_initial")]
    pub initial: PrethermInitial,
    #[serde(default = "default_t_max_j0_pretherm")]
    pub t_max_j0: f64,
    #[serde(default = "default_n_times")]
    pub n_times: usize,
}

fn default_dtc_n() -> usize {
    10
}
fn default_dtc_alpha() -> f64 {
    1.5
}
fn default_unit_time() -> f64 {
    1.0
}
fn default_n_periods() -> usize {
    100
}
fn default_dtc_realizations() -> usize {
    10
}

/// Driven chain. `g` defaults to `pi / (2 t1)` (an exact pi pulse) and the
/// disorder width to `pi / t3`; only the dimensionless products matter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtcConfig {
    #[serde(default = "default_dtc_n")]
    pub n: usize,
    #[serde(default = "default_dtc_alpha")]
    pub alpha: f64,
    pub j0t2: f64,
    pub epsilon: f64,
    #[serde(default = "default_unit_time")]
    pub t1: f64,
    pub t2: f64,
    #[serde(default = "default_unit_time")]
    pub t3: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default = "default_n_periods")]
    pub n_periods: usize,
    #[serde(default = "default_dtc_realizations")]
    pub n_realizations: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtcScanConfig {
    #[serde(default = "default_dtc_n")]
    pub n: usize,
    #[serde(default = "default_dtc_alpha")]
    pub alpha: f64,
    pub epsilons: Vec<f64>,
    pub j0t2_values: Vec<f64>,
    #[serde(default = "default_unit_time")]
    pub t1: f64,
    pub t2: f64,
    #[serde(default = "default_unit_time")]
    pub t3: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default = "default_n_periods")]
    pub n_periods: usize,
    #[serde(default = "default_dtc_realizations")]
    pub n_realizations: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_false() -> bool {
    false
}
fn default_b0() -> f64 {
    0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectroscopyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "default_j0")]
    pub j0: f64,
    /// Explicit coupling matrix; overrides `n`/`alpha`/`j0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_b0")]
    pub b0: f64,
    pub bp: f64,
    pub duration: f64,
    pub probe_start: f64,
    pub probe_stop: f64,
    pub probe_points: usize,
    #[serde(default = "default_false")]
    pub measure_conditional: bool,
}

impl SpectroscopyConfig {
    pub fn coupling_matrix(&self) -> Result<CouplingMatrix, CliError> {
        if let Some(rows) = &self.matrix {
            let n = rows.len();
            let mut values = ndarray::Array2::zeros((n, n));
            for (i, row) in rows.iter().enumerate() {
                if row.len() != n {
                    return Err(CliError::Config(format!(
                        "matrix row {i} has {} entries, expected {n}",
                        row.len()
                    )));
                }
                for (k, v) in row.iter().enumerate() {
                    values[[i, k]] = *v;
                }
            }
            CouplingMatrix::new(values).map_err(|e| CliError::Config(e.to_string()))
        } else {
            match (self.n, self.alpha) {
                (Some(n), Some(alpha)) => Ok(CouplingMatrix::power_law(n, self.j0, alpha)),
                _ => Err(CliError::Config(
                    "missing required: either matrix or both n and alpha".into(),
                )),
            }
        }
    }
}

/// A fully validated run: the experiment kind plus its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum RunConfig {
    Modes(ModesConfig),
    Couplings(CouplingsConfig),
    Mbl(MblConfig),
    Pretherm(PrethermConfig),
    Dtc(DtcConfig),
    DtcScan(DtcScanConfig),
    Spectroscopy(SpectroscopyConfig),
}

impl RunConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            RunConfig::Modes(_) => "modes",
            RunConfig::Couplings(_) => "couplings",
            RunConfig::Mbl(_) => "mbl",
            RunConfig::Pretherm(_) => "pretherm",
            RunConfig::Dtc(_) => "dtc",
            RunConfig::DtcScan(_) => "dtc-scan",
            RunConfig::Spectroscopy(_) => "spectroscopy",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            RunConfig::Mbl(c) => Some(c.seed),
            RunConfig::Dtc(c) => Some(c.seed),
            RunConfig::DtcScan(c) => Some(c.seed),
            _ => None,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            RunConfig::Mbl(c) => c.seed = seed,
            RunConfig::Dtc(c) => c.seed = seed,
            RunConfig::DtcScan(c) => c.seed = seed,
            _ => {}
        }
    }

    /// Serialize back to the on-disk format (`experiment` key plus body).
    pub fn to_toml_string(&self) -> Result<String, CliError> {
        let body = match self {
            RunConfig::Modes(c) => toml::to_string(c),
            RunConfig::Couplings(c) => toml::to_string(c),
            RunConfig::Mbl(c) => toml::to_string(c),
            RunConfig::Pretherm(c) => toml::to_string(c),
            RunConfig::Dtc(c) => toml::to_string(c),
            RunConfig::DtcScan(c) => toml::to_string(c),
            RunConfig::Spectroscopy(c) => toml::to_string(c),
        }
        .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(format!("experiment = \"{}\"\n{}", self.kind(), body))
    }
}

fn schema_error(e: toml::de::Error) -> CliError {
    let msg = e.to_string();
    // Surface missing keys uniformly.
    let rewritten = match msg.split("missing field `").nth(1) {
        Some(rest) => match rest.split('`').next() {
            Some(key) => format!("missing required: {key}"),
            None => msg,
        },
        None => msg,
    };
    CliError::Config(rewritten)
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let kind = match table.remove("experiment") {
        Some(toml::Value::String(s)) => s,
        Some(_) => return Err(CliError::Config("experiment must be a string".into())),
        None => return Err(CliError::Config("missing required: experiment".into())),
    };
    let body = toml::Value::Table(table);
    let config = match kind.as_str() {
        "modes" => RunConfig::Modes(body.try_into().map_err(schema_error)?),
        "couplings" => RunConfig::Couplings(body.try_into().map_err(schema_error)?),
        "mbl" => RunConfig::Mbl(body.try_into().map_err(schema_error)?),
        "pretherm" => RunConfig::Pretherm(body.try_into().map_err(schema_error)?),
        "dtc" => RunConfig::Dtc(body.try_into().map_err(schema_error)?),
        "dtc-scan" => RunConfig::DtcScan(body.try_into().map_err(schema_error)?),
        "spectroscopy" => RunConfig::Spectroscopy(body.try_into().map_err(schema_error)?),
        other => {
            return Err(CliError::Config(format!(
                "unknown experiment kind \"{other}\""
            )))
        }
    };
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}
