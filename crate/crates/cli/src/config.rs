use esboot::experiments::{table_scenarios, Scenario, TABLE_SAMPLE_SIZES};
use esboot::{GarchParams, InnovationDist, QmleOptions};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::CliError;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn default_burn_in() -> usize {
    1000
}

fn default_gamma() -> f64 {
    0.10
}

fn default_replicates() -> usize {
    500
}

fn default_grid() -> usize {
    512
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub theta: GarchParams,
    pub dist: InnovationDist,
    pub n: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// CSV with an `epsilon` column.
    pub input: PathBuf,
    #[serde(default)]
    pub qmle: QmleOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsConfig {
    pub input: PathBuf,
    pub alpha: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub qmle: QmleOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    pub input: PathBuf,
    pub alpha: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_replicates")]
    pub b: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub qmle: QmleOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub table: u8,
    #[serde(default = "table_sizes")]
    pub n: Vec<usize>,
}

fn table_sizes() -> Vec<usize> {
    TABLE_SAMPLE_SIZES.to_vec()
}

/// Explicit scenarios, a published table layout, or both.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub table: Option<TableSpec>,
}

impl StudyConfig {
    pub fn expand(&self) -> Result<Vec<Scenario>, CliError> {
        let mut out = self.scenarios.clone();
        if let Some(t) = &self.table {
            out.extend(table_scenarios(t.table, &t.n)?);
        }
        if out.is_empty() {
            return Err(CliError::Config("study config lists no scenarios".into()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub scenario: Scenario,
    #[serde(default = "default_grid")]
    pub grid: usize,
}
