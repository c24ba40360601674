//! Run manifests: everything needed to repeat a run.

use serde::{Deserialize, Serialize};

use crate::constants::Constants;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Fully resolved parameters of the subcommand.
    pub parameters: serde_json::Value,
    pub rng_seed: u64,
    pub jobs: usize,
    pub constants: Constants,
    /// Grid sizes actually used, in run order.
    pub grids: Vec<GridUse>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridUse {
    pub label: String,
    pub n: usize,
    pub rows: usize,
    pub side: f64,
}
