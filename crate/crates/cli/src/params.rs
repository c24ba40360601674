//! Per-subcommand parameter schemas. Unknown keys are rejected.

use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thinfilm_core::minimize::MinimizeOptions;
use thinfilm_core::{PhysicalParams, ReducedParams, LAMBDA_C};
use thinfilm_experiments::domain::DomainOptions;
use thinfilm_experiments::GridRule;

use crate::{CliError, Result};

/// Reduced `F_{ε,λ}` or physical `J` on the unit torus.
pub enum Model {
    Reduced(ReducedParams<f64>),
    Physical(PhysicalParams<f64>),
}

pub fn model(eps: Option<f64>, lambda: f64, ell: Option<f64>, t: Option<f64>, q: Option<f64>) -> Result<Model> {
    match (eps, ell, t, q) {
        (Some(e), None, None, None) => Ok(Model::Reduced(ReducedParams::new(e, lambda)?)),
        (None, Some(ell), Some(t), Some(q)) => {
            if lambda != 0.0 {
                return Err(CliError::Config("lambda is derived from (ell, t, q) for the physical model".into()));
            }
            Ok(Model::Physical(PhysicalParams::new(ell, t, q, None)?))
        }
        _ => Err(CliError::Config("give either eps (reduced model) or all of ell, t, q (physical model)".into())),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyParams {
    pub input: PathBuf,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub ell: Option<f64>,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub q: Option<f64>,
    /// MFD1 scalar dump of the external field `g` (reduced model only).
    #[serde(default)]
    pub external_field: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimizeParams {
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub ell: Option<f64>,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub q: Option<f64>,
    /// Grid side in samples; derived from the wall width when absent.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub x2_invariant: bool,
    #[serde(default)]
    pub external_field: Option<PathBuf>,
    #[serde(default)]
    pub options: MinimizeOptions,
}

fn default_grid_rule() -> GridRule {
    GridRule::default()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    pub eps: Vec<f64>,
    pub lambda: Vec<f64>,
    #[serde(default = "default_grid_rule")]
    pub grid: GridRule,
    #[serde(default)]
    pub options: MinimizeOptions,
}

fn two_lambda_c() -> f64 {
    2.0 * LAMBDA_C
}

fn default_tol() -> f64 {
    0.01
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BisectParams {
    pub eps: Vec<f64>,
    #[serde(default)]
    pub lambda_lo: f64,
    #[serde(default = "two_lambda_c")]
    pub lambda_hi: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_grid_rule")]
    pub grid: GridRule,
    #[serde(default)]
    pub options: MinimizeOptions,
}

/// Cutoff radius written as a number or the string `"inf"`.
pub mod cutoff {
    use super::*;

    pub fn serialize<S: Serializer>(r: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if r.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*r)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) if s == "inf" || s == "infinity" => Ok(f64::INFINITY),
            Raw::Str(s) => s.parse().map_err(|_| serde::de::Error::custom(format!("bad cutoff {s:?}"))),
        }
    }
}

fn infinite() -> f64 {
    f64::INFINITY
}

fn default_points() -> usize {
    101
}

fn default_half_width() -> f64 {
    5.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileParams {
    pub eps: f64,
    #[serde(rename = "R", with = "cutoff", default = "infinite")]
    pub r: f64,
    /// Odd number of samples, symmetric about the wall centre.
    #[serde(default = "default_points")]
    pub points: usize,
    /// Table half-width in units of ε.
    #[serde(default = "default_half_width")]
    pub half_width: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrayfieldParams {
    pub n: usize,
    pub side: f64,
    pub t: Vec<f64>,
    pub nz_start: usize,
    pub nz_max: usize,
    pub rel_tol: f64,
    /// Tilt of the seeded z-constant test field away from e₃.
    pub amplitude: f64,
    /// Layers of the z-varying field used for the thin-film estimates.
    pub nz_estimates: usize,
}

impl Default for StrayfieldParams {
    fn default() -> Self {
        Self {
            n: 64,
            side: 1.0,
            t: vec![1.0, 0.1, 0.01],
            nz_start: 8,
            nz_max: 4096,
            rel_tol: 1e-13,
            amplitude: 0.8,
            nz_estimates: 16,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundParams {
    /// Fixed `c_*`; calibrated on the corpus when absent.
    pub c_star: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GammaParams {
    pub lambda: Vec<f64>,
    pub radius: f64,
    /// `(ε, R)` pairs.
    pub cases: Vec<(f64, f64)>,
    pub n: usize,
}

impl Default for GammaParams {
    fn default() -> Self {
        Self { lambda: vec![0.0, LAMBDA_C / 2.0, 0.95 * LAMBDA_C], radius: 0.25, cases: vec![(0.004, 0.06)], n: 1024 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainParams {
    pub q: f64,
    pub t: Vec<f64>,
    pub options: DomainOptions,
}

impl Default for DomainParams {
    fn default() -> Self {
        Self { q: 1.5, t: vec![2.0 / 3.0, 0.6, 6.0 / 11.0, 0.5], options: DomainOptions::default() }
    }
}
