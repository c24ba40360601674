//! Empirically calibrated constants with provenance.
//!
//! The analysis only asserts that these constants exist. Values are
//! computed here or loaded from the JSON file named by
//! `THINFILM_CONSTANTS`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thinfilm_core::{bounds, profiles};

use crate::{ExperimentError, Result};

pub const CONSTANTS_ENV: &str = "THINFILM_CONSTANTS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibrated {
    pub value: f64,
    pub provenance: String,
}

impl Calibrated {
    pub fn new(value: f64, provenance: impl Into<String>) -> Self {
        Self { value, provenance: provenance.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    /// Constant of the profile double-integral lower bound.
    pub c_hat: Calibrated,
    /// Constant of the sharp `H^{1/2}` inequality.
    pub c_star: Calibrated,
    /// Lower end of the critical window, `0 < β₁ < 1`.
    #[serde(default)]
    pub beta1: Option<Calibrated>,
    /// Upper end of the critical window, `β₂ > 1`.
    #[serde(default)]
    pub beta2: Option<Calibrated>,
    /// Thickness bound factor of the supercritical film regime.
    pub delta: Calibrated,
    /// Period factor of the supercritical film regime.
    pub k_regime: Calibrated,
}

impl Constants {
    /// Calibrates `ĉ` and `ĉ_*` from their default fit ranges and corpus.
    pub fn calibrate() -> Result<Self> {
        let rec = profiles::default_calibration()?;
        let corpus = bounds::default_corpus(0)?;
        let cs = bounds::calibrate_c_star(&corpus)?;
        let pairs: Vec<String> = rec.fit_range.iter().map(|(e, x)| format!("({e},{x})")).collect();
        Ok(Self {
            c_hat: Calibrated::new(
                rec.c_hat,
                format!("tanh double-integral log fit over {}, residual {:.4}", pairs.join(" "), rec.residual),
            ),
            c_star: Calibrated::new(
                cs.c_star,
                format!("smallest power of two with nonnegative slack on {} fields, corpus sha256 {}", cs.entries, cs.corpus_hash),
            ),
            beta1: None,
            beta2: None,
            delta: Calibrated::new(1.0, "assumed: thickness ladder taken with t <= min(sqrt(Q-1), 1/sqrt(Q-1))"),
            k_regime: Calibrated::new(1.0, "assumed: cells tile periods of at least the predicted wall spacing"),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let c: Constants = serde_json::from_str(&text)
            .map_err(|e| ExperimentError::Constants(format!("{}: {e}", path.display())))?;
        c.validate()?;
        Ok(c)
    }

    /// Loads from `THINFILM_CONSTANTS` when set, otherwise calibrates.
    pub fn from_env_or_calibrate() -> Result<Self> {
        match std::env::var_os(CONSTANTS_ENV) {
            Some(p) => Self::from_file(Path::new(&p)),
            None => Self::calibrate(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(ExperimentError::Constants(format!("{what} out of range")));
        if !(self.c_hat.value > 0.0) {
            return bad("c_hat");
        }
        if !(self.c_star.value >= 1.0) {
            return bad("c_star");
        }
        if let Some(b) = &self.beta1 {
            if !(b.value > 0.0 && b.value < 1.0) {
                return bad("beta1");
            }
        }
        if let Some(b) = &self.beta2 {
            if !(b.value > 1.0) {
                return bad("beta2");
            }
        }
        if !(self.delta.value > 0.0 && self.k_regime.value > 0.0) {
            return bad("regime constants");
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// `λ₋(ε) = λ_c(1 − |log β₁|/|log ε|)`, when β₁ is known.
    pub fn lambda_minus(&self, eps: f64) -> Option<f64> {
        self.beta1.as_ref().map(|b| thinfilm_core::LAMBDA_C * (1.0 - b.value.ln().abs() / eps.ln().abs()))
    }

    /// `λ₊(ε) = λ_c(1 + |log β₂|/|log ε|)`, when β₂ is known.
    pub fn lambda_plus(&self, eps: f64) -> Option<f64> {
        self.beta2.as_ref().map(|b| thinfilm_core::LAMBDA_C * (1.0 + b.value.ln().abs() / eps.ln().abs()))
    }
}
