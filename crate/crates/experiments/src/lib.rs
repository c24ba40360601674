//! Sweeps, fits and calibrations built on `thinfilm-core`.

// `!(x > 0.0)` style guards are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod constants;
pub mod critical;
pub mod domain;
pub mod fit;
pub mod gamma;
pub mod manifest;
pub mod output;
pub mod sweep;

pub use constants::{Calibrated, Constants};
pub use critical::{bisect_lambda_c, calibrate_betas, CriticalWindow};
pub use domain::{domain_size, domain_size_law, DomainLawFit, DomainPoint};
pub use fit::{fit_supercritical, fit_wall_length, linear_fit, ScalingFit};
pub use gamma::{subcritical_gamma_check, GammaRow, GammaTable};
pub use manifest::Manifest;
pub use sweep::{phase_diagram, sweep, GridRule, PhaseRow, SweepRecord};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Core(#[from] thinfilm_core::Error),
    #[error("insufficient data: {0}")]
    Insufficient(String),
    #[error("bracket does not change sign: {0}")]
    Bracket(String),
    #[error("constants file: {0}")]
    Constants(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl ExperimentError {
    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        match self {
            ExperimentError::Core(e) => e.is_validation(),
            ExperimentError::Insufficient(_) | ExperimentError::Bracket(_) | ExperimentError::Constants(_) => true,
            ExperimentError::Json(_) => true,
            ExperimentError::Io(_) => false,
        }
    }

    /// Short machine-readable reason.
    pub fn reason(&self) -> &'static str {
        match self {
            ExperimentError::Core(e) => match e {
                thinfilm_core::Error::InvalidParameter(_) => "invalid_parameter",
                thinfilm_core::Error::Domain(_) => "domain",
                thinfilm_core::Error::DegenerateVector { .. } => "degenerate_vector",
                thinfilm_core::Error::GridMismatch(_) => "grid_mismatch",
                thinfilm_core::Error::Resolution(_) => "resolution",
                thinfilm_core::Error::Geometry(_) => "geometry",
                thinfilm_core::Error::Precondition(_) => "precondition",
                thinfilm_core::Error::Numerical(_) => "numerical",
                thinfilm_core::Error::Format(_) => "format",
                thinfilm_core::Error::Io(_) => "io",
            },
            ExperimentError::Insufficient(_) => "insufficient_data",
            ExperimentError::Bracket(_) => "bracket",
            ExperimentError::Constants(_) => "constants",
            ExperimentError::Io(_) => "io",
            ExperimentError::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

/// Runs `f` on a pool of `jobs` threads (the global pool when `jobs == 0`).
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    if jobs == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
