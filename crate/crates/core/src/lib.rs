//! Reduced thin-film micromagnetic energies on the flat torus.
//!
//! Everything is generic over a floating point scalar implementing [`Real`]
//! (`f32` or `f64`); the aliases at the bottom of this file fix `f64`.

// `!(x > 0.0)` style guards are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod energy;
mod error;
pub mod grid;
pub mod mfd;
pub mod minimize;
pub mod profiles;
pub mod quad;
mod real;
pub mod spectral;
pub mod strayfield;

pub use error::{Error, Result};
pub use real::{pairwise_sum, Real};

pub use energy::{EnergyBreakdown, Functional, ReducedFunctional, RenormalizedFunctional};
pub use grid::{
    integrate, normalize, params_to_reduced, Magnetization, PhysicalParams, ReducedParams,
    ScalarField, TorusGrid,
};

pub use profiles::{make_profile, CalibrationRecord, StripeSpec, WallProfile};
pub use spectral::{SpectralField, SpectralPlan};

/// Critical value of the nonlocal coefficient, π/2.
pub const LAMBDA_C: f64 = std::f64::consts::FRAC_PI_2;

pub type Grid = TorusGrid<f64>;
pub type Field = ScalarField<f64>;
pub type Mag = Magnetization<f64>;
pub type Physical = PhysicalParams<f64>;
pub type Reduced = ReducedParams<f64>;
pub type Spectrum = SpectralField<f64>;
pub type Plan = SpectralPlan<f64>;
pub type Profile = WallProfile<f64>;
pub type Breakdown = EnergyBreakdown<f64>;
