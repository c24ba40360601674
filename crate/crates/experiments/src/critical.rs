//! Bisection for the smallest λ at which the best-found energy turns negative.
//!
//! The minimizer only certifies upper bounds on `min F`, so `λ̂` estimates
//! the threshold from above.

use serde::Serialize;
use thinfilm_core::minimize::MinimizeOptions;
use thinfilm_core::LAMBDA_C;

use crate::constants::{Calibrated, Constants};
use crate::sweep::{sweep, GridRule, SweepRecord, NEGATIVE_THRESHOLD};
use crate::{ExperimentError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalWindow {
    pub eps: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub lambda_hat: f64,
    pub lambda_minus: Option<f64>,
    pub lambda_plus: Option<f64>,
    /// Every evaluated `(λ, best energy)`, in evaluation order.
    pub evaluations: Vec<(f64, f64)>,
}

fn best(eps: f64, lambda: f64, rule: &GridRule, opts: &MinimizeOptions, jobs: usize) -> Result<SweepRecord> {
    Ok(sweep(&[eps], &[lambda], rule, opts, jobs)?.remove(0))
}

/// Bisects on the sign of the best-found energy until `λ_hi − λ_lo ≤ tol`.
pub fn bisect_lambda_c(
    eps: f64,
    lambda_lo: f64,
    lambda_hi: f64,
    tol: f64,
    rule: &GridRule,
    opts: &MinimizeOptions,
    jobs: usize,
) -> Result<CriticalWindow> {
    if !(tol > 0.0) {
        return Err(thinfilm_core::Error::InvalidParameter(format!("tol must be positive, got {tol}")).into());
    }
    if !(lambda_lo < lambda_hi) {
        return Err(ExperimentError::Bracket(format!("need lambda_lo < lambda_hi, got {lambda_lo}, {lambda_hi}")));
    }
    let mut evaluations = Vec::new();
    let lo_e = best(eps, lambda_lo, rule, opts, jobs)?.best_energy;
    evaluations.push((lambda_lo, lo_e));
    if lo_e < NEGATIVE_THRESHOLD {
        return Err(ExperimentError::Bracket(format!("energy {lo_e:e} at lambda_lo = {lambda_lo} is already negative")));
    }
    let hi_e = best(eps, lambda_hi, rule, opts, jobs)?.best_energy;
    evaluations.push((lambda_hi, hi_e));
    if hi_e >= NEGATIVE_THRESHOLD {
        return Err(ExperimentError::Bracket(format!("energy {hi_e:e} at lambda_hi = {lambda_hi} is not negative")));
    }
    let (mut lo, mut hi) = (lambda_lo, lambda_hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let e = best(eps, mid, rule, opts, jobs)?.best_energy;
        evaluations.push((mid, e));
        if e < NEGATIVE_THRESHOLD {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalWindow {
        eps,
        lambda_lo: lo,
        lambda_hi: hi,
        lambda_hat: 0.5 * (lo + hi),
        lambda_minus: None,
        lambda_plus: None,
        evaluations,
    })
}

/// Margin applied to the tightest β consistent with the observed thresholds.
pub const BETA_MARGIN: f64 = 1.05;
const BETA_FLOOR: f64 = 1e-3;

/// β₁ and β₂ making `λ₋(ε) ≤ λ̂(ε) ≤ λ₊(ε)` for every `(ε, λ̂)`, widened by
/// [`BETA_MARGIN`].
pub fn calibrate_betas(points: &[(f64, f64)], source: &str) -> (Calibrated, Calibrated) {
    let mut below = 0.0f64;
    let mut above = 0.0f64;
    for &(eps, lh) in points {
        let l = eps.ln().abs();
        below = below.max((1.0 - lh / LAMBDA_C) * l);
        above = above.max((lh / LAMBDA_C - 1.0) * l);
    }
    let a1 = (BETA_MARGIN * below).max(BETA_FLOOR);
    let a2 = (BETA_MARGIN * above).max(BETA_FLOOR);
    let eps: Vec<String> = points.iter().map(|p| format!("{}", p.0)).collect();
    let prov = format!("tightest bracket around {source} at eps = [{}], margin {BETA_MARGIN}", eps.join(", "));
    (Calibrated::new((-a1).exp(), prov.clone()), Calibrated::new(a2.exp(), prov))
}

/// Fills the λ₋/λ₊ bracket of each window from `constants`.
pub fn attach_bracket(windows: &mut [CriticalWindow], constants: &Constants) {
    for w in windows {
        w.lambda_minus = constants.lambda_minus(w.eps);
        w.lambda_plus = constants.lambda_plus(w.eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn betas_bracket_their_inputs() {
        let pts = [(0.02, 1.9), (0.01, 1.8), (0.005, 1.4)];
        let (b1, b2) = calibrate_betas(&pts, "test");
        assert!(b1.value > 0.0 && b1.value < 1.0 && b2.value > 1.0);
        for (e, lh) in pts {
            let lm = LAMBDA_C * (1.0 - b1.value.ln().abs() / e.ln().abs());
            let lp = LAMBDA_C * (1.0 + b2.value.ln().abs() / e.ln().abs());
            assert!(lm <= lh && lh <= lp);
        }
    }
}
