//! Unweighted least-squares fits in log coordinates.

use serde::Serialize;
use thinfilm_core::LAMBDA_C;

use crate::sweep::SweepRecord;
use crate::{ExperimentError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
    /// Exponent predicted by the scaling law, when one applies.
    pub target: Option<f64>,
}

/// Ordinary least squares for `y = slope·x + intercept`.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 2 {
        return Err(ExperimentError::Insufficient(format!("{} points for a line", points.len())));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ExperimentError::Insufficient("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok((slope, intercept, r2))
}

fn common_lambda(records: &[SweepRecord]) -> Result<f64> {
    let lam = records.first().ok_or_else(|| ExperimentError::Insufficient("no records".into()))?.lambda;
    if records.iter().any(|r| r.lambda != lam) {
        return Err(ExperimentError::Insufficient("records mix several lambda values".into()));
    }
    Ok(lam)
}

/// Slope of `log(−min F·|log ε|/λ)` against `log ε`; the law predicts
/// `(λ_c − λ)/λ`. Needs at least four negative-energy records at one λ.
pub fn fit_supercritical(records: &[SweepRecord]) -> Result<ScalingFit> {
    let lam = common_lambda(records)?;
    if !(lam > LAMBDA_C) {
        return Err(ExperimentError::Insufficient(format!("lambda = {lam} is not supercritical")));
    }
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.best_energy < 0.0)
        .map(|r| (r.eps.ln(), (-r.best_energy * r.eps.ln().abs() / lam).ln()))
        .collect();
    if points.len() < 4 {
        return Err(ExperimentError::Insufficient(format!(
            "{} of {} records have negative energy; need 4",
            points.len(),
            records.len()
        )));
    }
    let (slope, intercept, r_squared) = linear_fit(&points)?;
    Ok(ScalingFit { slope, intercept, r_squared, points, target: Some((LAMBDA_C - lam) / lam) })
}

/// Slope of `log ∫|∇m₃|` against `log ε` over records with walls.
pub fn fit_wall_length(records: &[SweepRecord]) -> Result<ScalingFit> {
    let lam = common_lambda(records)?;
    let points: Vec<(f64, f64)> =
        records.iter().filter(|r| r.wall_length > 0.0).map(|r| (r.eps.ln(), r.wall_length.ln())).collect();
    if points.len() < 4 {
        return Err(ExperimentError::Insufficient(format!("{} records with walls; need 4", points.len())));
    }
    let (slope, intercept, r_squared) = linear_fit(&points)?;
    Ok(ScalingFit { slope, intercept, r_squared, points, target: Some((LAMBDA_C - lam) / lam) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 3.0 - 0.5 * i as f64)).collect();
        let (s, c, r2) = linear_fit(&pts).unwrap();
        assert!((s + 0.5).abs() < 1e-14 && (c - 3.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
        assert!(linear_fit(&pts[..1]).is_err());
        assert!(linear_fit(&[(1.0, 0.0), (1.0, 2.0)]).is_err());
    }
}
