//! Energy of the disk recovery field against the limit `(1 − λ/λ_c)∫|∇m₃|`.

use serde::Serialize;
use thinfilm_core::energy::energy_f;
use thinfilm_core::profiles::disk_recovery_field;
use thinfilm_core::{ReducedParams, TorusGrid, LAMBDA_C};

use crate::fit::linear_fit;
use crate::output::{float, Csv};
use crate::{ExperimentError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaRow {
    pub eps: f64,
    pub cutoff: f64,
    pub n: usize,
    pub energy: f64,
    pub local: f64,
    pub nonlocal: f64,
    pub target: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaTable {
    pub lambda: f64,
    pub radius: f64,
    /// `(1 − λ/λ_c)·2·(2π·radius)`: a ±e₃ jump has `∫|∇m₃|` twice the perimeter.
    pub target: f64,
    pub rows: Vec<GammaRow>,
    /// Intercept of a line in `1/|log ε|` through the rows, with two or more ε.
    pub extrapolated: Option<f64>,
}

pub fn gamma_target(lambda: f64, radius: f64) -> f64 {
    (1.0 - lambda / LAMBDA_C) * 4.0 * std::f64::consts::PI * radius
}

/// Evaluates `F_{ε,λ}` on the disk field for every `(ε, R)` pair on an
/// `n × n` unit grid.
pub fn subcritical_gamma_check(lambda: f64, radius: f64, cases: &[(f64, f64)], n: usize) -> Result<GammaTable> {
    if !(0.0..LAMBDA_C).contains(&lambda) {
        return Err(thinfilm_core::Error::InvalidParameter(format!("lambda = {lambda} is not subcritical")).into());
    }
    if cases.is_empty() {
        return Err(ExperimentError::Insufficient("no (eps, R) cases".into()));
    }
    let grid = TorusGrid::new(n, 1.0)?;
    let target = gamma_target(lambda, radius);
    let mut rows = Vec::new();
    for &(eps, cutoff) in cases {
        let m = disk_recovery_field(radius, eps, cutoff, &grid)?;
        let b = energy_f(&m, &ReducedParams::new(eps, lambda)?, None)?;
        rows.push(GammaRow {
            eps,
            cutoff,
            n,
            energy: b.total,
            local: b.local(),
            nonlocal: b.nonlocal,
            target,
            rel_error: (b.total - target).abs() / target,
        });
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (1.0 / r.eps.ln().abs(), r.energy)).collect();
    let distinct = pts.iter().any(|p| p.0 != pts[0].0);
    let extrapolated = if distinct { Some(linear_fit(&pts)?.1) } else { None };
    Ok(GammaTable { lambda, radius, target, rows, extrapolated })
}

pub const GAMMA_HEADER: [&str; 9] = ["lambda", "eps", "R", "n", "energy", "local", "nonlocal", "target", "rel_error"];

pub fn gamma_csv(tables: &[GammaTable]) -> Csv {
    let mut c = Csv::new(&GAMMA_HEADER);
    for t in tables {
        for r in &t.rows {
            c.push(vec![
                float(t.lambda),
                float(r.eps),
                float(r.cutoff),
                r.n.to_string(),
                float(r.energy),
                float(r.local),
                float(r.nonlocal),
                float(r.target),
                float(r.rel_error),
            ]);
        }
    }
    c
}
