//! Domain-size diagnostics and the exponential law `S ∼ e^{2π√(Q−1)/t}/√(Q−1)`.
//!
//! The law is probed on periodic stripe ansätze. One computational cell holds
//! a single stripe period `P` (two walls), so `ℓ = P` and the energy density
//! `J/ℓ` equals that of any large torus tiled by the same pattern. For each
//! `t` the density is minimized over `P` and over the wall width.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thinfilm_core::energy::{energy_j_2d, wall_length};
use thinfilm_core::profiles::{periodic_walls, Axis};
use thinfilm_core::{PhysicalParams, TorusGrid};

use crate::fit::linear_fit;
use crate::output::{float, Csv};
use crate::sweep::SweepRecord;
use crate::{ExperimentError, Result};

/// `ℓ / ∫|∇m₃|`, with the wall length measured on the unit torus.
pub fn domain_size(wall_length: f64, ell: f64) -> Result<f64> {
    if !(wall_length > 0.0) {
        return Err(thinfilm_core::Error::Precondition(format!(
            "domain size needs a positive wall length, got {wall_length}"
        ))
        .into());
    }
    Ok(ell / wall_length)
}

/// [`domain_size`] of a sweep record on a torus of physical side `ell`.
pub fn domain_size_diagnostics(record: &SweepRecord, p: &PhysicalParams<f64>) -> Result<f64> {
    domain_size(record.wall_length, p.ell)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainOptions {
    /// Period scan covers `[P_c, P_c·2^octaves]`, `P_c` the critical period.
    pub octaves: f64,
    pub scan_per_octave: usize,
    /// Wall width is `factor·ε`, with the factor searched in this range.
    pub width_factor: (f64, f64),
    /// Golden-section stopping width, in `log P` and in the width factor.
    pub tol: f64,
    pub points_per_eps: f64,
}

impl Default for DomainOptions {
    fn default() -> Self {
        Self { octaves: 4.0, scan_per_octave: 4, width_factor: (0.5, 2.0), tol: 1e-3, points_per_eps: 8.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainPoint {
    pub t: f64,
    pub q: f64,
    pub period: f64,
    pub width_factor: f64,
    /// `J/ℓ` at the optimum.
    pub density: f64,
    pub wall_length: f64,
    pub s: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainLawFit {
    /// `(1/t, ln S)`.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `2π√(Q−1)`.
    pub target: f64,
    pub samples: Vec<DomainPoint>,
}

fn golden(mut a: f64, mut b: f64, tol: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

struct Cell {
    grid: TorusGrid<f64>,
    t: f64,
    q: f64,
}

impl Cell {
    fn density(&self, period: f64, wf: f64) -> Result<f64> {
        let eps = 1.0 / (period * (self.q - 1.0).sqrt());
        let m = periodic_walls(&self.grid, 2, eps * wf, Axis::X1)?;
        let p = PhysicalParams::new(period, self.t, self.q, None)?;
        Ok(energy_j_2d(&m, &p)? / period)
    }

    fn best_width(&self, period: f64, opts: &DomainOptions) -> Result<(f64, f64)> {
        golden(opts.width_factor.0, opts.width_factor.1, opts.tol, |wf| self.density(period, wf))
    }
}

/// Optimal stripe period at one thickness.
pub fn domain_point(q: f64, t: f64, opts: &DomainOptions) -> Result<DomainPoint> {
    let pc = PhysicalParams::new(1.0, t, q, None)?;
    // Below P_c the nonlocal coefficient is subcritical and stripes cost energy.
    let sq = (q - 1.0).sqrt();
    let p_crit = (std::f64::consts::TAU * sq / pc.t).exp() / sq;
    let p_max = p_crit * opts.octaves.exp2();
    let n = ((opts.points_per_eps * p_max * sq).ceil() as usize).next_power_of_two().max(64);
    let cell = Cell { grid: TorusGrid::x2_invariant(n, 1.0)?, t, q };

    let steps = (opts.octaves * opts.scan_per_octave as f64).round() as usize;
    let mut scan = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let p = p_crit * (i as f64 / opts.scan_per_octave as f64).exp2();
        scan.push((p, cell.best_width(p, opts)?.1));
    }
    let k = (0..scan.len()).min_by(|&a, &b| scan[a].1.total_cmp(&scan[b].1)).unwrap_or(0);
    if scan[k].1 >= 0.0 {
        return Err(ExperimentError::Insufficient(format!("no negative-energy stripe period at t = {t}")));
    }
    let lo = scan[k.saturating_sub(1)].0.ln();
    let hi = scan[(k + 1).min(steps)].0.ln();
    let (lp, _) = golden(lo, hi, opts.tol, |lp| Ok(cell.best_width(lp.exp(), opts)?.1))?;
    let period = lp.exp();
    let (wf, density) = cell.best_width(period, opts)?;
    let eps = 1.0 / (period * sq);
    let m = periodic_walls(&cell.grid, 2, eps * wf, Axis::X1)?;
    let wl = wall_length(&m);
    Ok(DomainPoint { t, q, period, width_factor: wf, density, wall_length: wl, s: domain_size(wl, period)?, n })
}

/// Fits `ln S` against `1/t` over the ladder.
pub fn domain_size_law(q: f64, t_list: &[f64], opts: &DomainOptions) -> Result<DomainLawFit> {
    if t_list.len() < 2 {
        return Err(ExperimentError::Insufficient(format!("need at least 2 thicknesses, got {}", t_list.len())));
    }
    let samples = t_list.par_iter().map(|&t| domain_point(q, t, opts)).collect::<Result<Vec<_>>>()?;
    let points: Vec<(f64, f64)> = samples.iter().map(|s| (1.0 / s.t, s.s.ln())).collect();
    let (slope, intercept, r_squared) = linear_fit(&points)?;
    Ok(DomainLawFit {
        points,
        slope,
        intercept,
        r_squared,
        target: std::f64::consts::TAU * (q - 1.0).sqrt(),
        samples,
    })
}

pub const DOMAIN_HEADER: [&str; 8] = ["t", "q", "period", "width_factor", "density", "wall_length", "S", "n"];

pub fn domain_csv(fit: &DomainLawFit) -> Csv {
    let mut c = Csv::new(&DOMAIN_HEADER);
    for s in &fit.samples {
        c.push(vec![
            float(s.t),
            float(s.q),
            float(s.period),
            float(s.width_factor),
            float(s.density),
            float(s.wall_length),
            float(s.s),
            s.n.to_string(),
        ]);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, fx) = golden(-1.0, 3.0, 1e-8, |x| Ok((x - 0.7) * (x - 0.7) + 2.0)).unwrap();
        assert!((x - 0.7).abs() < 1e-7 && (fx - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_wall_length_is_an_error() {
        assert!(domain_size(0.0, 1.0).is_err());
        assert_eq!(domain_size(8.0, 1.0).unwrap(), 0.125);
    }
}
