//! Multi-seed minimization over (ε, λ) grids and the phase diagram.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thinfilm_core::energy::ReducedFunctional;
use thinfilm_core::minimize::{minimize_F, MinimizeOptions, SeedDescriptor};
use thinfilm_core::{Error as CoreError, Functional, Magnetization, ReducedParams, TorusGrid, LAMBDA_C};

use crate::constants::Constants;
use crate::output::{float, opt_float, Csv};
use crate::{with_jobs, ExperimentError, Result};

/// Energy below which a best-found state counts as beating the constants.
pub const NEGATIVE_THRESHOLD: f64 = -1e-10;
/// Smallest `∫|∇m₃|` that counts as a domain pattern (one wall pair has 4).
pub const WALL_THRESHOLD: f64 = 1.0;

/// Grid selection: the smallest power of two with `h ≤ ε/points_per_eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridRule {
    pub points_per_eps: f64,
    pub n_min: usize,
    pub n_max: usize,
    /// Use one-row grids (fields constant in x₂).
    pub x2_invariant: bool,
}

impl Default for GridRule {
    fn default() -> Self {
        Self { points_per_eps: 8.0, n_min: 64, n_max: 4096, x2_invariant: false }
    }
}

impl GridRule {
    pub fn required_n(&self, eps: f64) -> usize {
        ((self.points_per_eps / eps).ceil() as usize).next_power_of_two().max(self.n_min.next_power_of_two())
    }

    pub fn grid_for(&self, eps: f64) -> Result<TorusGrid<f64>> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(CoreError::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")).into());
        }
        if !(self.points_per_eps >= 8.0) {
            return Err(CoreError::InvalidParameter("points_per_eps must be at least 8".into()).into());
        }
        let n = self.required_n(eps);
        if n > self.n_max {
            return Err(CoreError::Resolution(format!("eps = {eps} requires n = {n}, above n_max = {}", self.n_max)).into());
        }
        Ok(if self.x2_invariant { TorusGrid::x2_invariant(n, 1.0)? } else { TorusGrid::new(n, 1.0)? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub eps: f64,
    pub lambda: f64,
    pub n: usize,
    pub rows: usize,
    pub best_energy: f64,
    pub exchange: f64,
    pub penalty: f64,
    /// `λ/|log ε| · ∫|∇^{1/2} m₃|²`.
    pub nonlocal: f64,
    pub local: f64,
    pub wall_length: f64,
    /// `ℓ/∫|∇m₃|` with `ℓ = 1`; absent for wall-free states.
    pub domain_size: Option<f64>,
    pub iters: usize,
    pub converged: bool,
    pub seed_id: String,
    /// The state was the minimizer found at this smaller λ, re-evaluated.
    pub carried_from: Option<f64>,
}

pub const SWEEP_HEADER: [&str; 15] = [
    "eps", "lambda", "n", "rows", "best_energy", "exchange", "penalty", "nonlocal", "local", "wall_length",
    "domain_size", "iters", "converged", "seed_id", "carried_from",
];

pub fn sweep_csv(records: &[SweepRecord]) -> Csv {
    let mut c = Csv::new(&SWEEP_HEADER);
    for r in records {
        c.push(vec![
            float(r.eps),
            float(r.lambda),
            r.n.to_string(),
            r.rows.to_string(),
            float(r.best_energy),
            float(r.exchange),
            float(r.penalty),
            float(r.nonlocal),
            float(r.local),
            float(r.wall_length),
            opt_float(r.domain_size),
            r.iters.to_string(),
            r.converged.to_string(),
            r.seed_id.clone(),
            opt_float(r.carried_from),
        ]);
    }
    c
}

struct Point {
    record: SweepRecord,
    m: Magnetization<f64>,
}

fn run_point(eps: f64, lambda: f64, rule: &GridRule, opts: &MinimizeOptions) -> Result<Point> {
    let grid = rule.grid_for(eps)?;
    let rp = ReducedParams::new(eps, lambda)?;
    let mut opts = opts.clone();
    if !opts.seed_list.is_empty() && !opts.seed_list.contains(&SeedDescriptor::up()) {
        opts.seed_list.insert(0, SeedDescriptor::up());
    }
    let r = minimize_F(&rp, &grid, &opts, None)?;
    let b = r.breakdown;
    let wall = r.wall_length;
    Ok(Point {
        record: SweepRecord {
            eps,
            lambda,
            n: grid.n(),
            rows: grid.rows(),
            best_energy: b.total,
            exchange: b.exchange,
            penalty: b.penalty,
            nonlocal: b.nonlocal,
            local: b.local(),
            wall_length: wall,
            domain_size: if wall > 0.0 { Some(1.0 / wall) } else { None },
            iters: r.iters,
            converged: r.converged,
            seed_id: r.seed_id.label(),
            carried_from: None,
        },
        m: r.m_star,
    })
}

/// One record per `(ε, λ)` in row-major order. Within each ε row, a
/// minimizer found at a smaller λ replaces the result at a larger λ when it
/// has lower energy there, so best energies are nonincreasing in λ.
pub fn sweep(
    eps_list: &[f64],
    lambda_list: &[f64],
    rule: &GridRule,
    opts: &MinimizeOptions,
    jobs: usize,
) -> Result<Vec<SweepRecord>> {
    if eps_list.is_empty() || lambda_list.is_empty() {
        return Err(ExperimentError::Insufficient("empty sweep".into()));
    }
    for &e in eps_list {
        rule.grid_for(e)?;
    }
    for &l in lambda_list {
        ReducedParams::new(0.5, l)?;
    }
    let jobs_list: Vec<(f64, f64)> =
        eps_list.iter().flat_map(|&e| lambda_list.iter().map(move |&l| (e, l))).collect();
    let points: Vec<Result<Point>> =
        with_jobs(jobs, || jobs_list.par_iter().map(|&(e, l)| run_point(e, l, rule, opts)).collect());
    let mut points = points.into_iter().collect::<Result<Vec<Point>>>()?;
    let nl = lambda_list.len();
    for row in points.chunks_mut(nl) {
        carry_minimizers(row)?;
    }
    Ok(points.into_iter().map(|p| p.record).collect())
}

fn carry_minimizers(row: &mut [Point]) -> Result<()> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[a].record.lambda.total_cmp(&row[b].record.lambda).then(a.cmp(&b)));
    for (pos, &j) in order.iter().enumerate() {
        for &i in &order[..pos] {
            let lam_i = row[i].record.lambda;
            let target = &row[j].record;
            if lam_i >= target.lambda {
                continue;
            }
            let rp = ReducedParams::new(target.eps, target.lambda)?;
            let f = ReducedFunctional::new(*row[i].m.grid(), rp, None)?;
            let b = f.evaluate(&row[i].m)?;
            if b.total < row[j].record.best_energy {
                let m = row[i].m.clone();
                let wall = thinfilm_core::energy::wall_length(&m);
                let rec = &mut row[j].record;
                rec.best_energy = b.total;
                rec.exchange = b.exchange;
                rec.penalty = b.penalty;
                rec.nonlocal = b.nonlocal;
                rec.local = b.local();
                rec.wall_length = wall;
                rec.domain_size = if wall > 0.0 { Some(1.0 / wall) } else { None };
                rec.converged = false;
                rec.carried_from = Some(lam_i);
                row[j].m = m;
            }
        }
    }
    Ok(())
}

/// `min_N 2N(1 − λ log(ĉ/(2εN))/(λ_c|log ε|))` over even `N ≥ 2` with `εN ≤ 1/4`.
pub fn stripe_upper_bound(eps: f64, lambda: f64, c_hat: f64) -> f64 {
    let l = eps.ln().abs();
    let mut best = f64::INFINITY;
    let mut n = 2usize;
    while eps * n as f64 <= 0.25 {
        let nf = n as f64;
        best = best.min(2.0 * nf * (1.0 - lambda * (c_hat / (2.0 * eps * nf)).ln() / (LAMBDA_C * l)));
        n += 2;
    }
    best
}

/// Coherence of a supercritical record: ordering of wall length, local
/// energy and nonlocal term, and the constant in `|A − B| ≤ C̃ λ/|log ε| A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coherence {
    pub eps: f64,
    pub lambda: f64,
    pub wall_le_local: bool,
    pub local_le_nonlocal: bool,
    pub c_tilde: f64,
    /// `−min F / (λ ε^{(λ_c−λ)/λ}/|log ε|)`.
    pub lower_ratio: f64,
}

pub fn coherence(r: &SweepRecord) -> Coherence {
    let l = r.eps.ln().abs();
    let scale = r.lambda * r.eps.powf((LAMBDA_C - r.lambda) / r.lambda) / l;
    Coherence {
        eps: r.eps,
        lambda: r.lambda,
        wall_le_local: r.wall_length <= r.local,
        local_le_nonlocal: r.local <= r.nonlocal,
        c_tilde: (r.nonlocal - r.local).abs() / (r.lambda / l * r.local),
        lower_ratio: -r.best_energy / scale,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Monodomain,
    Multidomain,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRow {
    pub eps: f64,
    pub lambda: f64,
    pub best_energy: f64,
    pub wall_length: f64,
    pub phase: Phase,
    pub lambda_minus: Option<f64>,
    pub lambda_plus: Option<f64>,
}

pub fn classify(r: &SweepRecord) -> Phase {
    if r.best_energy < NEGATIVE_THRESHOLD && r.wall_length > WALL_THRESHOLD {
        Phase::Multidomain
    } else {
        Phase::Monodomain
    }
}

pub const PHASE_HEADER: [&str; 7] = ["eps", "lambda", "best_energy", "wall_length", "phase", "lambda_minus", "lambda_plus"];

pub fn phase_csv(rows: &[PhaseRow]) -> Csv {
    let mut c = Csv::new(&PHASE_HEADER);
    for r in rows {
        c.push(vec![
            float(r.eps),
            float(r.lambda),
            float(r.best_energy),
            float(r.wall_length),
            match r.phase {
                Phase::Monodomain => "monodomain".into(),
                Phase::Multidomain => "multidomain".into(),
            },
            opt_float(r.lambda_minus),
            opt_float(r.lambda_plus),
        ]);
    }
    c
}

/// Phase classification. Missing β₁, β₂ are calibrated from the observed
/// boundary of each ε row (the midpoint between the largest monodomain λ
/// and the smallest multidomain λ) and stored into `constants`.
pub fn phase_diagram(
    eps_list: &[f64],
    lambda_list: &[f64],
    rule: &GridRule,
    opts: &MinimizeOptions,
    constants: &mut Constants,
    jobs: usize,
) -> Result<(Vec<SweepRecord>, Vec<PhaseRow>)> {
    let records = sweep(eps_list, lambda_list, rule, opts, jobs)?;
    if constants.beta1.is_none() || constants.beta2.is_none() {
        let mut boundary = Vec::new();
        for row in records.chunks(lambda_list.len()) {
            let mono = row.iter().filter(|r| classify(r) == Phase::Monodomain).map(|r| r.lambda).fold(f64::NAN, f64::max);
            let multi =
                row.iter().filter(|r| classify(r) == Phase::Multidomain).map(|r| r.lambda).fold(f64::NAN, f64::min);
            if mono.is_finite() && multi.is_finite() && mono < multi {
                boundary.push((row[0].eps, 0.5 * (mono + multi)));
            }
        }
        if boundary.is_empty() {
            return Err(ExperimentError::Insufficient("no row shows a phase boundary to calibrate beta".into()));
        }
        let (b1, b2) = crate::critical::calibrate_betas(&boundary, "phase-diagram boundary midpoints");
        if constants.beta1.is_none() {
            constants.beta1 = Some(b1);
        }
        if constants.beta2.is_none() {
            constants.beta2 = Some(b2);
        }
    }
    let rows = records
        .iter()
        .map(|r| PhaseRow {
            eps: r.eps,
            lambda: r.lambda,
            best_energy: r.best_energy,
            wall_length: r.wall_length,
            phase: classify(r),
            lambda_minus: constants.lambda_minus(r.eps),
            lambda_plus: constants.lambda_plus(r.eps),
        })
        .collect();
    Ok((records, rows))
}

