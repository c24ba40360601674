//! Projected gradient descent on sphere-valued fields.
//!
//! Each iteration moves against the tangent L² gradient and renormalizes
//! pointwise. Steps are backtracked by halves until the energy does not
//! increase, so every accepted step is monotone. Several seeds run
//! independently; the lowest final energy wins. The result is a
//! best-found value, an upper bound on the minimum and nothing more.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{wall_length, EnergyBreakdown, Functional, ReducedFunctional, TangentField};
use crate::grid::{normalize, Magnetization, ReducedParams, ScalarField, TorusGrid, VectorField};
use crate::profiles::{periodic_walls, Axis};
use crate::real::Real;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Constant trial step `fixed_step · scale`, backtracked when needed.
    Fixed,
    /// Barzilai–Borwein step clamped to `[1e-6, 10] · scale`, backtracked.
    AdaptiveBb,
}

/// Initial state of one descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeedDescriptor {
    Constant { direction: [f64; 3] },
    /// `transitions` tanh walls of the functional's width, varying in x₁.
    Stripes { transitions: usize },
    /// `base` plus a smooth random tangent perturbation of amplitude
    /// `amplitude`, drawn from stream `draw` of the run's generator.
    Perturbed { base: Box<SeedDescriptor>, draw: u64, amplitude: f64 },
}

impl SeedDescriptor {
    pub fn up() -> Self {
        SeedDescriptor::Constant { direction: [0.0, 0.0, 1.0] }
    }

    pub fn label(&self) -> String {
        match self {
            SeedDescriptor::Constant { direction: d } => format!("constant({},{},{})", d[0], d[1], d[2]),
            SeedDescriptor::Stripes { transitions } => format!("stripes({transitions})"),
            SeedDescriptor::Perturbed { base, draw, .. } => format!("perturbed({},{draw})", base.label()),
        }
    }

    /// Builds the seed field on `grid` for walls of width `width`.
    pub fn build<T: Real>(&self, grid: &TorusGrid<T>, width: T, rng_seed: u64) -> Result<Magnetization<T>> {
        match self {
            SeedDescriptor::Constant { direction } => {
                let v = VectorField::from_fn(*grid, |_, _| direction.map(T::lit));
                normalize(&v)
            }
            SeedDescriptor::Stripes { transitions } => periodic_walls(grid, *transitions, width, Axis::X1),
            SeedDescriptor::Perturbed { base, draw, amplitude } => {
                if matches!(**base, SeedDescriptor::Perturbed { .. }) {
                    return Err(Error::InvalidParameter("perturbed seeds cannot be nested".into()));
                }
                let m = base.build(grid, width, rng_seed)?;
                perturb(&m, *amplitude, rng_seed, *draw)
            }
        }
    }
}

pub const PERTURBATION_AMPLITUDE: f64 = 0.05;
const PERTURBATION_MODES: usize = 6;
const PERTURBATION_MAX_FREQ: i64 = 4;

/// Adds a band-limited random tangent field with sup-norm ≤ `amplitude`.
fn perturb<T: Real>(m: &Magnetization<T>, amplitude: f64, rng_seed: u64, draw: u64) -> Result<Magnetization<T>> {
    let grid = *m.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(draw);
    let flat = grid.is_x2_invariant();
    let mut modes = Vec::new();
    for c in 0..3 {
        for _ in 0..PERTURBATION_MODES {
            let k1 = rng.gen_range(-PERTURBATION_MAX_FREQ..=PERTURBATION_MAX_FREQ) as f64;
            let k2 = if flat { 0.0 } else { rng.gen_range(-PERTURBATION_MAX_FREQ..=PERTURBATION_MAX_FREQ) as f64 };
            let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let amp: f64 = rng.gen_range(-1.0..1.0);
            modes.push((c, k1, k2, phase, amp));
        }
    }
    let scale = amplitude / (PERTURBATION_MODES as f64 * 3f64.sqrt());
    let side = grid.side_length().to_f64_lossy();
    let raw = VectorField::from_fn(grid, |x, y| {
        let (x, y) = (x.to_f64_lossy(), y.to_f64_lossy());
        let mut v = [0.0f64; 3];
        for &(c, k1, k2, ph, a) in &modes {
            v[c] += a * (std::f64::consts::TAU * (k1 * x + k2 * y) / side + ph).cos();
        }
        v.map(|s| T::lit(s * scale))
    });
    let tangent = TangentField::project(raw, m)?;
    let mut out = m.as_vector_field().clone();
    for c in 0..3 {
        let d = tangent.as_vector_field().component(c);
        for (o, &dv) in out.component_mut(c).iter_mut().zip(d) {
            *o = *o + dv;
        }
    }
    normalize(&out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    /// Sup-norm of the tangent gradient below which a run counts as converged.
    pub grad_tol: f64,
    /// Relative energy decrease over `energy_window` iterations below which a run stops.
    pub energy_tol: f64,
    pub energy_window: usize,
    pub step_rule: StepRule,
    /// Trial step for [`StepRule::Fixed`], in units of the length scale.
    pub fixed_step: f64,
    /// Empty means [`default_seeds`].
    pub seed_list: Vec<SeedDescriptor>,
    pub rng_seed: u64,
    pub record_trace: bool,
    pub parallel: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            grad_tol: 1e-7,
            energy_tol: 1e-12,
            energy_window: 50,
            step_rule: StepRule::AdaptiveBb,
            fixed_step: 1e-3,
            seed_list: Vec::new(),
            rng_seed: 0,
            record_trace: false,
            parallel: true,
        }
    }
}

impl MinimizeOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        for (name, v) in [("grad_tol", self.grad_tol), ("energy_tol", self.energy_tol), ("fixed_step", self.fixed_step)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.energy_window == 0 {
            return Err(Error::InvalidParameter("energy_window must be at least 1".into()));
        }
        Ok(())
    }
}

/// Constants ±e₃ and e₁, stripes over the dyadic ladder 2, 4, 8, … up to
/// `width · N ≤ side/4`, and two perturbations (of e₃ and of two stripes).
pub fn default_seeds<T: Real>(grid: &TorusGrid<T>, width: T) -> Vec<SeedDescriptor> {
    let mut seeds = vec![
        SeedDescriptor::up(),
        SeedDescriptor::Constant { direction: [0.0, 0.0, -1.0] },
        SeedDescriptor::Constant { direction: [1.0, 0.0, 0.0] },
    ];
    let side = grid.side_length();
    let mut n = 2usize;
    while width * T::from_usize_lossy(n) <= side * T::lit(0.25) && n <= grid.n() / 8 {
        seeds.push(SeedDescriptor::Stripes { transitions: n });
        n *= 2;
    }
    let amp = PERTURBATION_AMPLITUDE;
    seeds.push(SeedDescriptor::Perturbed { base: Box::new(SeedDescriptor::up()), draw: 0, amplitude: amp });
    seeds.push(SeedDescriptor::Perturbed {
        base: Box::new(SeedDescriptor::Stripes { transitions: 2 }),
        draw: 1,
        amplitude: amp,
    });
    seeds
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow<T: Real = f64> {
    pub iter: usize,
    pub breakdown: EnergyBreakdown<T>,
    pub grad_norm: T,
    pub steplen: T,
}

pub const TRACE_HEADER: &str = "iter,exchange,penalty,nonlocal,zeeman,total,grad_norm,steplen";

pub fn trace_csv<T: Real>(rows: &[TraceRow<T>]) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for r in rows {
        let b = &r.breakdown;
        s.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.iter, b.exchange, b.penalty, b.nonlocal, b.zeeman, b.total, r.grad_norm, r.steplen
        ));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradTol,
    EnergyStall,
    MaxIters,
    /// Backtracking reached the smallest admissible step without decrease.
    StepUnderflow,
}

#[derive(Debug, Clone)]
pub struct Descent<T: Real = f64> {
    pub m: Magnetization<T>,
    pub breakdown: EnergyBreakdown<T>,
    pub grad_norm: T,
    pub iters: usize,
    pub stop: StopReason,
    pub trace: Vec<TraceRow<T>>,
}

impl<T: Real> Descent<T> {
    pub fn converged(&self) -> bool {
        self.stop == StopReason::GradTol
    }
}

/// Outcome of one seed inside a multi-seed run.
#[derive(Debug, Clone, Serialize)]
pub struct SeedOutcome<T: Real = f64> {
    pub seed: SeedDescriptor,
    /// Final total, or `None` when the run failed.
    pub total: Option<T>,
    pub iters: usize,
    pub converged: bool,
    pub stop: Option<StopReason>,
    pub failure: Option<String>,
    #[serde(skip)]
    pub trace: Vec<TraceRow<T>>,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult<T: Real = f64> {
    pub m_star: Magnetization<T>,
    pub breakdown: EnergyBreakdown<T>,
    pub iters: usize,
    pub converged: bool,
    pub seed_id: SeedDescriptor,
    pub seed_index: usize,
    pub grad_norm: T,
    /// `∫|∇m₃|` of `m_star`.
    pub wall_length: T,
    pub seeds: Vec<SeedOutcome<T>>,
}

/// `normalize(m − steplen · grad)`.
pub fn retract<T: Real>(m: &Magnetization<T>, grad: &TangentField<T>, steplen: T) -> Result<Magnetization<T>> {
    let mut v = m.as_vector_field().clone();
    let g = grad.as_vector_field();
    for c in 0..3 {
        let gc = g.component(c);
        for (o, &d) in v.component_mut(c).iter_mut().zip(gc) {
            *o = *o - steplen * d;
        }
    }
    normalize(&v)
}

/// One unprojected descent step of `F_{ε,λ}` without backtracking.
pub fn step<T: Real>(m: &Magnetization<T>, rp: &ReducedParams<T>, steplen: T) -> Result<Magnetization<T>> {
    if !(steplen > T::zero()) {
        return Err(Error::InvalidParameter(format!("step length must be positive, got {steplen}")));
    }
    let f = ReducedFunctional::new(*m.grid(), *rp, None)?;
    let (_, g) = f.evaluate_with_gradient(m)?;
    retract(m, &g, steplen)
}

fn sub<T: Real>(a: &VectorField<T>, b: &VectorField<T>) -> Result<VectorField<T>> {
    let mut out = a.clone();
    for c in 0..3 {
        for (o, &bv) in out.component_mut(c).iter_mut().zip(b.component(c)) {
            *o = *o - bv;
        }
    }
    out.grid().ensure_same(b.grid())?;
    Ok(out)
}

fn check_finite<T: Real>(b: &EnergyBreakdown<T>) -> Result<()> {
    if b.total.is_finite() {
        Ok(())
    } else {
        Err(Error::Numerical(format!("non-finite energy {:?}", b.total)))
    }
}

/// Runs a single descent from `m0`.
pub fn descend<T: Real, F: Functional<T>>(f: &F, m0: Magnetization<T>, opts: &MinimizeOptions) -> Result<Descent<T>> {
    opts.validate()?;
    let scale = f.length_scale();
    let (min_step, max_step) = (scale * T::lit(1e-6), scale * T::lit(10.0));
    let mut m = m0;
    let (mut e, mut g) = f.evaluate_with_gradient(&m)?;
    check_finite(&e)?;
    let mut steplen = match opts.step_rule {
        StepRule::AdaptiveBb => scale,
        StepRule::Fixed => scale * T::lit(opts.fixed_step),
    };
    let mut history = vec![e.total];
    let mut trace = Vec::new();
    let mut gnorm = g.sup_norm();
    let mut iters = 0;
    let stop = loop {
        if opts.record_trace {
            trace.push(TraceRow { iter: iters, breakdown: e, grad_norm: gnorm, steplen });
        }
        if gnorm <= T::lit(opts.grad_tol) {
            break StopReason::GradTol;
        }
        if iters >= opts.max_iters {
            break StopReason::MaxIters;
        }
        let w = opts.energy_window;
        if history.len() > w {
            let old = history[history.len() - 1 - w];
            let drop = old - e.total;
            let denom = e.total.abs().max(old.abs()).max(T::min_positive_value());
            if drop <= T::lit(opts.energy_tol) * denom {
                break StopReason::EnergyStall;
            }
        }
        let mut trial = steplen.max(min_step).min(max_step);
        let accepted = loop {
            match retract(&m, &g, trial) {
                Ok(cand) => {
                    let ce = f.evaluate(&cand)?;
                    if ce.total.is_finite() && ce.total <= e.total {
                        break Some((cand, trial));
                    }
                }
                Err(Error::DegenerateVector { .. }) => {}
                Err(err) => return Err(err),
            }
            if trial <= min_step {
                break None;
            }
            trial = (trial * T::lit(0.5)).max(min_step);
        };
        let Some((next, used)) = accepted else {
            break StopReason::StepUnderflow;
        };
        let (ne, ng) = f.evaluate_with_gradient(&next)?;
        check_finite(&ne)?;
        steplen = match opts.step_rule {
            StepRule::Fixed => scale * T::lit(opts.fixed_step),
            StepRule::AdaptiveBb => {
                let s = sub(next.as_vector_field(), m.as_vector_field())?;
                let y = sub(ng.as_vector_field(), g.as_vector_field())?;
                let sy = s.dot(&y)?;
                let ss = s.dot(&s)?;
                if sy > T::zero() {
                    (ss / sy).max(min_step).min(max_step)
                } else {
                    (used * T::lit(2.0)).min(max_step)
                }
            }
        };
        m = next;
        e = ne;
        g = ng;
        gnorm = g.sup_norm();
        history.push(e.total);
        iters += 1;
    };
    Ok(Descent { m, breakdown: e, grad_norm: gnorm, iters, stop, trace })
}

/// Multi-seed minimization of any [`Functional`]. Walls in stripe seeds
/// get the functional's length scale as width.
pub fn minimize<T: Real, F: Functional<T>>(f: &F, opts: &MinimizeOptions) -> Result<MinimizeResult<T>> {
    opts.validate()?;
    let grid = *f.grid();
    let width = f.length_scale();
    let seeds = if opts.seed_list.is_empty() { default_seeds(&grid, width) } else { opts.seed_list.clone() };
    let run = |seed: &SeedDescriptor| -> std::result::Result<Descent<T>, String> {
        let m0 = seed.build(&grid, width, opts.rng_seed).map_err(|e| e.to_string())?;
        descend(f, m0, opts).map_err(|e| e.to_string())
    };
    let runs: Vec<_> = if opts.parallel {
        seeds.par_iter().map(run).collect()
    } else {
        seeds.iter().map(run).collect()
    };
    let mut best: Option<(usize, Descent<T>)> = None;
    let mut outcomes = Vec::with_capacity(seeds.len());
    for (i, (seed, r)) in seeds.iter().zip(runs).enumerate() {
        match r {
            Ok(d) => {
                outcomes.push(SeedOutcome {
                    seed: seed.clone(),
                    total: Some(d.breakdown.total),
                    iters: d.iters,
                    converged: d.converged(),
                    stop: Some(d.stop),
                    failure: None,
                    trace: d.trace.clone(),
                });
                let better = best.as_ref().is_none_or(|(_, b)| d.breakdown.total < b.breakdown.total);
                if better {
                    best = Some((i, d));
                }
            }
            Err(msg) => outcomes.push(SeedOutcome {
                seed: seed.clone(),
                total: None,
                iters: 0,
                converged: false,
                stop: None,
                failure: Some(msg),
                trace: Vec::new(),
            }),
        }
    }
    let (idx, d) = best.ok_or_else(|| Error::Numerical("every seed failed".into()))?;
    let wall = wall_length(&d.m);
    Ok(MinimizeResult {
        breakdown: d.breakdown,
        iters: d.iters,
        converged: d.converged(),
        seed_id: seeds[idx].clone(),
        seed_index: idx,
        grad_norm: d.grad_norm,
        wall_length: wall,
        m_star: d.m,
        seeds: outcomes,
    })
}

/// Minimizes `F_{ε,λ}` on `grid`; requires `h ≤ ε/8`.
#[allow(non_snake_case)]
pub fn minimize_F<T: Real>(
    rp: &ReducedParams<T>,
    grid: &TorusGrid<T>,
    opts: &MinimizeOptions,
    g: Option<&ScalarField<T>>,
) -> Result<MinimizeResult<T>> {
    if grid.spacing() > rp.eps / T::lit(8.0) {
        return Err(Error::Resolution(format!(
            "spacing {} exceeds eps/8 = {}",
            grid.spacing(),
            rp.eps / T::lit(8.0)
        )));
    }
    let f = ReducedFunctional::new(*grid, *rp, g.cloned())?;
    minimize(&f, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::energy_f;
    use crate::LAMBDA_C;

    fn rough_field(grid: TorusGrid<f64>, seed: u64) -> Magnetization<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comps = [0; 3].map(|_| (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        normalize(&VectorField::new(grid, comps).unwrap()).unwrap()
    }

    #[test]
    fn step_fixes_critical_points() {
        let g = TorusGrid::<f64>::new(16, 1.0).unwrap();
        let rp = ReducedParams::new(0.1, 0.5).unwrap();
        let up = Magnetization::constant(g, [0.0, 0.0, 1.0]).unwrap();
        let s = step(&up, &rp, 0.01).unwrap();
        for i in 0..g.len() {
            assert!((s.at(i)[2] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn tiny_step_is_lipschitz() {
        let g = TorusGrid::<f64>::new(16, 1.0).unwrap();
        let rp = ReducedParams::new(0.1, 0.5).unwrap();
        let m = rough_field(g, 3);
        let f = ReducedFunctional::new(g, rp, None).unwrap();
        let (_, gr) = f.evaluate_with_gradient(&m).unwrap();
        let h = 1e-8;
        let s = step(&m, &rp, h).unwrap();
        let d = sub(s.as_vector_field(), m.as_vector_field()).unwrap();
        let dn = d.dot(&d).unwrap().sqrt();
        let gn = gr.dot(gr.as_vector_field()).unwrap().sqrt();
        assert!(dn <= h * gn * (1.0 + 1e-6));
    }

    #[test]
    fn subcritical_constants_win() {
        let g = TorusGrid::<f64>::new(64, 1.0).unwrap();
        let rp = ReducedParams::new(0.05, 0.5 * LAMBDA_C).unwrap();
        let opts = MinimizeOptions {
            seed_list: vec![SeedDescriptor::up(), SeedDescriptor::Stripes { transitions: 2 }],
            max_iters: 300,
            ..Default::default()
        };
        let r = minimize_F(&rp, &TorusGrid::new(256, 1.0).unwrap(), &opts, None).unwrap();
        assert_eq!(r.seed_index, 0);
        assert_eq!(r.breakdown.total, 0.0);
        assert!(r.converged);
        assert!(r.seeds[1].total.unwrap() > 0.0);
        assert!(minimize_F(&rp, &g, &opts, None).is_err());
    }

    #[test]
    fn traces_are_monotone_and_deterministic() {
        let g = TorusGrid::<f64>::x2_invariant(512, 1.0).unwrap();
        let rp = ReducedParams::new(0.02, 1.2 * LAMBDA_C).unwrap();
        let opts = MinimizeOptions {
            seed_list: vec![
                SeedDescriptor::Stripes { transitions: 4 },
                SeedDescriptor::Perturbed {
                    base: Box::new(SeedDescriptor::Stripes { transitions: 2 }),
                    draw: 7,
                    amplitude: PERTURBATION_AMPLITUDE,
                },
            ],
            max_iters: 200,
            record_trace: true,
            rng_seed: 11,
            ..Default::default()
        };
        let a = minimize_F(&rp, &g, &opts, None).unwrap();
        let b = minimize_F(&rp, &g, &MinimizeOptions { parallel: false, ..opts.clone() }, None).unwrap();
        for (sa, sb) in a.seeds.iter().zip(&b.seeds) {
            assert!(!sa.trace.is_empty());
            assert_eq!(trace_csv(&sa.trace), trace_csv(&sb.trace));
            for w in sa.trace.windows(2) {
                assert!(w[1].breakdown.total <= w[0].breakdown.total);
            }
        }
        for i in 0..g.len() {
            let v = a.m_star.at(i);
            assert!((v[0] * v[0] + v[1] * v[1] + v[2] * v[2] - 1.0).abs() <= 1e-12);
        }
        let direct = energy_f(&a.m_star, &rp, None).unwrap().total;
        assert_eq!(direct, a.breakdown.total);
        assert!(a.seeds.iter().all(|s| s.total.unwrap() >= a.breakdown.total));
    }

    #[test]
    fn default_ladder() {
        let g = TorusGrid::<f64>::x2_invariant(4096, 1.0).unwrap();
        let s = default_seeds(&g, 0.003);
        let stripes: Vec<usize> = s
            .iter()
            .filter_map(|d| if let SeedDescriptor::Stripes { transitions } = d { Some(*transitions) } else { None })
            .collect();
        assert_eq!(stripes, vec![2, 4, 8, 16, 32, 64]);
        assert_eq!(s.len(), 3 + 6 + 2);
    }

    #[test]
    fn options_roundtrip_and_validate() {
        let o = MinimizeOptions { seed_list: default_seeds(&TorusGrid::<f64>::new(64, 1.0).unwrap(), 0.05), ..Default::default() };
        let j = serde_json::to_string(&o).unwrap();
        let back: MinimizeOptions = serde_json::from_str(&j).unwrap();
        assert_eq!(o, back);
        assert!(serde_json::from_str::<MinimizeOptions>(r#"{"bogus": 1}"#).is_err());
        assert!(MinimizeOptions { max_iters: 0, ..Default::default() }.validate().is_err());
    }
}
