//! Subcommand bodies. Each returns its artifacts without touching the disk.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use thinfilm_core::bounds::{self, check_lemma41, report_csv_row, REPORT_HEADER};
use thinfilm_core::energy::{energy_f, wall_length, Functional, RenormalizedFunctional};
use thinfilm_core::minimize::{self, minimize_F, MinimizeOptions, MinimizeResult, SeedDescriptor};
use thinfilm_core::mfd::{self, FieldDump};
use thinfilm_core::profiles::{make_profile, profile_local_energy};
use thinfilm_core::strayfield::{
    stray_energy_multiplier, stray_energy_zquadrature, verify_theorem51, Estimate, Theorem51Report, ZResolvedMag,
};
use thinfilm_core::{Breakdown, Grid, Mag, ScalarField, TorusGrid};
use thinfilm_experiments::critical::{attach_bracket, calibrate_betas};
use thinfilm_experiments::domain::domain_csv;
use thinfilm_experiments::gamma::gamma_csv;
use thinfilm_experiments::manifest::GridUse;
use thinfilm_experiments::output::{float, opt_float, Csv};
use thinfilm_experiments::sweep::{phase_csv, sweep_csv};
use thinfilm_experiments::{
    bisect_lambda_c, domain_size_law, phase_diagram, subcritical_gamma_check, sweep, with_jobs, Constants,
};

use crate::params::*;
use crate::{grid_use, CliError, Result};

/// Resolved parameters plus named output files.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub parameters: Value,
    pub files: Vec<(String, Vec<u8>)>,
    pub grids: Vec<GridUse>,
}

impl Artifacts {
    fn new<P: Serialize>(p: &P) -> Result<Self> {
        let parameters = serde_json::to_value(p).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Self { parameters, ..Self::default() })
    }

    fn csv(&mut self, name: &str, c: &Csv) {
        self.files.push((name.to_string(), c.render().into_bytes()));
    }

    fn text(&mut self, name: &str, s: String) {
        self.files.push((name.to_string(), s.into_bytes()));
    }

    fn dump(&mut self, name: &str, d: &FieldDump<f64>) -> Result<()> {
        let mut buf = Vec::new();
        mfd::write(d, &mut buf)?;
        self.files.push((name.to_string(), buf));
        Ok(())
    }
}

fn decode<P: DeserializeOwned>(v: Value) -> Result<P> {
    serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string()))
}

pub fn dispatch(name: &str, params: Value, rng_seed: u64, jobs: usize, constants: &mut Constants) -> Result<Artifacts> {
    match name {
        "energy" => energy(decode(params)?),
        "minimize" => minimize_cmd(decode(params)?, rng_seed, jobs),
        "sweep" => sweep_cmd(decode(params)?, rng_seed, jobs),
        "phase-diagram" => phase_cmd(decode(params)?, rng_seed, jobs, constants),
        "bisect-lambda" => bisect_cmd(decode(params)?, rng_seed, jobs, constants),
        "profile" => profile(decode(params)?),
        "strayfield-check" => strayfield(decode(params)?, rng_seed),
        "bound-check" => bound(decode(params)?, rng_seed, constants),
        "gamma-check" => gamma(decode(params)?, jobs),
        "domain-size" => domain(decode(params)?, jobs),
        other => Err(CliError::Usage(format!("unknown subcommand {other:?}"))),
    }
}

const BREAKDOWN_HEADER: [&str; 7] = ["exchange", "penalty", "nonlocal", "volume", "zeeman", "total", "wall_length"];

fn breakdown_cells(b: &Breakdown, wall: f64) -> Vec<String> {
    [b.exchange, b.penalty, b.nonlocal, b.volume, b.zeeman, b.total, wall].map(float).to_vec()
}

fn read_scalar(path: Option<&std::path::PathBuf>) -> Result<Option<ScalarField>> {
    Ok(match path {
        Some(p) => Some(mfd::read_file::<f64>(p)?.into_scalar()?),
        None => None,
    })
}

fn energy(p: EnergyParams) -> Result<Artifacts> {
    let mut art = Artifacts::new(&p)?;
    let m = mfd::read_file::<f64>(&p.input)?.into_magnetization()?;
    art.grids.push(grid_use("input", m.grid()));
    let b = match model(p.eps, p.lambda, p.ell, p.t, p.q)? {
        Model::Reduced(rp) => energy_f(&m, &rp, read_scalar(p.external_field.as_ref())?.as_ref())?,
        Model::Physical(pp) => {
            if p.external_field.is_some() {
                return Err(CliError::Config("external_field applies to the reduced model only".into()));
            }
            RenormalizedFunctional::new(*m.grid(), pp)?.evaluate(&m)?
        }
    };
    let mut c = Csv::new(&BREAKDOWN_HEADER);
    c.push(breakdown_cells(&b, wall_length(&m)));
    art.csv("energy.csv", &c);
    Ok(art)
}

fn make_grid(n: usize, x2_invariant: bool) -> Result<Grid> {
    Ok(if x2_invariant { TorusGrid::x2_invariant(n, 1.0)? } else { TorusGrid::new(n, 1.0)? })
}

fn with_seed(mut opts: MinimizeOptions, rng_seed: u64) -> MinimizeOptions {
    opts.rng_seed = rng_seed;
    opts
}

fn minimize_cmd(mut p: MinimizeParams, rng_seed: u64, jobs: usize) -> Result<Artifacts> {
    p.options = with_seed(p.options, rng_seed);
    p.options.validate()?;
    let model = model(p.eps, p.lambda, p.ell, p.t, p.q)?;
    let eps = match &model {
        Model::Reduced(rp) => rp.eps,
        Model::Physical(pp) => 1.0 / pp.scaled_period(),
    };
    if p.n.is_none() {
        let rule = thinfilm_experiments::GridRule { x2_invariant: p.x2_invariant, ..Default::default() };
        p.n = Some(rule.grid_for(eps)?.n());
    }
    let grid = make_grid(p.n.unwrap_or_default(), p.x2_invariant)?;
    let mut art = Artifacts::new(&p)?;
    art.grids.push(grid_use("minimize", &grid));
    let res: MinimizeResult = match model {
        Model::Reduced(rp) => {
            let g = read_scalar(p.external_field.as_ref())?;
            with_jobs(jobs, || minimize_F(&rp, &grid, &p.options, g.as_ref()))?
        }
        Model::Physical(pp) => {
            if p.external_field.is_some() {
                return Err(CliError::Config("external_field applies to the reduced model only".into()));
            }
            if grid.spacing() > eps / 8.0 {
                let need = ((8.0 / eps).ceil() as usize).next_power_of_two();
                return Err(thinfilm_core::Error::Resolution(format!("eps = {eps} requires n >= {need}")).into());
            }
            let f = RenormalizedFunctional::new(grid, pp)?;
            with_jobs(jobs, || minimize::minimize(&f, &p.options))?
        }
    };

    let mut header: Vec<&str> = BREAKDOWN_HEADER.to_vec();
    header.extend(["iters", "converged", "grad_norm", "seed_id"]);
    let mut c = Csv::new(&header);
    let mut row = breakdown_cells(&res.breakdown, res.wall_length);
    row.extend([res.iters.to_string(), res.converged.to_string(), float(res.grad_norm), res.seed_id.label()]);
    c.push(row);
    art.csv("minimize.csv", &c);

    let mut s = Csv::new(&["index", "seed", "total", "iters", "converged", "stop", "failure"]);
    for (i, o) in res.seeds.iter().enumerate() {
        let stop = o.stop.map(|r| serde_json::to_value(r).ok().and_then(|v| v.as_str().map(String::from)));
        s.push(vec![
            i.to_string(),
            o.seed.label(),
            opt_float(o.total),
            o.iters.to_string(),
            o.converged.to_string(),
            stop.flatten().unwrap_or_default(),
            o.failure.clone().unwrap_or_default().replace(',', ";"),
        ]);
    }
    art.csv("seeds.csv", &s);
    if p.options.record_trace {
        art.text("trace.csv", minimize::trace_csv(&res.seeds[res.seed_index].trace));
    }
    art.dump("m_star.mfd", &FieldDump::from_magnetization(&res.m_star))?;
    Ok(art)
}

fn sweep_grids(art: &mut Artifacts, eps: &[f64], rule: &thinfilm_experiments::GridRule) -> Result<()> {
    for &e in eps {
        art.grids.push(grid_use(format!("eps={e}"), &rule.grid_for(e)?));
    }
    Ok(())
}

fn sweep_cmd(mut p: SweepParams, rng_seed: u64, jobs: usize) -> Result<Artifacts> {
    p.options = with_seed(p.options, rng_seed);
    let mut art = Artifacts::new(&p)?;
    sweep_grids(&mut art, &p.eps, &p.grid)?;
    let recs = sweep(&p.eps, &p.lambda, &p.grid, &p.options, jobs)?;
    art.csv("sweep.csv", &sweep_csv(&recs));
    Ok(art)
}

fn phase_cmd(mut p: SweepParams, rng_seed: u64, jobs: usize, constants: &mut Constants) -> Result<Artifacts> {
    p.options = with_seed(p.options, rng_seed);
    let mut art = Artifacts::new(&p)?;
    sweep_grids(&mut art, &p.eps, &p.grid)?;
    let (recs, rows) = phase_diagram(&p.eps, &p.lambda, &p.grid, &p.options, constants, jobs)?;
    art.csv("sweep.csv", &sweep_csv(&recs));
    art.csv("phase.csv", &phase_csv(&rows));
    Ok(art)
}

fn bisect_cmd(mut p: BisectParams, rng_seed: u64, jobs: usize, constants: &mut Constants) -> Result<Artifacts> {
    p.options = with_seed(p.options, rng_seed);
    if p.eps.is_empty() {
        return Err(CliError::Config("eps list is empty".into()));
    }
    let mut art = Artifacts::new(&p)?;
    sweep_grids(&mut art, &p.eps, &p.grid)?;
    let mut windows = Vec::new();
    for &e in &p.eps {
        windows.push(bisect_lambda_c(e, p.lambda_lo, p.lambda_hi, p.tol, &p.grid, &p.options, jobs)?);
    }
    if constants.beta1.is_none() || constants.beta2.is_none() {
        let pts: Vec<(f64, f64)> = windows.iter().map(|w| (w.eps, w.lambda_hat)).collect();
        let (b1, b2) = calibrate_betas(&pts, "bisection thresholds of this run");
        constants.beta1.get_or_insert(b1);
        constants.beta2.get_or_insert(b2);
    }
    attach_bracket(&mut windows, constants);
    let mut c = Csv::new(&["eps", "lambda_lo", "lambda_hi", "lambda_hat", "lambda_minus", "lambda_plus"]);
    let mut ev = Csv::new(&["eps", "lambda", "best_energy"]);
    for w in &windows {
        c.push(vec![
            float(w.eps),
            float(w.lambda_lo),
            float(w.lambda_hi),
            float(w.lambda_hat),
            opt_float(w.lambda_minus),
            opt_float(w.lambda_plus),
        ]);
        for &(l, e) in &w.evaluations {
            ev.push(vec![float(w.eps), float(l), float(e)]);
        }
    }
    art.csv("critical.csv", &c);
    art.csv("evaluations.csv", &ev);
    Ok(art)
}

fn profile(p: ProfileParams) -> Result<Artifacts> {
    if p.points < 3 || p.points.is_multiple_of(2) {
        return Err(CliError::Config(format!("points must be odd and at least 3, got {}", p.points)));
    }
    if !(p.half_width > 0.0) {
        return Err(CliError::Config("half_width must be positive".into()));
    }
    let art_params = p.clone();
    let prof = make_profile(p.eps, p.r)?;
    let mut art = Artifacts::new(&art_params)?;
    let half = (p.points / 2) as i64;
    let mut c = Csv::new(&["x", "xi", "dxi"]);
    for k in -half..=half {
        let x = p.eps * (k as f64 * p.half_width / half as f64);
        c.push(vec![float(x), float(prof.eval(x)), float(prof.derivative(x))]);
    }
    art.csv("profile.csv", &c);
    let mut s = Csv::new(&["eps", "R", "eta", "local_energy"]);
    s.push(vec![float(p.eps), float(p.r), float(prof.eta()), float(profile_local_energy(&prof)?)]);
    art.csv("profile_summary.csv", &s);
    Ok(art)
}

/// Smooth z-varying test field for the thin-film estimates.
fn layered_field(x: f64, y: f64, z: f64) -> [f64; 3] {
    use std::f64::consts::TAU;
    let th = 0.7 * (TAU * x).sin() + 0.5 * (TAU * y).cos() + 0.8 * z;
    let ph = TAU * y + z;
    [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
}

fn strayfield(p: StrayfieldParams, rng_seed: u64) -> Result<Artifacts> {
    if p.t.is_empty() || p.nz_start < 2 || p.nz_max < p.nz_start || !(p.rel_tol > 0.0) {
        return Err(CliError::Config("need t values, 2 <= nz_start <= nz_max and rel_tol > 0".into()));
    }
    let mut art = Artifacts::new(&p)?;
    let grid = TorusGrid::new(p.n, p.side)?;
    art.grids.push(grid_use("strayfield", &grid));
    let up = SeedDescriptor::up();
    let tilted = SeedDescriptor::Perturbed { base: Box::new(up.clone()), draw: 0, amplitude: p.amplitude };
    let fields: [(&str, Mag); 2] =
        [("uniform_e3", up.build(&grid, 1.0, rng_seed)?), ("seeded", tilted.build(&grid, 1.0, rng_seed)?)];
    let mut c = Csv::new(&["field", "t", "nz", "surface", "volume", "multiplier", "zquadrature", "rel_diff"]);
    for (name, m) in &fields {
        for &t in &p.t {
            let d = stray_energy_multiplier(m, t)?;
            let mut nz = p.nz_start;
            let mut zq = stray_energy_zquadrature(&ZResolvedMag::z_constant(m, nz, t)?);
            while nz * 2 <= p.nz_max {
                let next = stray_energy_zquadrature(&ZResolvedMag::z_constant(m, nz * 2, t)?);
                nz *= 2;
                let done = (next - zq).abs() <= p.rel_tol * next.abs();
                zq = next;
                if done {
                    break;
                }
            }
            let rel = (d.total - zq).abs() / zq.abs().max(f64::MIN_POSITIVE);
            c.push(vec![
                name.to_string(),
                float(t),
                nz.to_string(),
                float(d.surface_term),
                float(d.volume_term),
                float(d.total),
                float(zq),
                float(rel),
            ]);
        }
    }
    art.csv("strayfield.csv", &c);
    let mut est = String::from(Theorem51Report::<f64>::CSV_HEADER);
    est.push('\n');
    for &t in &p.t {
        let m = ZResolvedMag::from_fn(grid, p.nz_estimates, t, layered_field)?;
        for e in Estimate::ALL {
            est.push_str(&verify_theorem51(&m, e)?.csv_row());
            est.push('\n');
        }
    }
    art.text("estimates.csv", est);
    Ok(art)
}

fn bound(p: BoundParams, rng_seed: u64, constants: &Constants) -> Result<Artifacts> {
    let corpus = bounds::default_corpus(rng_seed)?;
    let (c_star, source) = match p.c_star {
        Some(c) => (c, "parameter"),
        None if rng_seed == 0 => (constants.c_star.value, "constants"),
        None => (bounds::calibrate_c_star(&corpus)?.c_star, "calibrated on this corpus"),
    };
    let mut art = Artifacts::new(&p)?;
    for g in bounds::CORPUS_GRIDS {
        art.grids.push(grid_use(format!("corpus n={g}"), &TorusGrid::new(g, 1.0)?));
    }
    let mut text = String::from(REPORT_HEADER);
    text.push('\n');
    let mut min_slack = f64::INFINITY;
    let mut min_branch = 0usize;
    for e in &corpus {
        let r = check_lemma41(&e.field, e.eps, c_star)?;
        min_slack = min_slack.min(r.slack);
        min_branch += r.min_branch_active as usize;
        text.push_str(&report_csv_row(&e.id, &r));
        text.push('\n');
    }
    art.text("bounds.csv", text);
    let mut s = Csv::new(&["c_star", "c_star_source", "entries", "min_slack", "min_branch_active", "corpus_sha256"]);
    s.push(vec![
        float(c_star),
        source.to_string(),
        corpus.len().to_string(),
        float(min_slack),
        min_branch.to_string(),
        bounds::corpus_hash(&corpus),
    ]);
    art.csv("bound_summary.csv", &s);
    Ok(art)
}

fn gamma(p: GammaParams, jobs: usize) -> Result<Artifacts> {
    if p.lambda.is_empty() {
        return Err(CliError::Config("lambda list is empty".into()));
    }
    let mut art = Artifacts::new(&p)?;
    art.grids.push(grid_use("disk", &TorusGrid::new(p.n, 1.0)?));
    let tables = with_jobs(jobs, || {
        use rayon::prelude::*;
        p.lambda
            .par_iter()
            .map(|&l| subcritical_gamma_check(l, p.radius, &p.cases, p.n))
            .collect::<thinfilm_experiments::Result<Vec<_>>>()
    })?;
    art.csv("gamma.csv", &gamma_csv(&tables));
    let mut s = Csv::new(&["lambda", "radius", "target", "extrapolated"]);
    for t in &tables {
        s.push(vec![float(t.lambda), float(t.radius), float(t.target), opt_float(t.extrapolated)]);
    }
    art.csv("gamma_summary.csv", &s);
    Ok(art)
}

fn domain(p: DomainParams, jobs: usize) -> Result<Artifacts> {
    let mut art = Artifacts::new(&p)?;
    let fit = with_jobs(jobs, || domain_size_law(p.q, &p.t, &p.options))?;
    for s in &fit.samples {
        art.grids.push(grid_use(format!("t={}", s.t), &TorusGrid::x2_invariant(s.n, 1.0)?));
    }
    art.csv("domain.csv", &domain_csv(&fit));
    let mut s = Csv::new(&["slope", "intercept", "r_squared", "target"]);
    s.push(vec![float(fit.slope), float(fit.intercept), float(fit.r_squared), float(fit.target)]);
    art.csv("domain_fit.csv", &s);
    Ok(art)
}
