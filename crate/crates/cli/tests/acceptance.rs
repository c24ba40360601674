//! Acceptance criteria 1 to 12. Each criterion prints one PASS/FAIL line with
//! its measured values; the test fails if any criterion fails.
//!
//! `ACCEPTANCE_ONLY=3,7` restricts the run to the listed criteria.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use thinfilm_core::bounds::{self, check_lemma41};
use thinfilm_core::energy::energy_f;
use thinfilm_core::minimize::MinimizeOptions;
use thinfilm_core::profiles::{make_profile, periodic_walls, profile_local_energy, stripe_field, Axis, StripeSpec};
use thinfilm_core::spectral::{frac_seminorm_sq, h12_realspace};
use thinfilm_core::strayfield::{
    stray_energy_multiplier, stray_energy_zquadrature, verify_theorem51, Estimate, ZResolvedMag,
};
use thinfilm_core::{Magnetization, ReducedParams, ScalarField, TorusGrid, LAMBDA_C};
use thinfilm_experiments::domain::DomainOptions;
use thinfilm_experiments::sweep::{coherence, stripe_upper_bound};
use thinfilm_experiments::{
    bisect_lambda_c, domain_size_law, fit_supercritical, subcritical_gamma_check, sweep, Constants, GridRule,
    SweepRecord,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn h12_oracle() -> Outcome {
    let corpus = bounds::default_corpus(0).unwrap();
    let fields: Vec<&ScalarField> = corpus.iter().filter(|e| e.field.grid().n() == 64).take(10).map(|e| &e.field).collect();
    let mut worst = 0.0f64;
    for f in &fields {
        let s = frac_seminorm_sq(f, 0.5).unwrap();
        let r = h12_realspace(f, 8.0).unwrap();
        worst = worst.max((s - r).abs() / s);
    }
    let g = TorusGrid::new(64, 1.0).unwrap();
    let wave = ScalarField::from_fn(g, |x, _| (2.0 * PI * x).cos());
    let spec = frac_seminorm_sq(&wave, 0.5).unwrap();
    let real = h12_realspace(&wave, 8.0).unwrap();
    let we = ((spec - PI) / PI).abs().max(((real - PI) / PI).abs());
    outcome(
        fields.len() == 10 && worst <= 0.03 && we <= 0.03,
        format!("{} fields, worst rel diff {worst:.2e}; plane wave rel err {we:.2e}", fields.len()),
    )
}

fn stray_exactness() -> Outcome {
    let corpus = bounds::default_corpus(0).unwrap();
    let mut worst = 0.0f64;
    let mut count = 0;
    for e in corpus.iter().filter(|e| e.field.grid().n() == 32).take(10) {
        let m = Magnetization::from_fields(
            e.field.map(|v| (1.0 - 0.81 * v * v).sqrt()),
            ScalarField::zeros(*e.field.grid()),
            e.field.map(|v| 0.9 * v),
        )
        .unwrap();
        for t in [1.0, 0.1, 0.01] {
            let a = stray_energy_multiplier(&m, t).unwrap().total;
            let b = stray_energy_zquadrature(&ZResolvedMag::z_constant(&m, 4, t).unwrap());
            worst = worst.max((a - b).abs() / b.abs());
            count += 1;
        }
    }
    let g = TorusGrid::new(16, 1.3).unwrap();
    let up = Magnetization::constant(g, [0.0, 0.0, 1.0]).unwrap();
    // Exact up to the rounding of the cell-area sum.
    let mut uniform = 0.0f64;
    for t in [1.0, 0.1, 0.01] {
        let e: f64 = t * 1.3 * 1.3;
        uniform = uniform.max((stray_energy_multiplier(&up, t).unwrap().total - e).abs() / e);
    }
    outcome(
        worst <= 1e-9 && uniform <= 4.0 * f64::EPSILON,
        format!("{count} cases, worst rel diff {worst:.2e}; uniform e3 rel diff {uniform:.1e}"),
    )
}

fn layered(x: f64, y: f64, z: f64) -> [f64; 3] {
    let th = 0.7 * (2.0 * PI * x).sin() + 0.5 * (2.0 * PI * y).cos() + 0.8 * z;
    let ph = 2.0 * PI * y + z;
    [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
}

fn stray_estimate_ratios() -> Outcome {
    let g = TorusGrid::new(32, 1.0).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for est in [Estimate::Average, Estimate::M3] {
        let ratios: Vec<f64> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&t| verify_theorem51(&ZResolvedMag::from_fn(g, 16, t, layered).unwrap(), est).unwrap().ratio)
            .collect();
        for w in ratios.windows(2) {
            let f = (w[1] / w[0]).max(w[0] / w[1]);
            ok &= f < 2.0 && w[1].is_finite();
        }
        parts.push(format!("{} {:.4?}", est.name(), ratios));
    }
    outcome(ok, parts.join("; "))
}

fn bloch_wall() -> Outcome {
    let eps = 1.0 / 64.0;
    let g = TorusGrid::x2_invariant(1024, 1.0).unwrap();
    let m = periodic_walls(&g, 2, eps, Axis::X1).unwrap();
    let b = energy_f(&m, &ReducedParams::new(eps, 0.0).unwrap(), None).unwrap();
    let per = b.local() / 2.0;
    let one_d = profile_local_energy(&make_profile(eps, f64::INFINITY).unwrap()).unwrap();
    outcome(
        (per - 2.0).abs() <= 0.02 && (one_d - 2.0).abs() <= 0.02,
        format!("grid energy per transition {per:.6}, profile integral {one_d:.6}"),
    )
}

fn stripe_bounds(c: &Constants) -> Outcome {
    let mut ok = true;
    let mut worst_local = 0.0f64;
    let mut min_gap = f64::INFINITY;
    for eps in [0.02f64, 0.01, 0.005] {
        let n = ((8.0 / eps).ceil() as usize).next_power_of_two();
        let g = TorusGrid::x2_invariant(n, 1.0).unwrap();
        for nt in [2usize, 4, 8] {
            let m = stripe_field(&StripeSpec::new(nt, eps, Axis::X1).unwrap(), &g).unwrap();
            let l = eps.ln().abs();
            for lambda in [0.5 * LAMBDA_C, LAMBDA_C, 1.5 * LAMBDA_C] {
                let b = energy_f(&m, &ReducedParams::new(eps, lambda).unwrap(), None).unwrap();
                let two_n = 2.0 * nt as f64;
                let bound = two_n * (1.0 - lambda * (c.c_hat.value / (eps * two_n)).ln() / (LAMBDA_C * l));
                worst_local = worst_local.max(b.local() / two_n - 1.0);
                min_gap = min_gap.min(bound - b.total);
                ok &= b.local() <= two_n * 1.02 && b.total <= bound;
            }
        }
    }
    outcome(
        ok,
        format!("max local excess {:.3}%, min bound slack {min_gap:.4} (c_hat {:.4})", 100.0 * worst_local, c.c_hat.value),
    )
}

fn gamma_limit() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for lambda in [0.0, PI / 4.0, 0.95 * LAMBDA_C] {
        let t = subcritical_gamma_check(lambda, 0.25, &[(0.004, 0.06)], 1024).unwrap();
        let r = &t.rows[0];
        ok &= r.rel_error <= 0.05;
        parts.push(format!("lambda {lambda:.4}: F {:.4} vs {:.4} ({:+.1}%)", r.energy, t.target, 100.0 * (r.energy / t.target - 1.0)));
    }
    outcome(ok, parts.join("; "))
}

const SUPER_EPS: [f64; 4] = [0.02, 0.01, 0.005, 0.0025];

fn supercritical_records() -> Vec<(f64, Vec<SweepRecord>)> {
    let rule = GridRule { x2_invariant: true, ..GridRule::default() };
    [1.25, 1.5]
        .iter()
        .map(|&k| (k, sweep(&SUPER_EPS, &[k * LAMBDA_C], &rule, &MinimizeOptions::default(), 0).unwrap()))
        .collect()
}

fn supercritical_exponent(recs: &[(f64, Vec<SweepRecord>)]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, r) in recs {
        let fit = fit_supercritical(r).unwrap();
        let target = fit.target.unwrap();
        let tol = if *k == 1.25 { 0.05 } else { 0.07 };
        let pass = (fit.slope - target).abs() <= tol;
        ok &= pass;
        let walls: Vec<String> = r.iter().map(|x| format!("{:.0}", x.wall_length)).collect();
        parts.push(format!(
            "{k}lc: slope {:.4} vs {target:.4} ±{tol} [{}] (walls {})",
            fit.slope,
            if pass { "ok" } else { "off" },
            walls.join("/")
        ));
    }
    outcome(ok, parts.join("; "))
}

fn critical_threshold() -> Outcome {
    let rule = GridRule { x2_invariant: true, ..GridRule::default() };
    let dev: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&e| {
            let w = bisect_lambda_c(e, 0.0, 2.0 * LAMBDA_C, 0.01, &rule, &MinimizeOptions::default(), 0).unwrap();
            (w.lambda_hat - LAMBDA_C).abs()
        })
        .collect();
    let decreasing = dev.windows(2).all(|w| w[1] < w[0]);
    let last = dev[dev.len() - 1];
    outcome(decreasing && last <= 0.15, format!("|lambda_hat - pi/2| = {dev:.4?}; decreasing {decreasing}, final <= 0.15: {}", last <= 0.15))
}

fn coherence_check(recs: &[(f64, Vec<SweepRecord>)], c: &Constants) -> Outcome {
    let mut ordered = true;
    let mut below_stripes = true;
    let mut all = Vec::new();
    let mut per = Vec::new();
    for (k, rs) in recs {
        let mut cs = Vec::new();
        for r in rs {
            let h = coherence(r);
            ordered &= h.wall_le_local && h.local_le_nonlocal;
            below_stripes &= r.best_energy <= stripe_upper_bound(r.eps, r.lambda, c.c_hat.value);
            cs.push(h.c_tilde);
        }
        per.push(format!("{k}lc {cs:.3?}"));
        all.extend(cs);
    }
    let (lo, hi) = all.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    outcome(
        ordered && below_stripes && hi <= 2.0 * lo,
        format!(
            "ordering holds: {ordered}; below stripe bound: {below_stripes}; C ratio {:.3} ({})",
            hi / lo,
            per.join(", ")
        ),
    )
}

fn split_kernel_bound(c: &Constants) -> Outcome {
    let corpus = bounds::default_corpus(0).unwrap();
    let cal = bounds::calibrate_c_star(&corpus).unwrap();
    let mut min_slack = f64::INFINITY;
    let mut osc = 0;
    let mut osc_ok = true;
    let mut grids = std::collections::BTreeSet::new();
    for e in &corpus {
        let r = check_lemma41(&e.field, e.eps, cal.c_star).unwrap();
        min_slack = min_slack.min(r.slack);
        grids.insert(e.field.grid().n());
        if e.id.starts_with("stripes") {
            osc += 1;
            osc_ok &= r.min_branch_active && r.rhs < r.rhs_weak;
        }
    }
    outcome(
        min_slack >= 0.0 && osc > 0 && osc_ok && cal.c_star == c.c_star.value,
        format!(
            "c_star {}, {} fields on grids {grids:?}, min slack {min_slack:.4}; oscillatory min-branch tighter on {osc}: {osc_ok}",
            cal.c_star,
            corpus.len()
        ),
    )
}

fn domain_law() -> Outcome {
    let fit = domain_size_law(1.5, &[2.0 / 3.0, 0.6, 6.0 / 11.0, 0.5], &DomainOptions::default()).unwrap();
    let rel = (fit.slope - fit.target).abs() / fit.target;
    outcome(rel <= 0.15, format!("slope {:.4} vs {:.4} ({:.1}%), r2 {:.6}", fit.slope, fit.target, 100.0 * rel, fit.r_squared))
}

fn run_cli(args: &[&str]) {
    let o = Command::new(env!("CARGO_BIN_EXE_thinfilm")).args(args).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

/// Numeric columns only; labels are compared too since they are fixed text.
fn same_csv(a: &Path, b: &Path) -> bool {
    std::fs::read(a).unwrap() == std::fs::read(b).unwrap()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    std::fs::write(
        &cfg,
        r#"{"subcommand": "sweep", "rng_seed": 3,
            "parameters": {"eps": [0.05, 0.03], "lambda": [0.0, 1.0, 2.5, 3.0],
                           "grid": {"x2_invariant": true}}}"#,
    )
    .unwrap();
    let p = |s: &str| dir.path().join(s);
    let s = |p: &Path| p.to_str().unwrap().to_string();
    run_cli(&["sweep", "--config", &s(&cfg), "--jobs", "1", "-o", &s(&p("j1"))]);
    run_cli(&["sweep", "--config", &s(&cfg), "--jobs", "3", "-o", &s(&p("j3"))]);
    run_cli(&["replay", &s(&p("j1").join("manifest.json")), "-o", &s(&p("replay"))]);
    let a = same_csv(&p("j1").join("sweep.csv"), &p("j3").join("sweep.csv"));
    let b = same_csv(&p("j1").join("sweep.csv"), &p("replay").join("sweep.csv"));
    outcome(a && b, format!("jobs 1 vs 3 identical: {a}; manifest replay identical: {b}"))
}

#[test]
fn acceptance() {
    let only: Option<Vec<usize>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let want = |i: usize| only.as_ref().is_none_or(|o| o.contains(&i));
    let constants = Constants::calibrate().unwrap();
    let mut supercritical = None;
    let mut results = Vec::new();
    for i in 1..=12 {
        if !want(i) {
            continue;
        }
        let start = Instant::now();
        let o = match i {
            1 => h12_oracle(),
            2 => stray_exactness(),
            3 => stray_estimate_ratios(),
            4 => bloch_wall(),
            5 => stripe_bounds(&constants),
            6 => gamma_limit(),
            7 | 9 => {
                let recs = supercritical.get_or_insert_with(supercritical_records);
                if i == 7 {
                    supercritical_exponent(recs)
                } else {
                    coherence_check(recs, &constants)
                }
            }
            8 => critical_threshold(),
            10 => split_kernel_bound(&constants),
            11 => domain_law(),
            12 => determinism(),
            _ => unreachable!(),
        };
        println!(
            "criterion {i:>2}: {} ({:.1} s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        results.push((i, o.pass));
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
