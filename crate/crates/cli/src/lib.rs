//! `thinfilm` command line: strict JSON configs, flag overrides, manifests.
//!
//! Every run computes all results in memory first and only then writes the
//! output directory, so a failed run leaves no partial artifacts.

// `!(x > 0.0)` style guards are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod commands;
mod params;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{Map, Value};
use thinfilm_experiments::manifest::{GridUse, Manifest};
use thinfilm_experiments::{Constants, ExperimentError};

pub use commands::Artifacts;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

pub const TOOL: &str = "thinfilm";

#[derive(Debug, Parser)]
#[command(name = "thinfilm", version, about = "Thin-film micromagnetics toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
struct Common {
    /// JSON run config: {"parameters": {...}, "rng_seed": .., "output_dir": ..}
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, short = 'o')]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    rng_seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Energy breakdown of an MFD1 magnetization.
    Energy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        ell: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
    },
    /// Multi-seed minimization of F or J.
    Minimize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        ell: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
    },
    /// Minimal energies over an (ε, λ) grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        lambda: Option<Vec<f64>>,
    },
    /// Sweep plus monodomain/multidomain classification.
    PhaseDiagram {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        lambda: Option<Vec<f64>>,
    },
    /// Bisection for the onset of negative energy.
    BisectLambda {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long)]
        lambda_lo: Option<f64>,
        #[arg(long)]
        lambda_hi: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Tabulates the one-dimensional wall profile.
    Profile {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eps: Option<f64>,
        /// Cutoff radius, or `inf`.
        #[arg(long = "R")]
        r: Option<String>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Stray-field multiplier against the z-quadrature.
    StrayfieldCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        t: Option<Vec<f64>>,
    },
    /// Split-kernel inequality on a seeded corpus.
    BoundCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        c_star: Option<f64>,
    },
    /// Disk recovery energies against the subcritical limit.
    GammaCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        lambda: Option<Vec<f64>>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Optimal stripe period across a thickness ladder.
    DomainSize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        t: Option<Vec<f64>>,
    },
    /// Re-runs the run recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long, short = 'o')]
        output_dir: Option<PathBuf>,
    },
}

/// Failure of a run, mapped onto exit statuses.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}

impl From<thinfilm_core::Error> for CliError {
    fn from(e: thinfilm_core::Error) -> Self {
        CliError::Experiment(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_VALIDATION,
            CliError::Experiment(e) if e.is_validation() => EXIT_VALIDATION,
            CliError::Experiment(_) => EXIT_NUMERIC,
        }
    }

    pub fn reason(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Experiment(e) => e.reason(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    #[serde(default)]
    subcommand: Option<String>,
    #[serde(default)]
    parameters: Map<String, Value>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    rng_seed: Option<u64>,
}

/// A fully resolved run.
#[derive(Debug, Clone)]
pub struct Run {
    pub subcommand: String,
    pub parameters: Value,
    pub rng_seed: u64,
    pub jobs: usize,
    pub output_dir: PathBuf,
}

fn put<T: serde::Serialize>(m: &mut Map<String, Value>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        m.insert(key.to_string(), serde_json::to_value(v).expect("flag values serialize"));
    }
}

fn resolve(name: &str, common: Common, flags: Map<String, Value>) -> Result<Run> {
    let cfg = match &common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = &cfg.subcommand {
        if s != name {
            return Err(CliError::Config(format!("config is for {s:?}, not {name:?}")));
        }
    }
    let mut parameters = cfg.parameters;
    parameters.extend(flags);
    let output_dir = common
        .output_dir
        .or(cfg.output_dir)
        .ok_or_else(|| CliError::Usage("no output directory (use --output-dir or the config)".into()))?;
    Ok(Run {
        subcommand: name.to_string(),
        parameters: Value::Object(parameters),
        rng_seed: common.rng_seed.or(cfg.rng_seed).unwrap_or(0),
        jobs: common.jobs,
        output_dir,
    })
}

fn from_manifest(path: &Path, output_dir: Option<PathBuf>) -> Result<Run> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if m.tool != TOOL {
        return Err(CliError::Config(format!("manifest was written by {:?}", m.tool)));
    }
    let output_dir = output_dir.unwrap_or_else(|| path.parent().map(Path::to_path_buf).unwrap_or_default());
    Ok(Run { subcommand: m.subcommand, parameters: m.parameters, rng_seed: m.rng_seed, jobs: m.jobs, output_dir })
}

fn to_run(cmd: Command) -> Result<Run> {
    let mut f = Map::new();
    let (name, common) = match cmd {
        Command::Energy { common, input, eps, lambda, ell, t, q } => {
            put(&mut f, "input", input);
            put(&mut f, "eps", eps);
            put(&mut f, "lambda", lambda);
            put(&mut f, "ell", ell);
            put(&mut f, "t", t);
            put(&mut f, "q", q);
            ("energy", common)
        }
        Command::Minimize { common, eps, lambda, n, ell, t, q } => {
            put(&mut f, "eps", eps);
            put(&mut f, "lambda", lambda);
            put(&mut f, "n", n);
            put(&mut f, "ell", ell);
            put(&mut f, "t", t);
            put(&mut f, "q", q);
            ("minimize", common)
        }
        Command::Sweep { common, eps, lambda } => {
            put(&mut f, "eps", eps);
            put(&mut f, "lambda", lambda);
            ("sweep", common)
        }
        Command::PhaseDiagram { common, eps, lambda } => {
            put(&mut f, "eps", eps);
            put(&mut f, "lambda", lambda);
            ("phase-diagram", common)
        }
        Command::BisectLambda { common, eps, lambda_lo, lambda_hi, tol } => {
            put(&mut f, "eps", eps);
            put(&mut f, "lambda_lo", lambda_lo);
            put(&mut f, "lambda_hi", lambda_hi);
            put(&mut f, "tol", tol);
            ("bisect-lambda", common)
        }
        Command::Profile { common, eps, r, points } => {
            put(&mut f, "eps", eps);
            let r = r.map(|s| match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Value::from(v),
                _ => Value::from(s),
            });
            put(&mut f, "R", r);
            put(&mut f, "points", points);
            ("profile", common)
        }
        Command::StrayfieldCheck { common, n, t } => {
            put(&mut f, "n", n);
            put(&mut f, "t", t);
            ("strayfield-check", common)
        }
        Command::BoundCheck { common, c_star } => {
            put(&mut f, "c_star", c_star);
            ("bound-check", common)
        }
        Command::GammaCheck { common, lambda, radius, n } => {
            put(&mut f, "lambda", lambda);
            put(&mut f, "radius", radius);
            put(&mut f, "n", n);
            ("gamma-check", common)
        }
        Command::DomainSize { common, q, t } => {
            put(&mut f, "q", q);
            put(&mut f, "t", t);
            ("domain-size", common)
        }
        Command::Replay { manifest, output_dir } => return from_manifest(&manifest, output_dir),
    };
    resolve(name, common, f)
}

/// Parses `args` (program name first) into a resolved run.
pub fn parse(args: impl IntoIterator<Item = OsString>) -> Result<Run> {
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string().trim().to_string()))?;
    to_run(cli.command)
}

/// Loads `THINFILM_CONSTANTS` or calibrates.
pub fn load_constants() -> Result<Constants> {
    Ok(Constants::from_env_or_calibrate()?)
}

/// Computes the run and writes its artifacts and `manifest.json`.
pub fn execute(run: &Run) -> Result<Manifest> {
    let (parameters, mut constants) = (run.parameters.clone(), load_constants()?);
    let art = commands::dispatch(&run.subcommand, parameters, run.rng_seed, run.jobs, &mut constants)?;
    let manifest = Manifest {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: run.subcommand.clone(),
        parameters: art.parameters.clone(),
        rng_seed: run.rng_seed,
        jobs: run.jobs,
        constants,
        grids: art.grids.clone(),
        outputs: art.files.iter().map(|(n, _)| n.clone()).collect(),
    };
    write_outputs(&run.output_dir, &art, &manifest)?;
    Ok(manifest)
}

fn write_outputs(dir: &Path, art: &Artifacts, manifest: &Manifest) -> Result<()> {
    let io = |e: std::io::Error| CliError::Experiment(ExperimentError::Io(e));
    std::fs::create_dir_all(dir).map_err(io)?;
    for (name, bytes) in &art.files {
        std::fs::write(dir.join(name), bytes).map_err(io)?;
    }
    let text = serde_json::to_string_pretty(manifest).map_err(ExperimentError::from)? + "\n";
    std::fs::write(dir.join("manifest.json"), text).map_err(io)?;
    Ok(())
}

/// Entry point shared by the binary and the tests; returns the exit status.
pub fn main_with(args: impl IntoIterator<Item = OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return EXIT_OK;
            }
            let e = CliError::Usage(e.to_string().trim().to_string());
            report(&e);
            return e.exit_code();
        }
    };
    let run = match to_run(cli.command) {
        Ok(r) => r,
        Err(e) => {
            report(&e);
            return e.exit_code();
        }
    };
    match execute(&run) {
        Ok(m) => {
            println!("{}", serde_json::json!({"status": "ok", "outputs": m.outputs}));
            EXIT_OK
        }
        Err(e) => {
            report(&e);
            e.exit_code()
        }
    }
}

fn report(e: &CliError) {
    eprintln!("{}", serde_json::json!({"status": "error", "reason": e.reason(), "message": e.to_string()}));
}

/// Grid usage entry for a manifest.
pub(crate) fn grid_use(label: impl Into<String>, g: &thinfilm_core::Grid) -> GridUse {
    GridUse { label: label.into(), n: g.n(), rows: g.rows(), side: g.side_length() }
}
