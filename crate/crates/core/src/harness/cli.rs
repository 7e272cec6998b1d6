//! `uotlab value|fit|primal|stability|rates|figure1`.
//!
//! Exit codes: 0 on success, 1 for usage errors and malformed configs,
//! 2 for runtime failures.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::entropy::Entropy;
use crate::error::{Error, Result};
use crate::estimator::{fit, uot_estimate, FitConfig};
use crate::measures::{DiscreteMeasure, Seed};
use crate::potentials::PotentialSpec;
use crate::primal::{solve_primal, PrimalOptions};
use crate::semidual::{make_consistent_instance, semidual_value, stability_report, SemiDualProblem};

use super::config::{read_config, ClassSpec, ConfigError, MeasureInput};
use super::figure::figure1;
use super::rates::{rate_experiment, write_rate_outputs, RateConfig};

#[derive(Parser, Debug)]
#[command(name = "uotlab", version, about = "Semi-dual unbalanced optimal transport toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configuration's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the semi-dual objective of a potential.
    Value(Common),
    /// Fit the empirical potential over a class.
    Fit(Common),
    /// Solve the discrete primal problem.
    Primal(Common),
    /// Evaluate the stability inequality against an optimal potential.
    Stability(Common),
    /// Run a Monte Carlo rate experiment.
    Rates(Common),
    /// Write the rate-exponent comparison curves.
    Figure1 {
        /// Comma-separated dimensions.
        #[arg(long, value_delimiter = ',', default_values_t = [12usize, 100])]
        dims: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100.0)]
        alpha_max: f64,
        #[arg(long, default_value_t = 0.25)]
        alpha_step: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValueConfig {
    mu: MeasureInput,
    nu: MeasureInput,
    entropy: Entropy,
    potential: PotentialSpec,
    #[serde(default)]
    radius: Option<f64>,
    #[serde(default)]
    seed: Seed,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitCommandConfig {
    mu: MeasureInput,
    nu: MeasureInput,
    entropy: Entropy,
    class: ClassSpec,
    lambda: f64,
    #[serde(default)]
    radius: Option<f64>,
    #[serde(default)]
    fit: FitConfig,
    #[serde(default)]
    seed: Seed,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrimalConfig {
    mu: MeasureInput,
    nu: MeasureInput,
    entropy: Entropy,
    #[serde(default)]
    options: Option<PrimalOptions>,
    /// Also write `coupling.csv` into the output directory.
    #[serde(default)]
    coupling: bool,
    #[serde(default)]
    seed: Seed,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StabilityConfig {
    mu: MeasureInput,
    /// Defaults to the target that makes `z0` optimal.
    #[serde(default)]
    nu: Option<MeasureInput>,
    entropy: Entropy,
    z0: PotentialSpec,
    z: PotentialSpec,
    #[serde(default)]
    radius: Option<f64>,
    #[serde(default)]
    seed: Seed,
}

#[derive(Serialize)]
struct ValueOutput {
    value: f64,
    uot: f64,
}

#[derive(Serialize)]
struct FitOutput {
    objective: f64,
    uot: f64,
    potential: PotentialSpec,
    grad_norm: f64,
    iterations: usize,
    winner: usize,
    capped: bool,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn seed_of(common: &Common, cfg: Seed) -> Seed {
    common.seed.map(Seed).unwrap_or(cfg)
}

fn problem_radius(mu: &DiscreteMeasure, nu: &DiscreteMeasure, given: Option<f64>) -> f64 {
    given.unwrap_or_else(|| mu.max_norm().max(nu.max_norm()).max(f64::MIN_POSITIVE))
}

fn emit(common_out: Option<&Path>, name: &str, json: &str) -> Result<()> {
    println!("{json}");
    if let Some(dir) = common_out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), format!("{json}\n"))?;
    }
    Ok(())
}

fn run_value(c: &Common) -> std::result::Result<(), Failure> {
    let cfg: ValueConfig = read_config(&c.config)?;
    let base = config_dir(&c.config);
    let seed = seed_of(c, cfg.seed);
    let mu = cfg.mu.load(&base, seed.derive(0))?;
    let nu = cfg.nu.load(&base, seed.derive(1))?;
    let r = problem_radius(&mu, &nu, cfg.radius);
    let z = cfg.potential.build(r)?;
    let p = SemiDualProblem::new(mu, nu, cfg.entropy, r)?;
    let value = semidual_value(&p, &z)?;
    let out = serde_json::to_string_pretty(&ValueOutput { value, uot: -value }).map_err(Error::from)?;
    emit(c.out.as_deref(), "value.json", &out)?;
    Ok(())
}

fn run_fit(c: &Common) -> std::result::Result<(), Failure> {
    let cfg: FitCommandConfig = read_config(&c.config)?;
    let base = config_dir(&c.config);
    let seed = seed_of(c, cfg.seed);
    let mu = cfg.mu.load(&base, seed.derive(0))?;
    let nu = cfg.nu.load(&base, seed.derive(1))?;
    let r = problem_radius(&mu, &nu, cfg.radius);
    let class = Arc::new(cfg.class.build(mu.dim(), cfg.lambda, r)?);
    let fc = FitConfig {
        seed: c.seed.map(Seed).unwrap_or(cfg.fit.seed),
        ..cfg.fit
    };
    let f = fit(&mu, &nu, class, &cfg.entropy, &fc)?;
    let out = FitOutput {
        objective: f.objective,
        uot: uot_estimate(&f),
        potential: f.potential.to_spec(),
        grad_norm: f.grad_norm,
        iterations: f.iterations,
        winner: f.winner,
        capped: f.capped,
    };
    emit(c.out.as_deref(), "fit.json", &serde_json::to_string_pretty(&out).map_err(Error::from)?)?;
    Ok(())
}

fn run_primal(c: &Common) -> std::result::Result<(), Failure> {
    let cfg: PrimalConfig = read_config(&c.config)?;
    let base = config_dir(&c.config);
    let seed = seed_of(c, cfg.seed);
    let mu = cfg.mu.load(&base, seed.derive(0))?;
    let nu = cfg.nu.load(&base, seed.derive(1))?;
    let s = solve_primal(&mu, &nu, &cfg.entropy, &cfg.options.unwrap_or_default())?;
    emit(c.out.as_deref(), "primal.json", &s.to_json()?)?;
    if cfg.coupling {
        let dir = c
            .out
            .as_deref()
            .ok_or_else(|| Failure::Usage("coupling output needs --out".into()))?;
        s.coupling().save_csv(&dir.join("coupling.csv"))?;
    }
    Ok(())
}

fn run_stability(c: &Common) -> std::result::Result<(), Failure> {
    let cfg: StabilityConfig = read_config(&c.config)?;
    let base = config_dir(&c.config);
    let seed = seed_of(c, cfg.seed);
    let mu = cfg.mu.load(&base, seed.derive(0))?;
    // the consistent target depends on z0, whose class needs a radius first
    let z0_probe = cfg.z0.build(mu.max_norm().max(f64::MIN_POSITIVE))?;
    let nu = match &cfg.nu {
        Some(m) => m.load(&base, seed.derive(1))?,
        None => make_consistent_instance(&mu, &z0_probe, &cfg.entropy)?,
    };
    let r = problem_radius(&mu, &nu, cfg.radius);
    let z0 = cfg.z0.build(r)?;
    let z = cfg.z.build(r)?;
    let p = SemiDualProblem::new(mu, nu, cfg.entropy, r)?;
    let report = stability_report(&p, &z, &z0)?;
    emit(
        c.out.as_deref(),
        "stability.json",
        &serde_json::to_string_pretty(&report).map_err(Error::from)?,
    )?;
    Ok(())
}

fn run_rates(c: &Common) -> std::result::Result<(), Failure> {
    let mut cfg: RateConfig = read_config(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = Seed(s);
    }
    let out = c
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(|o| config_dir(&c.config).join(o)));
    let report = rate_experiment(&cfg)?;
    if let Some(dir) = &out {
        write_rate_outputs(&report, dir)?;
    }
    for r in &report.rows {
        println!(
            "n = {:>6}  mean d2 = {:.6e}  stderr = {:.3e}  ok = {}",
            r.n, r.mean_d2, r.stderr_d2, r.replicas_ok
        );
    }
    println!(
        "slope = {:.4} +/- {:.4} (theory {:.4})",
        report.slope, report.half_width, report.theoretical_slope
    );
    Ok(())
}

fn run_figure1(dims: &[usize], out: &Path, alpha_max: f64, alpha_step: f64) -> std::result::Result<(), Failure> {
    if !(alpha_step > 0.0 && alpha_max >= 0.0) {
        return Err(Failure::Usage("--alpha-step must be > 0 and --alpha-max >= 0".into()));
    }
    let k = (alpha_max / alpha_step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=k).map(|i| i as f64 * alpha_step).collect();
    for p in figure1(dims, &grid, out)? {
        println!("d = {}: {} and {}", p.dim, p.csv.display(), p.svg.display());
    }
    Ok(())
}

fn configure_threads() {
    if let Some(n) = std::env::var("UOTLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            // an already-initialized pool (e.g. in tests) is left alone
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    let result = match &cli.command {
        Command::Value(c) => run_value(c),
        Command::Fit(c) => run_fit(c),
        Command::Primal(c) => run_primal(c),
        Command::Stability(c) => run_stability(c),
        Command::Rates(c) => run_rates(c),
        Command::Figure1 {
            dims,
            out,
            alpha_max,
            alpha_step,
        } => run_figure1(dims, out, *alpha_max, *alpha_step),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}
