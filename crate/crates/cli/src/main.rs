//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 computation error
//! (unsolvable consistency equation, enumeration budget), 3 verification
//! failure.

use std::fmt::Write as _;
use std::path::PathBuf;

use annealed_cm::degree::DegreeSequence;
use annealed_cm::deterministic::{
    estimate_transition, pressure_with, spontaneous_magnetization, SolveOptions, FIELD_LADDER,
};
use annealed_cm::iid::{pressure_iid, spontaneous_magnetization_iid, IidOptions, IidPressure};
use annealed_cm::{
    beta_bar_c, brute_force_z, critical_beta, log_annealed_z, psi_n, DegreeDistribution,
    DistributionSpec, Error, ModelParams, OracleInstance,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "annealed-cm",
    version,
    about = "Annealed Ising model on configuration models",
    long_about = "Computes the annealed pressure, magnetization and critical inverse \
temperature of the ferromagnetic Ising model on configuration models, for deterministic \
degree sequences and for i.i.d. degrees."
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Pressure and magnetization at a single (beta, B); JSON on stdout
    Pressure(PointArgs),
    /// Spontaneous magnetization at a given beta from the descending field ladder
    Magnetization(MagArgs),
    /// Critical inverse temperature (deterministic: atanh(1/nu); iid: the
    /// tilted upper bound plus an empirical transition estimate)
    Critical(CriticalArgs),
    /// Grid scan over beta and/or B; CSV with 12-significant-digit floats
    Scan(ScanArgs),
    /// Run the full invariant suite and print a pass/fail table
    Verify,
    /// Compare the subset formula against exhaustive enumeration on a degree sequence
    Oracle(OracleArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Distribution family: dirac | poisson | geometric | explicit
    #[arg(long)]
    family: Option<String>,
    /// Degree of the dirac family
    #[arg(long)]
    degree: Option<u32>,
    /// Poisson intensity
    #[arg(long)]
    lambda: Option<f64>,
    /// Geometric success parameter
    #[arg(long)]
    p: Option<f64>,
    /// Truncation point for infinite-support families [default: 200]
    #[arg(long)]
    kmax: Option<u32>,
    /// Explicit support as "degree:weight,degree:weight,..."
    #[arg(long)]
    pairs: Option<String>,
    /// Degree-sequence file (whitespace-separated positive integers)
    #[arg(long)]
    degrees: Option<PathBuf>,
    /// JSON config supplying defaults for the model and solver options
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Deterministic | iid
    #[arg(long, value_enum, default_value_t = Mode::Deterministic)]
    mode: Mode,
    /// Root-scan grid size
    #[arg(long)]
    grid_size: Option<usize>,
    /// Descending field ladder for B -> 0 extrapolation, e.g. "0.1,0.03,0.01"
    #[arg(long)]
    ladder: Option<String>,
}

#[derive(Args)]
struct PointArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long = "B", allow_hyphen_values = true)]
    field: Option<f64>,
}

#[derive(Args)]
struct MagArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct CriticalArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Magnetization threshold for the empirical transition estimate
    #[arg(long)]
    threshold: Option<f64>,
    /// Beta grid for the empirical estimate, "start:stop:count"
    #[arg(long)]
    beta_range: Option<String>,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long = "B", allow_hyphen_values = true)]
    field: Option<f64>,
    /// "start:stop:count" with count >= 2
    #[arg(long)]
    beta_range: Option<String>,
    /// "start:stop:count" with count >= 2
    #[arg(long = "B-range", allow_hyphen_values = true)]
    field_range: Option<String>,
    /// Output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long = "B", allow_hyphen_values = true)]
    field: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Deterministic,
    Iid,
}

/// Optional defaults loaded from --config; command-line flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    model: Option<DistributionSpec>,
    degrees_path: Option<PathBuf>,
    beta: Option<f64>,
    #[serde(rename = "B")]
    field: Option<f64>,
    beta_range: Option<String>,
    #[serde(rename = "B_range")]
    field_range: Option<String>,
    mode: Option<String>,
    grid_size: Option<usize>,
    threshold: Option<f64>,
    ladder: Option<Vec<f64>>,
    out: Option<PathBuf>,
}

enum CliError {
    /// exit 1
    Config(String),
    /// exit 2
    Compute(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoRootFound(_) | Error::BudgetExceeded(_) => CliError::Compute(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Cmd::Pressure(args) => cmd_pressure(args),
        Cmd::Magnetization(args) => cmd_magnetization(args),
        Cmd::Critical(args) => cmd_critical(args),
        Cmd::Scan(args) => cmd_scan(args),
        Cmd::Verify => return cmd_verify(),
        Cmd::Oracle(args) => cmd_oracle(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Compute(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

// ---------------------------------------------------------------------------
// configuration plumbing

fn load_config(model: &ModelArgs) -> Result<RunConfig, CliError> {
    match &model.config {
        None => Ok(RunConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))
        }
    }
}

fn resolve_distribution(
    model: &ModelArgs,
    config: &RunConfig,
    mode: Mode,
) -> Result<DegreeDistribution, CliError> {
    if mode == Mode::Iid
        && model.family.is_none()
        && config.model.is_none()
        && (model.degrees.is_some() || config.degrees_path.is_some())
    {
        return Err(CliError::Config(
            "mode=iid needs a distribution spec (--family ... or a config model), not a raw degree sequence".into(),
        ));
    }
    if let Some(family) = &model.family {
        let kmax = model.kmax.unwrap_or(200);
        let spec =
            match family.as_str() {
                "dirac" => DistributionSpec::Dirac {
                    degree: model
                        .degree
                        .ok_or_else(|| CliError::Config("dirac family needs --degree".into()))?,
                },
                "poisson" => DistributionSpec::Poisson {
                    lambda: model
                        .lambda
                        .ok_or_else(|| CliError::Config("poisson family needs --lambda".into()))?,
                    kmax,
                },
                "geometric" => DistributionSpec::Geometric {
                    p: model
                        .p
                        .ok_or_else(|| CliError::Config("geometric family needs --p".into()))?,
                    kmax,
                },
                "explicit" => DistributionSpec::Explicit {
                    pairs: parse_pairs(model.pairs.as_deref().ok_or_else(|| {
                        CliError::Config("explicit family needs --pairs".into())
                    })?)?,
                },
                other => {
                    return Err(CliError::Config(format!(
                    "unknown family {other:?} (expected dirac | poisson | geometric | explicit)"
                )))
                }
            };
        return Ok(spec.build()?);
    }
    if model.degrees.is_some() || config.degrees_path.is_some() {
        return Ok(resolve_sequence(model, config)?.empirical());
    }
    if let Some(spec) = &config.model {
        return Ok(spec.build()?);
    }
    Err(CliError::Config(
        "no model given: pass --family ..., --degrees <file>, or --config with a model".into(),
    ))
}

fn resolve_sequence(model: &ModelArgs, config: &RunConfig) -> Result<DegreeSequence, CliError> {
    let path = model
        .degrees
        .as_ref()
        .or(config.degrees_path.as_ref())
        .ok_or_else(|| CliError::Config("no degree sequence given (--degrees <file>)".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(DegreeSequence::from_text(&text)?)
}

fn parse_pairs(text: &str) -> Result<Vec<(u32, f64)>, CliError> {
    text.split(',')
        .map(|item| {
            let (k, w) = item.split_once(':').ok_or_else(|| {
                CliError::Config(format!("bad pair {item:?}, want degree:weight"))
            })?;
            let k = k
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad degree in pair {item:?}")))?;
            let w = w
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad weight in pair {item:?}")))?;
            Ok((k, w))
        })
        .collect()
}

fn parse_range(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "bad range {text:?}, want start:stop:count"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::Config(format!("bad range start in {text:?}")))?;
    let stop: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Config(format!("bad range stop in {text:?}")))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| CliError::Config(format!("bad range count in {text:?}")))?;
    if count < 2 || start >= stop || !start.is_finite() || !stop.is_finite() {
        return Err(CliError::Config(format!(
            "range {text:?} needs count >= 2 and start < stop"
        )));
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn parse_ladder(text: &str) -> Result<Vec<f64>, CliError> {
    let ladder: Result<Vec<f64>, _> = text.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let ladder = ladder.map_err(|_| CliError::Config(format!("bad ladder {text:?}")))?;
    if ladder.is_empty()
        || ladder.windows(2).any(|w| w[1] >= w[0])
        || ladder[ladder.len() - 1] <= 0.0
    {
        return Err(CliError::Config(
            "ladder must be a decreasing list of positive fields".into(),
        ));
    }
    Ok(ladder)
}

fn solve_options(solver: &SolverArgs, config: &RunConfig) -> SolveOptions {
    SolveOptions {
        grid_size: solver.grid_size.or(config.grid_size).unwrap_or(2048),
        ..SolveOptions::default()
    }
}

fn ladder(solver: &SolverArgs, config: &RunConfig) -> Result<Vec<f64>, CliError> {
    match (&solver.ladder, &config.ladder) {
        (Some(text), _) => parse_ladder(text),
        (None, Some(values)) => Ok(values.clone()),
        (None, None) => Ok(FIELD_LADDER.to_vec()),
    }
}

fn require_beta(flag: Option<f64>, config: &RunConfig) -> Result<f64, CliError> {
    flag.or(config.beta)
        .ok_or_else(|| CliError::Config("missing --beta".into()))
}

fn effective_mode(solver: &SolverArgs, config: &RunConfig) -> Result<Mode, CliError> {
    // the flag has a default, so an explicit config entry only applies when
    // the flag was left at its default
    if solver.mode == Mode::Iid {
        return Ok(Mode::Iid);
    }
    match config.mode.as_deref() {
        None | Some("deterministic") => Ok(Mode::Deterministic),
        Some("iid") => Ok(Mode::Iid),
        Some(other) => Err(CliError::Config(format!("unknown mode {other:?}"))),
    }
}

fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

fn iid_options(opts: SolveOptions) -> IidOptions {
    IidOptions {
        solve: opts,
        ..IidOptions::default()
    }
}

// ---------------------------------------------------------------------------
// commands

fn cmd_pressure(args: PointArgs) -> Result<(), CliError> {
    let config = load_config(&args.model)?;
    let mode = effective_mode(&args.solver, &config)?;
    let dist = resolve_distribution(&args.model, &config, mode)?;
    let beta = require_beta(args.beta, &config)?;
    let field = args.field.or(config.field).unwrap_or(0.0);
    let params = ModelParams::new(beta, field)?;
    let opts = solve_options(&args.solver, &config);
    let value = match mode {
        Mode::Deterministic => {
            let r = pressure_with(&params, &dist, &opts)?;
            json!({
                "mode": "deterministic",
                "beta": beta,
                "B": field,
                "pressure": r.pressure,
                "magnetization": r.magnetization,
                "w_star": r.solution.w,
                "n_roots": r.n_roots,
                "residual": r.solution.residual,
            })
        }
        Mode::Iid => match pressure_iid(&params, &dist, &iid_options(opts))? {
            IidPressure::Infinite { condition } => json!({
                "mode": "iid",
                "beta": beta,
                "B": field,
                "pressure": "infinite",
                "condition": condition,
            }),
            IidPressure::Finite(r) => json!({
                "mode": "iid",
                "beta": beta,
                "B": field,
                "pressure": r.pressure,
                "magnetization": r.inner.magnetization,
                "w_star": r.inner.solution.w,
                "n_roots": r.inner.n_roots,
                "entropy_cost": r.entropy_cost,
                "iterations": r.iterations,
                "converged": r.converged,
                "zero_degree_mass": r.zero_degree_mass,
                "optimizer_q": {
                    "support": r.optimizer_q.support(),
                    "probs": r.optimizer_q.probs(),
                },
            }),
        },
    };
    println!("{value}");
    Ok(())
}

fn cmd_magnetization(args: MagArgs) -> Result<(), CliError> {
    let config = load_config(&args.model)?;
    let mode = effective_mode(&args.solver, &config)?;
    let dist = resolve_distribution(&args.model, &config, mode)?;
    let beta = require_beta(args.beta, &config)?;
    let fields = ladder(&args.solver, &config)?;
    let opts = solve_options(&args.solver, &config);
    let spont = match mode {
        Mode::Deterministic => spontaneous_magnetization(beta, &dist, &fields)?,
        Mode::Iid => spontaneous_magnetization_iid(beta, &dist, &fields, &iid_options(opts))?,
    };
    let value = json!({
        "mode": match mode { Mode::Deterministic => "deterministic", Mode::Iid => "iid" },
        "beta": beta,
        "spontaneous_magnetization": spont.extrapolated,
        "ladder": spont.ladder,
        "monotone": spont.monotone,
    });
    println!("{value}");
    Ok(())
}

fn cmd_critical(args: CriticalArgs) -> Result<(), CliError> {
    let config = load_config(&args.model)?;
    let mode = effective_mode(&args.solver, &config)?;
    let dist = resolve_distribution(&args.model, &config, mode)?;
    match mode {
        Mode::Deterministic => {
            let value = critical_beta(&dist);
            if value.is_finite() {
                println!("{value:.12}");
            } else {
                println!("inf");
            }
            Ok(())
        }
        Mode::Iid => {
            let threshold = args.threshold.or(config.threshold).unwrap_or(0.02);
            let bound = beta_bar_c(&dist);
            let opts = solve_options(&args.solver, &config);
            let fields = ladder(&args.solver, &config)?;
            let (beta_bar, nu_at_bar, estimate) = match &bound {
                None => (None, None, None),
                Some(b) => {
                    let betas = match args.beta_range.as_deref().or(config.beta_range.as_deref()) {
                        Some(text) => parse_range(text)?,
                        None => {
                            let lo = (b.beta_bar - 0.12).max(0.02);
                            (0..13).map(|i| lo + 0.02 * i as f64).collect()
                        }
                    };
                    let mut points = Vec::with_capacity(betas.len());
                    for beta in betas {
                        let s = spontaneous_magnetization_iid(
                            beta,
                            &dist,
                            &fields,
                            &iid_options(opts),
                        )?;
                        points.push((beta, s.extrapolated));
                    }
                    (
                        Some(b.beta_bar),
                        Some(b.nu_at_bar),
                        estimate_transition(&points, threshold),
                    )
                }
            };
            let quenched = critical_beta(&dist);
            let value = json!({
                "mode": "iid",
                "beta_bar_c": beta_bar,
                "nu_at_beta_bar": nu_at_bar,
                "empirical_transition": estimate,
                "threshold": threshold,
                "quenched_value": if quenched.is_finite() { Some(quenched) } else { None },
            });
            println!("{value}");
            Ok(())
        }
    }
}

#[derive(Clone, Copy)]
struct ScanRow {
    beta: f64,
    field: f64,
    pressure: f64,
    magnetization: f64,
    w_star: f64,
    n_roots: usize,
    converged: bool,
}

fn cmd_scan(args: ScanArgs) -> Result<(), CliError> {
    let config = load_config(&args.model)?;
    let mode = effective_mode(&args.solver, &config)?;
    let dist = resolve_distribution(&args.model, &config, mode)?;
    let opts = solve_options(&args.solver, &config);

    let betas = match args.beta_range.as_deref().or(config.beta_range.as_deref()) {
        Some(text) => parse_range(text)?,
        None => vec![require_beta(args.beta, &config)?],
    };
    let fields = match args
        .field_range
        .as_deref()
        .or(config.field_range.as_deref())
    {
        Some(text) => parse_range(text)?,
        None => vec![args.field.or(config.field).unwrap_or(0.0)],
    };
    // row-major: beta outer, B inner
    let grid: Vec<(f64, f64)> = betas
        .iter()
        .flat_map(|&b| fields.iter().map(move |&f| (b, f)))
        .collect();

    let compute = |&(beta, field): &(f64, f64)| -> Result<ScanRow, Error> {
        let params = ModelParams::new(beta, field)?;
        match mode {
            Mode::Deterministic => {
                let r = pressure_with(&params, &dist, &opts)?;
                Ok(ScanRow {
                    beta,
                    field,
                    pressure: r.pressure,
                    magnetization: r.magnetization,
                    w_star: r.solution.w,
                    n_roots: r.n_roots,
                    converged: true,
                })
            }
            Mode::Iid => match pressure_iid(&params, &dist, &iid_options(opts))? {
                IidPressure::Infinite { condition } => Err(Error::InvalidParameter(format!(
                    "pressure is infinite at beta={beta}: {condition}"
                ))),
                IidPressure::Finite(r) => Ok(ScanRow {
                    beta,
                    field,
                    pressure: r.pressure,
                    magnetization: r.inner.magnetization,
                    w_star: r.inner.solution.w,
                    n_roots: r.inner.n_roots,
                    converged: r.converged,
                }),
            },
        }
    };

    let rows: Result<Vec<ScanRow>, Error> = match thread_cap() {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Compute(format!("thread pool: {e}")))?;
            pool.install(|| grid.par_iter().map(compute).collect())
        }
        None => grid.par_iter().map(compute).collect(),
    };
    let rows = rows.map_err(|e| CliError::Compute(e.to_string()))?;

    let mut out = String::from("beta,B,pressure,magnetization,w_star,n_roots,converged\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            sig12(r.beta),
            sig12(r.field),
            sig12(r.pressure),
            sig12(r.magnetization),
            sig12(r.w_star),
            r.n_roots,
            r.converged
        );
    }
    match args.out.as_ref().or(config.out.as_ref()) {
        Some(path) => std::fs::write(path, out)
            .map_err(|e| CliError::Compute(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{out}"),
    }
    Ok(())
}

fn thread_cap() -> Option<usize> {
    std::env::var("ANNEALED_CM_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
}

fn cmd_verify() -> i32 {
    let results = annealed_cm::verify::run_all();
    let mut failures = 0;
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status}  {:<45} {}", r.name, r.detail);
        if !r.passed {
            failures += 1;
        }
    }
    println!("{} checks, {} failures", results.len(), failures);
    if failures > 0 {
        3
    } else {
        0
    }
}

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let config = load_config(&args.model)?;
    let seq = resolve_sequence(&args.model, &config)?;
    let instance = OracleInstance::new(seq);
    let beta = require_beta(args.beta, &config)?;
    let field = args.field.or(config.field).unwrap_or(0.0);
    let params = ModelParams::new(beta, field)?;
    let formula = log_annealed_z(&instance, &params).map_err(CliError::from)?;
    let brute = brute_force_z(&instance, &params).map_err(CliError::from)?;
    let value = json!({
        "n": instance.n(),
        "total_degree": instance.total_degree(),
        "beta": beta,
        "B": field,
        "log_annealed_z": formula,
        "brute_force_z": brute,
        "abs_diff": (formula - brute).abs(),
        "psi_n": psi_n(&instance, &params).map_err(CliError::from)?,
    });
    println!("{value}");
    Ok(())
}
