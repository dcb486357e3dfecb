use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rlsk::formats::{
    self, write_bits_jsonl, write_policy_csv, write_policy_json, write_runtime_csv,
    write_sweep_csv, write_trajectories_csv, SweepRow,
};
use rlsk::sources::PolicySource;
use rlsk::validate::{self, ValidateOptions};
use rlsk::{CliError, Result};
use rlsk_core::policy::{make_portfolio, PortfolioLabel};
use rlsk_core::runtime::total_with_convention;
use rlsk_core::simulator::{run_many_with, RunConfig, Start};
use rlsk_core::solvers::{self, DEFAULT_BITS_CAP, DEFAULT_MAX_SWEEPS};
use rlsk_core::{BitString, Policy, Portfolio, RuntimeTable, Setting, StateSpace, TotalConvention};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "rlsk",
    version,
    about = "Optimal radius control for RLS_k on LeadingOnes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an optimal (or fixed-point) policy and its runtimes.
    Solve(SolveArgs),
    /// Expected runtimes of a given policy.
    Evaluate(EvaluateArgs),
    /// Monte Carlo runs of RLS_k under a policy.
    Simulate(SimulateArgs),
    /// Totals over a list of problem sizes, as CSV.
    Sweep(SweepArgs),
    /// Check the solvers against brute force; exit code 1 on any failure.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    /// Skip the states 1^i 0^(n-i), as in the published runtime figures.
    OmitZeroTail,
    /// Plain expectation over a uniform random start.
    Uniform,
}

impl From<Convention> for TotalConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::OmitZeroTail => TotalConvention::OmitZeroTail,
            Convention::Uniform => TotalConvention::Uniform,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// loom-nonstrict, loom-strict-x, lo-nonstrict, lo-strict, loom-nonstrict-level or lo-nonstrict-level.
    #[arg(long, value_parser = parse_setting)]
    setting: Setting,
    #[arg(long)]
    n: usize,
    /// full, pow2, first3, thirds or list:K1,K2,...
    #[arg(long, default_value = "full", value_parser = parse_portfolio)]
    portfolio: PortfolioLabel,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    out_policy: Option<PathBuf>,
    /// CSV heatmap, or JSON lines for the string setting.
    #[arg(long)]
    out_runtimes: Option<PathBuf>,
    /// Policy file format.
    #[arg(long, value_enum, default_value = "json")]
    format: PolicyFormat,
    #[arg(long, value_enum, default_value = "omit-zero-tail")]
    convention: Convention,
    #[arg(long, default_value_t = DEFAULT_MAX_SWEEPS)]
    max_sweeps: usize,
    /// Largest n for the string setting.
    #[arg(long, default_value_t = DEFAULT_BITS_CAP)]
    bits_cap: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    /// file:PATH, one, lo-formula, lo-formula-plus1, lo-optimal or solver.
    #[arg(long)]
    policy: PolicySource,
    #[arg(long)]
    out_runtimes: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "omit-zero-tail")]
    convention: Convention,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "solver")]
    policy: PolicySource,
    #[arg(long, default_value_t = 1000)]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write every run's accepted moves as CSV.
    #[arg(long)]
    trajectories: Option<PathBuf>,
    /// random, or fixed:BITS with the first position leftmost.
    #[arg(long, default_value = "random", value_parser = parse_start)]
    start: StartArg,
    #[arg(long, default_value_t = rlsk_core::simulator::DEFAULT_MAX_ITERATIONS)]
    max_iterations: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_parser = parse_setting)]
    setting: Setting,
    /// Comma-separated sizes.
    #[arg(long, value_delimiter = ',', conflicts_with = "max_n")]
    n_list: Option<Vec<usize>>,
    /// Powers of two from 4 up to this size.
    #[arg(long)]
    max_n: Option<usize>,
    #[arg(long, default_value = "solver")]
    policy: PolicySource,
    #[arg(long, default_value = "full", value_parser = parse_portfolio)]
    portfolio: PortfolioLabel,
    #[arg(long, value_enum, default_value = "omit-zero-tail")]
    convention: Convention,
    /// CSV destination (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 8)]
    max_n: usize,
    #[arg(long, default_value_t = 5)]
    argmin_max_n: usize,
    /// Relative error injected into solver runtimes (self-test of the checks).
    #[arg(long, default_value_t = 0.0)]
    perturb: f64,
    /// JSON report destination (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone)]
enum StartArg {
    Random,
    Fixed(BitString),
}

fn parse_setting(s: &str) -> std::result::Result<Setting, String> {
    s.parse().map_err(|e: rlsk_core::CoreError| e.to_string())
}

fn parse_portfolio(s: &str) -> std::result::Result<PortfolioLabel, String> {
    s.parse().map_err(|e: rlsk_core::CoreError| e.to_string())
}

fn parse_start(s: &str) -> std::result::Result<StartArg, String> {
    if s == "random" {
        return Ok(StartArg::Random);
    }
    let bits = s
        .strip_prefix("fixed:")
        .ok_or_else(|| format!("unknown start '{s}' (random or fixed:BITS)"))?;
    BitString::parse(bits)
        .map(StartArg::Fixed)
        .map_err(|e| e.to_string())
}

fn portfolio(label: &PortfolioLabel, n: usize) -> Result<Portfolio> {
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    make_portfolio(label, n).map_err(|e| CliError::Usage(e.to_string()))
}

fn print_json(v: &Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out).map_err(|e| CliError::io("<stdout>", e))
}

fn write_runtimes(path: &Path, table: &RuntimeTable, policy: &Policy) -> Result<()> {
    let w = formats::create(path)?;
    match table.state_space() {
        StateSpace::Bits => write_bits_jsonl(table, policy, w),
        _ => write_runtime_csv(table, w),
    }
}

fn ext(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!("inf")
    }
}

/// Totals and the worst start state of a runtime table.
fn summary(table: &RuntimeTable, convention: Convention) -> Result<Value> {
    let n = table.n() as f64;
    let total = total_with_convention(table, convention.into())?.value();
    let uniform = total_with_convention(table, TotalConvention::Uniform)?.value();
    let states = match table.state_space() {
        StateSpace::Bits => table.average_bits_into_loom()?,
        _ => table.clone(),
    };
    let worst = states
        .worst_state()
        .map(|(s, e)| json!({"i": s.i, "j": s.j, "expected": ext(e.value())}));
    Ok(json!({
        "convention": TotalConvention::from(convention).name(),
        "total": ext(total),
        "total_over_nln": ext(total / (n * n.ln())),
        "total_over_n2": ext(total / (n * n)),
        "total_uniform": ext(uniform),
        "worst_state": worst,
    }))
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let Common {
        setting,
        n,
        portfolio: label,
    } = a.common;
    let p = portfolio(&label, n)?;
    let report = match setting {
        s if s == Setting::LO_NONSTRICT => {
            solvers::solve_lo_nonstrict_heuristic(n, &p, a.max_sweeps)?
        }
        s if s == Setting::LOOM_STRICT_X => {
            solvers::solve_bitstring_strict_with_cap(n, &p, a.bits_cap)?
        }
        s => solvers::solve(s, n, &p)?,
    };
    if let Some(path) = &a.out_policy {
        let w = formats::create(path)?;
        match a.format {
            PolicyFormat::Json => write_policy_json(&report.policy, w)?,
            PolicyFormat::Csv => write_policy_csv(&report.policy, w)?,
        }
    }
    if let Some(path) = &a.out_runtimes {
        write_runtimes(path, &report.runtimes, &report.policy)?;
    }
    let mut out = json!({"command": "solve", "setting": setting.label(), "n": n, "portfolio": label.to_string()});
    merge(&mut out, summary(&report.runtimes, a.convention)?);
    if let Some(it) = &report.per_level_iterations {
        out["sweeps_per_level"] = json!(it);
        out["max_sweeps_used"] = json!(it.iter().max());
    }
    print_json(&out)
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let Common {
        setting,
        n,
        portfolio: label,
    } = a.common;
    let p = portfolio(&label, n)?;
    let policy = a.policy.load(setting, n, &p)?;
    let table = solvers::evaluate(setting, n, &policy)?;
    if let Some(path) = &a.out_runtimes {
        write_runtimes(path, &table, &policy)?;
    }
    let mut out = json!({"command": "evaluate", "setting": setting.label(), "n": n});
    merge(&mut out, summary(&table, a.convention)?);
    print_json(&out)
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let Common {
        setting,
        n,
        portfolio: label,
    } = a.common;
    let p = portfolio(&label, n)?;
    let policy = a.policy.load(setting, n, &p)?;
    let mut config = RunConfig::new(setting, policy.clone(), a.seed);
    config.max_iterations = a.max_iterations;
    config.record_trajectory = a.trajectories.is_some();
    config.start = match &a.start {
        StartArg::Random => Start::UniformRandom,
        StartArg::Fixed(x) => Start::Fixed(x.clone()),
    };
    let mut trajectories = Vec::new();
    let stats = run_many_with(&config, a.runs, |r, out| {
        if config.record_trajectory {
            trajectories.push((r, out.trajectory.clone()));
        }
    })?;
    if let Some(path) = &a.trajectories {
        write_trajectories_csv(&trajectories, formats::create(path)?)?;
    }
    // The exact value to compare against, when cheap to get.
    let expected = match (&a.start, setting.state_space) {
        (StartArg::Random, StateSpace::Bits) if n > DEFAULT_BITS_CAP => None,
        (StartArg::Random, _) => {
            let t = solvers::evaluate(setting, n, &policy)?;
            Some(total_with_convention(&t, TotalConvention::Uniform)?.value())
        }
        _ => None,
    };
    print_json(&json!({
        "command": "simulate",
        "setting": setting.label(),
        "n": n,
        "seed": a.seed,
        "runs": stats.runs,
        "mean_runtime": stats.mean_runtime,
        "stddev": stats.stddev,
        "stderr": stats.stderr(),
        "ci95_halfwidth": stats.ci95_halfwidth,
        "hit_max_iterations": stats.hit_max_iterations,
        "expected": expected.map(ext),
    }))
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let sizes: Vec<usize> = match (&a.n_list, a.max_n) {
        (Some(list), _) => list.clone(),
        (None, Some(max)) => std::iter::successors(Some(4usize), |n| n.checked_mul(2))
            .take_while(|n| *n <= max)
            .collect(),
        (None, None) => return Err(CliError::Usage("give --n-list or --max-n".into())),
    };
    if sizes.is_empty() {
        return Err(CliError::Usage("no problem sizes".into()));
    }
    let mut rows = Vec::new();
    for n in sizes {
        let p = portfolio(&a.portfolio, n)?;
        let policy = a.policy.load(a.setting, n, &p)?;
        let table = solvers::evaluate(a.setting, n, &policy)?;
        let total = total_with_convention(&table, a.convention.into())?.value();
        let name = match &a.policy {
            PolicySource::Solver => format!("solver:{}", a.portfolio),
            PolicySource::File(p) => format!("file:{}", p.display()),
            other => format!("{other:?}").to_lowercase(),
        };
        rows.push(SweepRow::new(n, a.setting.label(), name, total));
    }
    match &a.out {
        Some(path) => write_sweep_csv(&rows, formats::create(path)?),
        None => write_sweep_csv(&rows, std::io::stdout().lock()),
    }
}

fn cmd_validate(a: ValidateArgs) -> Result<bool> {
    let opts = ValidateOptions {
        max_n: a.max_n,
        argmin_max_n: a.argmin_max_n,
        perturbation: a.perturb,
        ..ValidateOptions::default()
    };
    let report = validate::run(&opts)?;
    let v = serde_json::to_value(&report)?;
    match &a.out {
        Some(path) => {
            let mut w = formats::create(path)?;
            serde_json::to_writer_pretty(&mut w, &v)?;
            w.flush().map_err(|e| CliError::io(path, e))?;
        }
        None => print_json(&v)?,
    }
    Ok(report.ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a).map(|_| true),
        Command::Evaluate(a) => cmd_evaluate(a).map(|_| true),
        Command::Simulate(a) => cmd_simulate(a).map(|_| true),
        Command::Sweep(a) => cmd_sweep(a).map(|_| true),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
