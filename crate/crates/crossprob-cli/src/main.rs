//! Command-line front end: non-crossing probabilities from boundary
//! files, exact goodness-of-fit p-values, critical values, and the
//! scaling benchmark.
//!
//! Exit codes: 0 success, 2 malformed input, 3 numerical failure.

use std::fmt::Write as _;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crossprob::bench::{fit_scaling, time_method};
use crossprob::boundaries::BoundaryPair;
use crossprob::engine::{
    ecdf_noncrossing, poisson_noncrossing_conditional, poisson_noncrossing_unconditional,
    EngineOptions, Method, NoncrossingResult,
};
use crossprob::gof::{parse_samples, StatisticKind, StatisticSpec};
use crossprob::oracles::{
    ecdf_noncrossing_binomial_recursion, monte_carlo_ecdf, monte_carlo_poisson, MonteCarloResult,
};

const ENV_CROSSOVER: &str = "CROSSPROB_FFT_CROSSOVER";

#[derive(Parser)]
#[command(
    name = "crossprob",
    about = "Boundary non-crossing probabilities for Poisson processes and the empirical CDF",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Poisson-process non-crossing probability from a boundary file.
    Poisson(PoissonArgs),
    /// Empirical-CDF non-crossing probability from a boundary file.
    Ecdf(EcdfArgs),
    /// Exact p-value of a goodness-of-fit statistic.
    Pvalue(PvalueArgs),
    /// Statistic threshold whose exact p-value equals alpha.
    CriticalValue(CriticalValueArgs),
    /// Time the FFT and direct methods across sample sizes; CSV output.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Fft,
    Direct,
    BinomialOracle,
    MonteCarlo,
}

impl MethodArg {
    fn name(self) -> &'static str {
        match self {
            MethodArg::Fft => "fft",
            MethodArg::Direct => "direct",
            MethodArg::BinomialOracle => "binomial-oracle",
            MethodArg::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Args)]
struct EngineFlags {
    /// Computation method.
    #[arg(long, value_enum, default_value = "fft")]
    method: MethodArg,
    /// Monte Carlo trials (monte-carlo method only).
    #[arg(long)]
    trials: Option<u64>,
    /// Monte Carlo seed; required with the monte-carlo method.
    #[arg(long)]
    seed: Option<u64>,
    /// Force full-length FFT steps instead of band-limited ones.
    #[arg(long)]
    force_full_fft: bool,
    /// Machine-readable JSON on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PoissonArgs {
    /// Boundary file (line 1: n, line 2: lower crossing times,
    /// line 3: initial cap, line 4: upper crossing times).
    file: String,
    /// Condition on the terminal count xi(1) = K.
    #[arg(long, value_name = "K")]
    given_count: Option<u64>,
    #[command(flatten)]
    flags: EngineFlags,
}

#[derive(Args)]
struct EcdfArgs {
    /// Boundary file.
    file: String,
    #[command(flatten)]
    flags: EngineFlags,
}

#[derive(Args)]
struct PvalueArgs {
    /// Statistic name.
    #[arg(long)]
    stat: String,
    /// Sample count; inferred from the samples file when given.
    #[arg(long)]
    n: Option<u64>,
    /// Samples file: whitespace-separated values already transformed
    /// to [0, 1].
    #[arg(long, conflicts_with = "stat_value")]
    samples: Option<String>,
    /// Evaluate the p-value at this statistic value directly.
    #[arg(long)]
    stat_value: Option<f64>,
    #[command(flatten)]
    flags: EngineFlags,
}

#[derive(Args)]
struct CriticalValueArgs {
    #[arg(long)]
    stat: String,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    force_full_fft: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated sample sizes, e.g. 100,200,400.
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<u64>,
    #[arg(long, default_value = "ks_two_sided")]
    stat: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Timed repetitions per point (a warm-up run is excluded).
    #[arg(long, default_value_t = 3)]
    repeats: usize,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<crossprob::Error> for Failure {
    fn from(e: crossprob::Error) -> Self {
        let code = match e {
            crossprob::Error::Input(_) => 2,
            crossprob::Error::Numerical(_) => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Poisson(args) => cmd_poisson(args),
        Command::Ecdf(args) => cmd_ecdf(args),
        Command::Pvalue(args) => cmd_pvalue(args),
        Command::CriticalValue(args) => cmd_critical_value(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn engine_options(flags: &EngineFlags) -> Result<EngineOptions, Failure> {
    let mut opts = EngineOptions {
        method: match flags.method {
            MethodArg::Direct => Method::Direct,
            _ => Method::Fft,
        },
        force_full_fft: flags.force_full_fft,
        ..Default::default()
    };
    if let Ok(v) = std::env::var(ENV_CROSSOVER) {
        opts.crossover = v
            .parse()
            .map_err(|e| Failure::input(format!("bad {ENV_CROSSOVER}: {e}")))?;
    }
    Ok(opts)
}

fn check_mc_flags(flags: &EngineFlags) -> Result<(u64, u64), Failure> {
    if flags.method == MethodArg::MonteCarlo {
        let seed = flags
            .seed
            .ok_or_else(|| Failure::input("--seed is required with --method monte-carlo"))?;
        Ok((flags.trials.unwrap_or(100_000), seed))
    } else {
        if flags.trials.is_some() || flags.seed.is_some() {
            return Err(Failure::input(
                "--trials/--seed are only valid with --method monte-carlo",
            ));
        }
        Ok((0, 0))
    }
}

fn read_file(path: &str) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {path}: {e}")))
}

#[derive(Serialize)]
struct ProbabilityOutput {
    probability: f64,
    log_probability: f64,
    n: u64,
    checkpoints: usize,
    method: &'static str,
    force_full_fft: bool,
    wall_time_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    given_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    generator: Option<&'static str>,
}

impl ProbabilityOutput {
    fn exact(r: NoncrossingResult, n: u64, method: &'static str, full: bool, ms: f64) -> Self {
        ProbabilityOutput {
            probability: r.probability,
            log_probability: r.log_probability,
            n,
            checkpoints: r.checkpoints,
            method,
            force_full_fft: full,
            wall_time_ms: ms,
            given_count: None,
            trials: None,
            seed: None,
            std_error: None,
            generator: None,
        }
    }

    fn monte_carlo(r: &MonteCarloResult, n: u64, checkpoints: usize, ms: f64) -> Self {
        ProbabilityOutput {
            probability: r.estimate,
            log_probability: r.estimate.ln(),
            n,
            checkpoints,
            method: "monte-carlo",
            force_full_fft: false,
            wall_time_ms: ms,
            given_count: None,
            trials: Some(r.trials),
            seed: Some(r.seed),
            std_error: Some(r.std_error),
            generator: Some(r.generator),
        }
    }

    fn print(&self, json: bool) -> Result<(), Failure> {
        if json {
            println!(
                "{}",
                serde_json::to_string_pretty(self)
                    .map_err(|e| Failure::input(format!("JSON encoding failed: {e}")))?
            );
        } else {
            println!("probability     = {:.17e}", self.probability);
            println!("log probability = {:.17}", self.log_probability);
            if let Some(se) = self.std_error {
                println!("std error       = {se:.6e}");
            }
            println!(
                "n = {}, checkpoints = {}, method = {}, wall time = {:.3} ms",
                self.n, self.checkpoints, self.method, self.wall_time_ms
            );
        }
        Ok(())
    }
}

fn cmd_poisson(args: PoissonArgs) -> Result<(), Failure> {
    let bp = BoundaryPair::parse(&read_file(&args.file)?)?;
    let opts = engine_options(&args.flags)?;
    let (trials, seed) = check_mc_flags(&args.flags)?;
    let start = Instant::now();
    let mut out = match args.flags.method {
        MethodArg::Fft | MethodArg::Direct => {
            let r = match args.given_count {
                Some(k) => poisson_noncrossing_conditional(&bp, k, &opts)?,
                None => poisson_noncrossing_unconditional(&bp, &opts)?,
            };
            let ms = start.elapsed().as_secs_f64() * 1e3;
            ProbabilityOutput::exact(
                r,
                bp.n(),
                args.flags.method.name(),
                opts.force_full_fft,
                ms,
            )
        }
        MethodArg::MonteCarlo => {
            let r = monte_carlo_poisson(&bp, args.given_count, trials, seed)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            let checkpoints = bp.compile_schedule().len();
            ProbabilityOutput::monte_carlo(&r, bp.n(), checkpoints, ms)
        }
        MethodArg::BinomialOracle => {
            return Err(Failure::input(
                "the binomial oracle applies to the empirical CDF only; use `ecdf`",
            ));
        }
    };
    out.given_count = args.given_count;
    out.print(args.flags.json)
}

fn cmd_ecdf(args: EcdfArgs) -> Result<(), Failure> {
    let bp = BoundaryPair::parse(&read_file(&args.file)?)?;
    let opts = engine_options(&args.flags)?;
    let (trials, seed) = check_mc_flags(&args.flags)?;
    let start = Instant::now();
    let out = match args.flags.method {
        MethodArg::Fft | MethodArg::Direct => {
            let r = ecdf_noncrossing(&bp, &opts)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            ProbabilityOutput::exact(
                r,
                bp.n(),
                args.flags.method.name(),
                opts.force_full_fft,
                ms,
            )
        }
        MethodArg::BinomialOracle => {
            let r = ecdf_noncrossing_binomial_recursion(&bp)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            ProbabilityOutput::exact(r, bp.n(), "binomial-oracle", false, ms)
        }
        MethodArg::MonteCarlo => {
            let r = monte_carlo_ecdf(&bp, trials, seed)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            let checkpoints = bp.compile_schedule().len();
            ProbabilityOutput::monte_carlo(&r, bp.n(), checkpoints, ms)
        }
    };
    out.print(args.flags.json)
}

#[derive(Serialize)]
struct PvalueOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    statistic: Option<f64>,
    stat_value: f64,
    p_value: f64,
    n: u64,
    lower_crossings: usize,
    upper_crossings: usize,
    checkpoints: usize,
    method: &'static str,
    wall_time_ms: f64,
}

fn cmd_pvalue(args: PvalueArgs) -> Result<(), Failure> {
    let kind: StatisticKind = args.stat.parse()?;
    let opts = engine_options(&args.flags)?;
    let (trials, seed) = check_mc_flags(&args.flags)?;

    let (spec, t, from_samples) = match (&args.samples, args.stat_value) {
        (Some(path), None) => {
            let mut samples = parse_samples(&read_file(path)?)?;
            if samples.iter().any(|v| v.is_nan()) {
                return Err(Failure::input("samples contain NaN"));
            }
            samples.sort_by(|a, b| a.total_cmp(b));
            let n = samples.len() as u64;
            if let Some(given) = args.n {
                if given != n {
                    return Err(Failure::input(format!(
                        "--n {given} does not match {n} samples in the file"
                    )));
                }
            }
            let spec = StatisticSpec::new(kind, n)?;
            let t = spec.compute_statistic(&samples)?;
            (spec, t, true)
        }
        (None, Some(t)) => {
            let n = args
                .n
                .ok_or_else(|| Failure::input("--n is required with --stat-value"))?;
            (StatisticSpec::new(kind, n)?, t, false)
        }
        _ => {
            return Err(Failure::input(
                "exactly one of --samples or --stat-value is required",
            ));
        }
    };

    let start = Instant::now();
    let (p_value, lower, upper, checkpoints) = match args.flags.method {
        MethodArg::Fft | MethodArg::Direct => {
            let r = spec.pvalue(t, &opts)?;
            (r.p_value, r.lower_crossings, r.upper_crossings, r.checkpoints)
        }
        MethodArg::BinomialOracle => {
            let bp = spec.boundaries_from_threshold(t)?;
            let r = ecdf_noncrossing_binomial_recursion(&bp)?;
            (
                (1.0 - r.probability).clamp(0.0, 1.0),
                bp.lower_crossings().len(),
                bp.upper_crossings().len(),
                r.checkpoints,
            )
        }
        MethodArg::MonteCarlo => {
            let bp = spec.boundaries_from_threshold(t)?;
            let r = monte_carlo_ecdf(&bp, trials, seed)?;
            (
                (1.0 - r.estimate).clamp(0.0, 1.0),
                bp.lower_crossings().len(),
                bp.upper_crossings().len(),
                bp.compile_schedule().len(),
            )
        }
    };
    let ms = start.elapsed().as_secs_f64() * 1e3;

    let out = PvalueOutput {
        statistic: from_samples.then_some(t),
        stat_value: t,
        p_value,
        n: spec.n(),
        lower_crossings: lower,
        upper_crossings: upper,
        checkpoints,
        method: args.flags.method.name(),
        wall_time_ms: ms,
    };
    if args.flags.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&out)
                .map_err(|e| Failure::input(format!("JSON encoding failed: {e}")))?
        );
    } else {
        if from_samples {
            println!("statistic = {t:.17}");
        }
        println!("p-value   = {:.17e}", out.p_value);
        println!(
            "n = {}, boundary (a = {}, b = {}, N = {}), method = {}, wall time = {:.3} ms",
            out.n, out.lower_crossings, out.upper_crossings, out.checkpoints, out.method, ms
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct CriticalValueOutput {
    critical_value: f64,
    alpha: f64,
    n: u64,
    statistic: &'static str,
    wall_time_ms: f64,
}

fn cmd_critical_value(args: CriticalValueArgs) -> Result<(), Failure> {
    let kind: StatisticKind = args.stat.parse()?;
    let spec = StatisticSpec::new(kind, args.n)?;
    let opts = EngineOptions {
        force_full_fft: args.force_full_fft,
        ..Default::default()
    };
    let start = Instant::now();
    let cv = spec.critical_value(args.alpha, &opts)?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let out = CriticalValueOutput {
        critical_value: cv,
        alpha: args.alpha,
        n: args.n,
        statistic: kind.name(),
        wall_time_ms: ms,
    };
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&out)
                .map_err(|e| Failure::input(format!("JSON encoding failed: {e}")))?
        );
    } else {
        println!("critical value = {cv:.17}");
        println!(
            "statistic = {}, n = {}, alpha = {}, wall time = {:.3} ms",
            kind.name(),
            args.n,
            args.alpha,
            ms
        );
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let kind: StatisticKind = args.stat.parse()?;
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Failure::input("alpha must lie in (0, 1)"));
    }
    let mut per_method: [Vec<(f64, f64)>; 2] = [Vec::new(), Vec::new()];
    println!("n,method,wall_time_ms,probability,checkpoints");
    for &n in &args.n_list {
        let spec = StatisticSpec::new(kind, n)?;
        let cv = spec.critical_value(args.alpha, &EngineOptions::default())?;
        let bp = spec.boundaries_from_threshold(cv)?;
        let mut probs = [0.0f64; 2];
        for (slot, method) in [Method::Fft, Method::Direct].into_iter().enumerate() {
            let run = time_method(&bp, method, args.repeats)?;
            let name = match method {
                Method::Fft => "fft",
                Method::Direct => "direct",
            };
            println!(
                "{n},{name},{:.6},{:.17e},{}",
                run.median_wall_ms, run.probability, run.checkpoints
            );
            per_method[slot].push((n as f64, run.median_wall_ms));
            probs[slot] = run.probability;
        }
        let denom = probs[0].abs().max(1e-300);
        if (probs[0] - probs[1]).abs() / denom > 1e-8 {
            return Err(Failure {
                code: 3,
                message: format!(
                    "methods disagree at n = {n}: fft {} vs direct {}",
                    probs[0], probs[1]
                ),
            });
        }
    }
    for (slot, name) in ["fft", "direct"].iter().enumerate() {
        if per_method[slot].len() >= 3 {
            let fit = fit_scaling(&per_method[slot])?;
            let mut line = String::new();
            let _ = write!(
                line,
                "{name}: log-log slope {:.4}, intercept {:.4}, r^2 {:.6}",
                fit.slope, fit.intercept, fit.r_squared
            );
            eprintln!("{line}");
        }
    }
    Ok(())
}
