//! Command-line laboratory over the certified summation library: coefficient
//! tables, positivity certification sweeps, expansion residual scans,
//! reproducible Monte Carlo runs, and the exact coupon-collector oracle,
//! all emitted as CSV or JSON reports.
//!
//! Exit codes: 0 success; 1 usage or argument problems; 2 precision loss
//! (a result that could not be certified at the configured precision);
//! 3 a certified nonpositive `v_n` (which would contradict the positivity
//! theorem and points at an implementation bug); 4 a certified nonnegative
//! difference `v_{n+1} − v_n` (a research-relevant finding, not a failure).

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use rug::Float;

use altsum::asymptotics::residual_scan;
use altsum::collector::{ccp_exact_min_moments, sample_log_max_exp, simulate_ccp_min, RngSpec};
use altsum::exactcore::{ErrorBounded, PrecisionContext};
use altsum::findiff::{coeff_row, conjecture_scan, verify_inequality, CoeffRow, SumMethod};

use output::{format_bound, format_real, Cell, Table};

/// Certified alternating-sum coefficients, their asymptotics, and the
/// coupon-collector variance law they encode.
#[derive(Parser)]
#[command(name = "altsum", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit certified coefficient rows: c_n, w_n, v_n and the moment columns
    Coeffs(CoeffsArgs),
    /// Certify that v_n is strictly positive for every n up to a bound
    Verify(VerifyArgs),
    /// Scan consecutive differences v_{n+1} − v_n with certified signs
    Conjecture(ConjectureArgs),
    /// Compare exact sums with their truncated expansions over a grid
    Asymptotics(AsymptoticsArgs),
    /// Run a reproducible Monte Carlo estimator
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Exact dynamic-programming moments of the collection-minimum time
    Oracle(OracleArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Report format
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Significant decimal digits for arbitrary-precision columns
    #[arg(long, default_value_t = 30)]
    digits: usize,
    /// Write the report to this file instead of standard output
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    /// Big-float summation at cancellation-absorbing working precision
    Direct,
    /// Exact integer prime-factored summation
    Prime,
}

#[derive(Args)]
struct CoeffsArgs {
    /// First index of the range (inclusive)
    #[arg(long, default_value_t = 1)]
    n_min: u64,
    /// Last index of the range (inclusive)
    #[arg(long)]
    n_max: u64,
    /// Working precision in bits (flag beats FINDIFF_BITS beats 128)
    #[arg(long)]
    bits: Option<u32>,
    /// Summation route; omit to choose automatically by size
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Certify v_n > 0 for every n up to this bound (inclusive)
    #[arg(long)]
    n_max: u64,
    /// Working precision in bits (flag beats FINDIFF_BITS beats 128)
    #[arg(long)]
    bits: Option<u32>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ConjectureArgs {
    /// Scan differences v_{n+1} − v_n for n up to this bound (needs ≥ 2)
    #[arg(long)]
    n_max: u64,
    /// Working precision in bits (flag beats FINDIFF_BITS beats 128)
    #[arg(long)]
    bits: Option<u32>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct AsymptoticsArgs {
    /// Comma-separated grid of indices (each ≥ 3)
    #[arg(long, value_delimiter = ',', default_values_t = [10u64, 100, 1000, 10000])]
    grid: Vec<u64>,
    /// Working precision in bits (flag beats FINDIFF_BITS beats 128)
    #[arg(long)]
    bits: Option<u32>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Subcommand)]
enum SimulateCmd {
    /// Sample Y = ln(max of n unit exponentials)
    Maxexp(MaxexpArgs),
    /// Simulate the minimum completion time of independent coupon collectors
    Ccp(CcpArgs),
}

#[derive(Args)]
struct MaxexpArgs {
    /// Number of exponentials under the maximum
    #[arg(long)]
    n: u64,
    /// Monte Carlo sample size
    #[arg(long)]
    trials: u64,
    /// RNG seed; omitted, an entropy seed is drawn and logged to stderr
    #[arg(long)]
    seed: Option<u64>,
    /// Base RNG stream index
    #[arg(long, default_value_t = 0)]
    stream: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CcpArgs {
    /// Number of coupon types
    #[arg(long = "N")]
    big_n: u64,
    /// Number of independent collectors racing to finish
    #[arg(long)]
    players: u64,
    /// Monte Carlo sample size
    #[arg(long)]
    trials: u64,
    /// RNG seed; omitted, an entropy seed is drawn and logged to stderr
    #[arg(long)]
    seed: Option<u64>,
    /// Base RNG stream index
    #[arg(long, default_value_t = 0)]
    stream: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct OracleArgs {
    /// Number of coupon types
    #[arg(long = "N")]
    big_n: u64,
    /// Number of independent collectors
    #[arg(long)]
    players: u64,
    /// Truncation tolerance for the tail of the moment series
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

enum CliError {
    Usage(String),
    Lib(altsum::Error),
}

impl From<altsum::Error> for CliError {
    fn from(err: altsum::Error) -> Self {
        CliError::Lib(err)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Lib(err)) => {
            eprintln!("error: {err}");
            let code = match err {
                altsum::Error::Domain(_) | altsum::Error::Config(_) => 1,
                altsum::Error::PrecisionLoss { .. }
                | altsum::Error::Quadrature(_)
                | altsum::Error::Truncation(_) => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Coeffs(args) => cmd_coeffs(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Conjecture(args) => cmd_conjecture(args),
        Command::Asymptotics(args) => cmd_asymptotics(args),
        Command::Simulate(cmd) => cmd_simulate(cmd),
        Command::Oracle(args) => cmd_oracle(args),
    }
}

/// Precision resolution: explicit flag, then the FINDIFF_BITS environment
/// variable, then 128 bits.
fn context_for(flag: Option<u32>) -> Result<PrecisionContext, CliError> {
    let bits = match flag {
        Some(bits) => bits,
        None => match std::env::var("FINDIFF_BITS") {
            Ok(raw) => raw.trim().parse::<u32>().map_err(|_| {
                CliError::Usage(format!(
                    "FINDIFF_BITS must be an unsigned integer, got '{raw}'"
                ))
            })?,
            Err(std::env::VarError::NotPresent) => 128,
            Err(std::env::VarError::NotUnicode(_)) => {
                return Err(CliError::Usage(
                    "FINDIFF_BITS holds invalid unicode".into(),
                ))
            }
        },
    };
    Ok(PrecisionContext::with_bits(bits)?)
}

fn checked_digits(output: &OutputArgs, ctx: &PrecisionContext) -> Result<usize, CliError> {
    let capacity = (f64::from(ctx.bits()) * std::f64::consts::LOG10_2).floor() as usize;
    if output.digits == 0 {
        return Err(CliError::Usage("--digits must be positive".into()));
    }
    if output.digits > capacity {
        return Err(CliError::Usage(format!(
            "--digits {} exceeds the {capacity}-digit capacity of {} bits",
            output.digits,
            ctx.bits()
        )));
    }
    Ok(output.digits)
}

fn emit(table: &Table, output: &OutputArgs) -> Result<(), CliError> {
    let text = match output.format {
        FormatArg::Csv => table.to_csv(),
        FormatArg::Json => table.to_json(),
    };
    match &output.out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => std::fs::write(path, &text).map_err(|err| {
            CliError::Usage(format!("cannot write {}: {err}", path.display()))
        }),
    }
}

fn eb_cell(value: &ErrorBounded, digits: usize) -> Cell {
    Cell::Real(format_real(value.value(), digits))
}

fn bound_cell(value: &ErrorBounded) -> Cell {
    Cell::Real(format_bound(value.abs_error()))
}

fn real_cell(value: &Float, digits: usize) -> Cell {
    Cell::Real(format_real(value, digits))
}

fn f64_cell(value: f64) -> Cell {
    Cell::Real(format!("{value}"))
}

fn opt_f64_cell(value: Option<f64>) -> Cell {
    value.map_or(Cell::Missing, f64_cell)
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let drawn: u64 = rand::random();
        eprintln!("note: --seed not given; drew entropy seed {drawn}");
        drawn
    })
}

fn cmd_coeffs(args: CoeffsArgs) -> Result<u8, CliError> {
    if args.n_min < 1 {
        return Err(CliError::Usage("--n-min must be at least 1".into()));
    }
    if args.n_min > args.n_max {
        return Err(CliError::Usage(format!(
            "empty range: --n-min {} exceeds --n-max {}",
            args.n_min, args.n_max
        )));
    }
    let ctx = context_for(args.bits)?;
    let digits = checked_digits(&args.output, &ctx)?;
    let method = args.method.map_or(SumMethod::Auto, |m| match m {
        MethodArg::Direct => SumMethod::DirectBigfloat,
        MethodArg::Prime => SumMethod::PrimeFactored,
    });
    let ns: Vec<u64> = (args.n_min..=args.n_max).collect();
    let rows: Vec<CoeffRow> = ns
        .par_iter()
        .map(|&n| coeff_row(n, &ctx, method))
        .collect::<altsum::Result<_>>()?;

    let mut table = Table::new(vec![
        "n",
        "c_n",
        "c_n_abs_error",
        "w_n",
        "w_n_abs_error",
        "v_n",
        "v_n_abs_error",
        "mean_y",
        "mean_y_abs_error",
        "second_moment_y",
        "second_moment_y_abs_error",
    ]);
    for row in &rows {
        table.push(vec![
            Cell::Count(row.n),
            eb_cell(&row.c_n, digits),
            bound_cell(&row.c_n),
            eb_cell(&row.w_n, digits),
            bound_cell(&row.w_n),
            eb_cell(&row.v_n, digits),
            bound_cell(&row.v_n),
            eb_cell(&row.mean_y, digits),
            bound_cell(&row.mean_y),
            eb_cell(&row.second_moment_y, digits),
            bound_cell(&row.second_moment_y),
        ]);
    }
    emit(&table, &args.output)?;
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<u8, CliError> {
    let ctx = context_for(args.bits)?;
    let digits = checked_digits(&args.output, &ctx)?;
    let rows = verify_inequality(args.n_max, &ctx)?;

    let mut table = Table::new(vec!["n", "v_n", "v_n_abs_error", "certified_positive"]);
    let mut all_positive = true;
    for row in &rows {
        all_positive &= row.certified_positive;
        table.push(vec![
            Cell::Count(row.n),
            eb_cell(&row.v_n, digits),
            bound_cell(&row.v_n),
            Cell::Flag(row.certified_positive),
        ]);
    }
    emit(&table, &args.output)?;
    if all_positive {
        Ok(0)
    } else {
        // Uncertifiable signs abort with a precision-loss error before this
        // point, so a false flag is a certified nonpositive value.
        eprintln!(
            "warning: a certified nonpositive v_n appeared; this contradicts \
             the positivity theorem and indicates an implementation bug"
        );
        Ok(3)
    }
}

fn cmd_conjecture(args: ConjectureArgs) -> Result<u8, CliError> {
    let ctx = context_for(args.bits)?;
    let digits = checked_digits(&args.output, &ctx)?;
    let rows = conjecture_scan(args.n_max, &ctx)?;

    let mut table = Table::new(vec!["n", "delta_v", "delta_v_abs_error", "certified_negative"]);
    let mut all_negative = true;
    for row in &rows {
        all_negative &= row.certified_negative;
        table.push(vec![
            Cell::Count(row.n),
            eb_cell(&row.delta_v, digits),
            bound_cell(&row.delta_v),
            Cell::Flag(row.certified_negative),
        ]);
    }
    emit(&table, &args.output)?;
    if all_negative {
        Ok(0)
    } else {
        eprintln!(
            "note: a certified nonnegative difference v_{{n+1}} − v_n appeared; \
             the decrease of v_n is an open question, so this is a finding, \
             not a failure"
        );
        Ok(4)
    }
}

fn cmd_asymptotics(args: AsymptoticsArgs) -> Result<u8, CliError> {
    let ctx = context_for(args.bits)?;
    let digits = checked_digits(&args.output, &ctx)?;
    let reports = residual_scan(&args.grid, &ctx)?;

    let mut table = Table::new(vec![
        "n",
        "s1_exact",
        "s1_exact_abs_error",
        "s1_truncated",
        "s1_residual",
        "s1_scaled_residual",
        "s2_exact",
        "s2_exact_abs_error",
        "s2_truncated",
        "s2_residual",
        "s2_scaled_residual",
        "v_n",
        "v_n_abs_error",
    ]);
    for r in &reports {
        table.push(vec![
            Cell::Count(r.n),
            eb_cell(&r.s1.exact, digits),
            bound_cell(&r.s1.exact),
            real_cell(&r.s1.truncated, digits),
            real_cell(&r.s1.residual, digits),
            real_cell(&r.s1.scaled_residual, digits),
            eb_cell(&r.s2.exact, digits),
            bound_cell(&r.s2.exact),
            real_cell(&r.s2.truncated, digits),
            real_cell(&r.s2.residual, digits),
            real_cell(&r.s2.scaled_residual, digits),
            eb_cell(&r.v_n, digits),
            bound_cell(&r.v_n),
        ]);
    }
    emit(&table, &args.output)?;
    Ok(0)
}

fn cmd_simulate(cmd: SimulateCmd) -> Result<u8, CliError> {
    match cmd {
        SimulateCmd::Maxexp(args) => {
            let spec = RngSpec::chacha8(resolve_seed(args.seed), args.stream);
            let report = sample_log_max_exp(args.n, args.trials, &spec)?;
            let mut table = Table::new(vec![
                "n",
                "trials",
                "mean",
                "variance",
                "mean_std_err",
                "variance_std_err",
                "algorithm_id",
                "seed",
                "stream",
                "reference_mean",
                "reference_variance",
            ]);
            table.push(vec![
                Cell::Count(args.n),
                Cell::Count(report.trials),
                f64_cell(report.mean),
                f64_cell(report.variance),
                f64_cell(report.mean_std_err),
                f64_cell(report.variance_std_err),
                Cell::Text(report.rng.algorithm_id.clone()),
                Cell::Count(report.rng.seed),
                Cell::Count(report.rng.stream),
                opt_f64_cell(report.reference_mean),
                opt_f64_cell(report.reference_variance),
            ]);
            emit(&table, &args.output)?;
            Ok(0)
        }
        SimulateCmd::Ccp(args) => {
            let spec = RngSpec::chacha8(resolve_seed(args.seed), args.stream);
            let report = simulate_ccp_min(args.big_n, args.players, args.trials, &spec)?;
            let mut table = Table::new(vec![
                "N",
                "players",
                "trials",
                "mean",
                "variance",
                "mean_std_err",
                "variance_std_err",
                "algorithm_id",
                "seed",
                "stream",
                "reference_mean",
                "reference_variance",
            ]);
            table.push(vec![
                Cell::Count(args.big_n),
                Cell::Count(args.players),
                Cell::Count(report.trials),
                f64_cell(report.mean),
                f64_cell(report.variance),
                f64_cell(report.mean_std_err),
                f64_cell(report.variance_std_err),
                Cell::Text(report.rng.algorithm_id.clone()),
                Cell::Count(report.rng.seed),
                Cell::Count(report.rng.stream),
                opt_f64_cell(report.reference_mean),
                opt_f64_cell(report.reference_variance),
            ]);
            emit(&table, &args.output)?;
            Ok(0)
        }
    }
}

fn cmd_oracle(args: OracleArgs) -> Result<u8, CliError> {
    let ctx = context_for(None)?;
    let digits = checked_digits(&args.output, &ctx)?;
    let report = ccp_exact_min_moments(args.big_n, args.players, args.tol)?;
    let limit = coeff_row(args.players, &ctx, SumMethod::Auto)?;
    let scaled = report.variance / (args.big_n as f64 * args.big_n as f64);
    let ratio = scaled / limit.v_n.to_f64();

    let mut table = Table::new(vec![
        "N",
        "players",
        "mean",
        "second_moment",
        "variance",
        "truncation_error",
        "t_max",
        "v_n",
        "v_n_abs_error",
        "ratio",
    ]);
    table.push(vec![
        Cell::Count(report.big_n),
        Cell::Count(report.players),
        f64_cell(report.mean),
        f64_cell(report.second_moment),
        f64_cell(report.variance),
        f64_cell(report.truncation_error),
        Cell::Count(report.t_max),
        eb_cell(&limit.v_n, digits),
        bound_cell(&limit.v_n),
        f64_cell(ratio),
    ]);
    emit(&table, &args.output)?;
    Ok(0)
}
