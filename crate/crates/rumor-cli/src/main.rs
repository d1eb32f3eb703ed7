//! Command-line front end: parses flags, calls the library, prints the JSON
//! summary to stdout (or writes per-artifact files under `--out <dir>`), and
//! translates failures into documented exit codes: 2 for usage problems,
//! 3 for numerical ones (non-convergence, inapplicable bounds), 1 for I/O.

mod fmt;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rumor_core::defaults;
use rumor_core::error::Error;
use rumor_core::offspring::OffspringLaw;
use rumor_core::range::expected_range_bounds;
use rumor_core::sim::{estimate, Engine, SimConfig};
use rumor_core::spreader::SpreaderLaw;
use rumor_core::survival::{critical_parameter, extinction_probability, ScanFamily};

use fmt::sig12;

#[derive(Parser)]
#[command(
    name = "rumor-cli",
    version,
    about = "Maki-Thompson rumor dynamics on Galton-Watson trees: survival \
             probabilities, critical parameters, range bounds, and exact \
             event-driven simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the embedded spreader offspring law (pmf table, mean interval)
    Law(LawArgs),
    /// Solve for the extinction and survival probabilities
    Survival(SurvivalArgs),
    /// Bracket the critical parameter of a one-parameter family
    Critical(CriticalArgs),
    /// Rumor-range tail bounds and the expected-range interval
    Range(RangeArgs),
    /// Monte-Carlo simulation of the rumor on sampled random trees
    Simulate(SimulateArgs),
    /// Reproduction artifacts: fig2 (survival curve), fig5 (range-bound
    /// grid), table1 (critical points)
    Report(ReportArgs),
}

#[derive(Args)]
struct OutArg {
    /// Write artifacts into this directory instead of stdout, one file per
    /// artifact named <subcommand>-<dist>.csv|json
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LawArgs {
    /// Offspring law: fixed:d | binomial:n,p | poisson:lambda | geometric:p | custom:@table.csv
    #[arg(long, value_name = "SPEC")]
    dist: String,
    /// Truncation tail mass for infinite-support laws
    #[arg(long, default_value_t = defaults::EPS)]
    eps: f64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct SurvivalArgs {
    /// Offspring law: fixed:d | binomial:n,p | poisson:lambda | geometric:p | custom:@table.csv
    #[arg(long, value_name = "SPEC")]
    dist: String,
    /// Fixed-point convergence tolerance
    #[arg(long, default_value_t = defaults::TOL)]
    tol: f64,
    /// Truncation tail mass for infinite-support laws
    #[arg(long, default_value_t = defaults::EPS)]
    eps: f64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Binomial,
    Poisson,
    Geometric,
}

#[derive(Args)]
struct CriticalArgs {
    /// One-parameter family to scan
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Number of trials (binomial family only)
    #[arg(long)]
    n: Option<u32>,
    /// Scan range lower end (defaults to the family's natural range)
    #[arg(long)]
    lo: Option<f64>,
    /// Scan range upper end
    #[arg(long)]
    hi: Option<f64>,
    /// Bracket width to bisect down to
    #[arg(long, default_value_t = defaults::TOL)]
    tol: f64,
    /// Truncation tail mass for infinite-support laws
    #[arg(long, default_value_t = defaults::EPS)]
    eps: f64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct RangeArgs {
    /// Offspring law: fixed:d | binomial:n,p | poisson:lambda | geometric:p | custom:@table.csv
    #[arg(long, value_name = "SPEC")]
    dist: String,
    /// Largest horizon m in the per-m table
    #[arg(long = "max-m", default_value_t = defaults::M_MAX)]
    max_m: u32,
    /// Truncation tail mass for infinite-support laws
    #[arg(long, default_value_t = defaults::EPS)]
    eps: f64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Ctmc,
    Generation,
}

#[derive(Args)]
struct SimulateArgs {
    /// Offspring law: fixed:d | binomial:n,p | poisson:lambda | geometric:p | custom:@table.csv
    #[arg(long, value_name = "SPEC")]
    dist: String,
    /// Simulation engine: exact event-driven dynamics or the embedded
    /// generation process
    #[arg(long, value_enum, default_value_t = EngineArg::Ctmc)]
    engine: EngineArg,
    /// Tree depth cap; realized ranges are censored here
    #[arg(long, default_value_t = defaults::DEPTH)]
    depth: u32,
    /// Depth that counts as survival (defaults to --depth)
    #[arg(long)]
    survival_depth: Option<u32>,
    #[arg(long, default_value_t = defaults::REPLICAS)]
    replicas: u64,
    #[arg(long, default_value_t = defaults::SEED)]
    seed: u64,
    /// Per-replica contact budget; exhausting it marks the replica truncated
    #[arg(long, default_value_t = defaults::MAX_EVENTS)]
    max_events: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportName {
    /// Survival probability curve theta(binomial(3,p)), p = 0..1 step 0.005
    Fig2,
    /// Expected-range bounds for binomial(3,p) on the reference p-grid
    Fig5,
    /// Critical points p_c(n) with n*p_c approaching the Poisson value
    Table1,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(value_enum)]
    name: ReportName,
    /// Solver tolerance for the underlying sweeps
    #[arg(long, default_value_t = defaults::TOL)]
    tol: f64,
    /// Truncation tail mass for infinite-support laws
    #[arg(long, default_value_t = defaults::EPS)]
    eps: f64,
    #[command(flatten)]
    out: OutArg,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::SpecParse { .. } | Error::CustomTable(_) | Error::InvalidParameter(_) => 2,
            Error::NonConvergence { .. }
            | Error::BoundsNotApplicable(_)
            | Error::NonMonotoneScan { .. }
            | Error::NoCrossing { .. }
            | Error::EnumerationTooLarge(_) => 3,
            Error::Io(_) => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

/// File-name-safe rendering of a distribution spec: `binomial:3,0.5`
/// becomes `binomial-3-0.5`.
fn sanitize(spec: &str) -> String {
    spec.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') {
                c
            } else {
                '-'
            }
        })
        .collect()
}

/// Print the JSON summary to stdout, or write `<stem>.json` (and the CSV
/// artifact when there is one) under the output directory.
fn emit<T: Serialize>(
    out: &OutArg,
    stem: &str,
    summary: &T,
    csv: Option<&str>,
) -> Result<(), Failure> {
    let json_text = serde_json::to_string_pretty(summary)? + "\n";
    match &out.out {
        None => print!("{json_text}"),
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(format!("{stem}.json")), json_text)?;
            if let Some(csv) = csv {
                std::fs::write(dir.join(format!("{stem}.csv")), csv)?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct LawSummary {
    dist: String,
    q0: f64,
    mean_lower: f64,
    mean_upper: f64,
    support: usize,
}

fn run_law(args: LawArgs) -> Result<(), Failure> {
    let law = OffspringLaw::parse(&args.dist)?;
    let sl = SpreaderLaw::build(&law, args.eps)?;
    let (mean_lower, mean_upper) = sl.mean_interval();
    let mut csv = String::from("i,probability\n");
    for (i, &q) in sl.q().iter().enumerate() {
        csv.push_str(&format!("{i},{}\n", sig12(q)));
    }
    let summary = LawSummary {
        dist: args.dist.clone(),
        q0: sl.q0(),
        mean_lower,
        mean_upper,
        support: sl.q().len(),
    };
    emit(&args.out, &format!("law-{}", sanitize(&args.dist)), &summary, Some(&csv))
}

fn run_survival(args: SurvivalArgs) -> Result<(), Failure> {
    let law = OffspringLaw::parse(&args.dist)?;
    let sl = SpreaderLaw::build(&law, args.eps)?;
    let result = extinction_probability(&sl, args.tol)?;
    emit(
        &args.out,
        &format!("survival-{}", sanitize(&args.dist)),
        &result,
        None,
    )
}

fn run_critical(args: CriticalArgs) -> Result<(), Failure> {
    let (family, stem) = match args.family {
        FamilyArg::Binomial => {
            let n = args
                .n
                .ok_or_else(|| usage("--n is required for --family binomial"))?;
            (ScanFamily::BinomialP { n }, format!("critical-binomial-{n}"))
        }
        FamilyArg::Poisson => (ScanFamily::PoissonLambda, "critical-poisson".to_string()),
        FamilyArg::Geometric => (ScanFamily::GeometricP, "critical-geometric".to_string()),
    };
    if !matches!(args.family, FamilyArg::Binomial) && args.n.is_some() {
        return Err(usage("--n only applies to --family binomial"));
    }
    let range = match (args.lo, args.hi) {
        (None, None) => family.default_range(),
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(usage("--lo and --hi must be given together")),
    };
    let bracket = critical_parameter(family, range, args.tol, args.eps)?;
    emit(&args.out, &stem, &bracket, None)
}

fn run_range(args: RangeArgs) -> Result<(), Failure> {
    let law = OffspringLaw::parse(&args.dist)?;
    let sl = SpreaderLaw::build(&law, args.eps)?;
    let bounds = expected_range_bounds(&sl, args.max_m)?;
    let mut csv = String::from("m,lower,exact,upper\n");
    for row in &bounds.per_m {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.m,
            sig12(row.lower),
            sig12(row.exact),
            sig12(row.upper)
        ));
    }
    emit(
        &args.out,
        &format!("range-{}", sanitize(&args.dist)),
        &bounds.summary(),
        Some(&csv),
    )
}

fn run_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let law = OffspringLaw::parse(&args.dist)?;
    let cfg = SimConfig {
        law,
        engine: match args.engine {
            EngineArg::Ctmc => Engine::Ctmc,
            EngineArg::Generation => Engine::Generation,
        },
        max_depth: args.depth,
        replicas: args.replicas,
        seed: args.seed,
        max_events: args.max_events,
        survival_depth: args.survival_depth.unwrap_or(args.depth),
    };
    let result = estimate(&cfg)?;
    let mut csv = String::from("depth,tail\n");
    for (depth, tail) in result.depth_tail().iter().enumerate() {
        csv.push_str(&format!("{depth},{}\n", sig12(*tail)));
    }
    emit(
        &args.out,
        &format!("simulate-{}", sanitize(&args.dist)),
        &result.summary,
        Some(&csv),
    )
}

fn run_report(args: ReportArgs) -> Result<(), Failure> {
    let (artifact, stem) = match args.name {
        ReportName::Fig2 => (report::fig2(args.tol, args.eps)?, "report-fig2"),
        ReportName::Fig5 => (report::fig5(args.eps)?, "report-fig5"),
        ReportName::Table1 => (report::table1(args.tol, args.eps)?, "report-table1"),
    };
    emit(&args.out, stem, &artifact.summary, Some(&artifact.csv))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Law(args) => run_law(args),
        Command::Survival(args) => run_survival(args),
        Command::Critical(args) => run_critical(args),
        Command::Range(args) => run_range(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Report(args) => run_report(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
