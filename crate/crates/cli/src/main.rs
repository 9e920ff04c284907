mod commands;
mod config;
mod error;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::build::{GenTestArgs, TestInfoArgs};
use commands::martingale::{RunCapitalArgs, ToMartingaleArgs};
use commands::tree::{DecomposeArgs, ProbeArgs, SynthesizeArgs};
use commands::verify::VerifyArgs;
use config::{Format, Overrides, RunConfig};
use error::{CliError, CliResult, EXIT_PASS, EXIT_USAGE, EXIT_VIOLATION};

#[derive(Parser, Debug)]
#[command(
    name = "lebdiff",
    version,
    about = "Exact W-tests, martingales, dyadic trees and counterexamples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Dimension.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Component index or upper bound on `m`, depending on the command.
    #[arg(long, global = true)]
    m: Option<u32>,
    /// Array tier bound.
    #[arg(long, global = true)]
    k: Option<u32>,
    /// Approximation precision: errors are at most `2^-s`.
    #[arg(long, global = true)]
    s: Option<u32>,
    #[arg(long = "r-max", global = true)]
    r_max: Option<u32>,
    #[arg(long = "k-max", global = true)]
    k_max: Option<u32>,
    #[arg(long, global = true)]
    depth: Option<u32>,
    #[arg(
        long = "cell-budget",
        global = true,
        help = "log2 of the largest cell enumeration"
    )]
    cell_budget_log2: Option<u64>,
    /// Hardy–Littlewood constant (default `6^n`).
    #[arg(long, global = true)]
    c: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run configuration; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a test and report certified bounds on `μ(U_m)`.
    GenTest(GenTestArgs),
    /// Certified measure, array defects and coverage for a stored test.
    TestInfo(TestInfoArgs),
    /// Tabulate the martingale of a test on all cubes up to `--r-max`.
    ToMartingale(ToMartingaleArgs),
    /// Capital of the summed martingale along a point.
    RunCapital(RunCapitalArgs),
    /// Dyadic tree decomposition of a test.
    Decompose(DecomposeArgs),
    /// Oscillating function built from a tree.
    SynthesizeCounterexample(SynthesizeArgs),
    /// Translated-cube averages of a function, or a counterexample's path averages.
    ProbeLebesgue(ProbeArgs),
    /// Run invariant suites; exits 1 on any violation.
    Verify(VerifyArgs),
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            n: self.n,
            m: self.m,
            k: self.k,
            s: self.s,
            r_max: self.r_max,
            k_max: self.k_max,
            depth: self.depth,
            cell_budget_log2: self.cell_budget_log2,
            c: self.c,
            seed: self.seed,
            out: self.out.clone(),
            format: self.format,
        }
    }

    fn config(&self) -> CliResult<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let cfg = base.apply(&self.overrides());
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: &Cli) -> CliResult<i32> {
    let cfg = cli.config()?;
    let report = match &cli.command {
        Command::GenTest(a) => commands::build::gen_test(&cfg, a)?,
        Command::TestInfo(a) => commands::build::test_info(&cfg, a)?,
        Command::ToMartingale(a) => commands::martingale::to_martingale(&cfg, a)?,
        Command::RunCapital(a) => commands::martingale::run_capital(&cfg, a)?,
        Command::Decompose(a) => commands::tree::decompose_cmd(&cfg, a)?,
        Command::SynthesizeCounterexample(a) => commands::tree::synthesize(&cfg, a)?,
        Command::ProbeLebesgue(a) => commands::tree::probe(&cfg, a)?,
        Command::Verify(a) => commands::verify::verify(&cfg, a)?,
    };
    output::emit(&report, &cfg)?;
    Ok(if report.passed {
        EXIT_PASS
    } else {
        EXIT_VIOLATION
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &CliError) -> ExitCode {
    let record = serde_json::json!({ "error": e.record() });
    eprintln!("{record}");
    ExitCode::from(e.exit_code() as u8)
}
