//! `dqma`: run, sweep, attack and self-check dQMA protocol simulations.

mod config;
mod experiment;
mod output;
mod sweep;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use dqma_core::adversary::AttackSpec;
use dqma_core::selftest::{check_names, run_selected, CheckStatus, SelftestOptions};
use dqma_core::Error;

use config::{ExperimentConfig, Format, SweepConfig};
use experiment::{run_experiment, Settings};
use sweep::{run_sweep, CellOutcome};

#[derive(Parser, Debug)]
#[command(name = "dqma", version, about = "Exact and sampled simulation of distributed quantum Merlin-Arthur protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON config file ("-" reads stdin).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Write output here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format; overrides the config's `format`.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Seed for every random choice; overrides the config.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Largest proof-space dimension to build; overrides the config.
    #[arg(long, value_name = "N")]
    dim_cap: Option<usize>,
    /// Leave `wall_time_ms` out so output is byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment config.
    Run(Common),
    /// Run the cartesian product of a template config over parameter axes.
    Sweep(Common),
    /// Run one attack construction.
    Attack {
        #[command(flatten)]
        common: Common,
        /// Resample the attack's proof with this many shots.
        #[arg(long, value_name = "N")]
        shots: Option<u64>,
    },
    /// Run the built-in invariant suite.
    Selftest {
        /// Output format; plain text when absent.
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long, value_name = "U64", default_value_t = 7)]
        seed: u64,
        #[arg(long, value_name = "N")]
        threads: Option<usize>,
        #[arg(long, value_name = "N", default_value_t = dqma_core::DEFAULT_DIM_CAP)]
        dim_cap: usize,
        /// Use 10^4 shots and samples instead of 10^5.
        #[arg(long)]
        quick: bool,
        /// Run only the named checks (repeatable).
        #[arg(long = "check", value_name = "NAME")]
        checks: Vec<String>,
        /// Print check names and exit.
        #[arg(long)]
        list: bool,
    },
}

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = if path.as_os_str() == "-" {
        io::read_to_string(io::stdin()).context("reading stdin")?
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
    };
    let value = serde_json::from_str(&text).map_err(|e| SchemaError(format!("{}: {e}", path.display())))?;
    Ok(value)
}

/// A config that does not match the expected shape.
#[derive(Debug)]
struct SchemaError(String);

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for SchemaError {}

fn open_out(out: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(io::BufWriter::new(
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn init_threads(threads: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the worker pool")?;
    }
    Ok(())
}

fn settings(common: &Common) -> Settings {
    Settings { seed: common.seed, dim_cap: common.dim_cap, timing: !common.no_timing }
}

fn csv_writer(out: Box<dyn Write>) -> csv::Writer<Box<dyn Write>> {
    csv::WriterBuilder::new().from_writer(out)
}

fn cmd_run(common: &Common) -> anyhow::Result<ExitCode> {
    let config: ExperimentConfig = read_config(&common.config)?;
    let result = run_experiment(&config, &settings(common))?;
    let format = common.format.or(config.format).unwrap_or(Format::Json);
    let mut out = open_out(&common.out)?;
    match format {
        Format::Json => {
            let v = output::to_rounded_value(&result)?;
            serde_json::to_writer_pretty(&mut out, &v)?;
            writeln!(out)?;
            out.flush()?;
        }
        Format::Csv => {
            let mut w = csv_writer(out);
            w.write_record(output::CSV_HEADER)?;
            w.write_record(output::csv_row(&result))?;
            w.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(common: &Common) -> anyhow::Result<ExitCode> {
    let sweep: SweepConfig = read_config(&common.config)?;
    let outcomes = run_sweep(&sweep, &settings(common))?;
    let format = common.format.or(sweep.template.format).unwrap_or(Format::Json);
    let mut out = open_out(&common.out)?;
    match format {
        Format::Json => {
            for o in &outcomes {
                match o {
                    CellOutcome::Done(r) => output::write_json_line(&mut out, r.as_ref())?,
                    CellOutcome::Skipped(s) => output::write_json_line(&mut out, s)?,
                }
            }
            out.flush()?;
        }
        Format::Csv => {
            let mut w = csv_writer(out);
            w.write_record(output::CSV_HEADER)?;
            for (k, o) in outcomes.iter().enumerate() {
                match o {
                    CellOutcome::Done(r) => w.write_record(output::csv_row(r))?,
                    CellOutcome::Skipped(s) => eprintln!("cell {k} skipped: {}", s.reason),
                }
            }
            w.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_attack(common: &Common, shots: Option<u64>) -> anyhow::Result<ExitCode> {
    let spec: AttackSpec = read_config(&common.config)?;
    let cap = common.dim_cap.unwrap_or(dqma_core::DEFAULT_DIM_CAP);
    let outcome = spec.run(cap)?;
    let seed = common.seed.unwrap_or(0);
    let resampled = match shots {
        Some(s) => outcome.resample(s, seed)?,
        None => None,
    };
    let report = &outcome.report;
    let mut out = open_out(&common.out)?;
    match common.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut v = json!({ "spec": spec, "report": report });
            if let (Some((freq, stderr)), Some(s)) = (resampled, shots) {
                v["sampled"] = json!({ "shots": s, "seed": seed, "accept_frequency": freq, "accept_stderr": stderr });
            }
            output::round_floats(&mut v);
            serde_json::to_writer_pretty(&mut out, &v)?;
            writeln!(out)?;
            out.flush()?;
        }
        Format::Csv => {
            let opt = |x: Option<f64>| x.map(|v| output::round_sig(v).to_string()).unwrap_or_default();
            let mut w = csv_writer(out);
            w.write_record(["attack", "status", "cut_index", "pair_found", "accept_prob", "reference_line"])?;
            w.write_record([
                report.attack.clone(),
                serde_json::to_value(report.status)?.as_str().unwrap_or_default().to_string(),
                report.cut_index.map(|c| c.to_string()).unwrap_or_default(),
                report.pair_found.to_string(),
                opt(report.accept_prob),
                opt(report.reference_line),
            ])?;
            w.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_selftest(
    format: Option<Format>,
    out: &Option<PathBuf>,
    seed: u64,
    dim_cap: usize,
    quick: bool,
    checks: &[String],
    list: bool,
) -> anyhow::Result<ExitCode> {
    let mut sink = open_out(out)?;
    if list {
        for name in check_names() {
            writeln!(sink, "{name}")?;
        }
        sink.flush()?;
        return Ok(ExitCode::SUCCESS);
    }
    let shots = if quick { 10_000 } else { 100_000 };
    let opts = SelftestOptions { seed, dim_cap, shots, brute_force_samples: shots as usize };
    let names: Vec<&str> = if checks.is_empty() { check_names() } else { checks.iter().map(String::as_str).collect() };
    if let Some(bad) = names.iter().find(|n| !check_names().contains(n)) {
        return Err(Error::InvalidParameter(format!("unknown check {bad}; see --list")).into());
    }
    let report = run_selected(&opts, &names);
    match format {
        None => {
            for c in &report.checks {
                let status = match c.status {
                    CheckStatus::Pass => "PASS",
                    CheckStatus::Fail => "FAIL",
                    CheckStatus::Skipped => "SKIP",
                };
                writeln!(sink, "{status:<4} {:<42} {}", c.name, c.detail)?;
            }
            writeln!(
                sink,
                "{} passed, {} failed, {} skipped",
                report.count(CheckStatus::Pass),
                report.count(CheckStatus::Fail),
                report.count(CheckStatus::Skipped)
            )?;
        }
        Some(Format::Json) => {
            let v = output::to_rounded_value(&report)?;
            serde_json::to_writer_pretty(&mut sink, &v)?;
            writeln!(sink)?;
        }
        Some(Format::Csv) => {
            let mut w = csv_writer(sink);
            w.write_record(["name", "status", "detail"])?;
            for c in &report.checks {
                w.write_record([c.name.as_str(), serde_json::to_value(c.status)?.as_str().unwrap_or_default(), &c.detail])?;
            }
            w.flush()?;
            return Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
    }
    sink.flush()?;
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

/// 2: bad config or parameters, 3: proof space over the cap, 4: numerical failure, 1: anything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<SchemaError>().is_some() || err.downcast_ref::<serde_json::Error>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::DimensionCap { .. }) => 3,
        Some(Error::Numerical(_)) => 4,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match &cli.command {
        Command::Run(c) | Command::Sweep(c) | Command::Attack { common: c, .. } => c.threads,
        Command::Selftest { threads, .. } => *threads,
    };
    let result = init_threads(threads).and_then(|()| match &cli.command {
        Command::Run(c) => cmd_run(c),
        Command::Sweep(c) => cmd_sweep(c),
        Command::Attack { common, shots } => cmd_attack(common, *shots),
        Command::Selftest { format, out, seed, dim_cap, quick, checks, list, .. } => {
            cmd_selftest(*format, out, *seed, *dim_cap, *quick, checks, *list)
        }
    });
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
