//! Command-line front end: run experiments and sweeps, emit figure data.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use leveltrig::harness::{
    self, output::write_text, parse_experiment, parse_sweep, render_rows, run_experiment,
    run_sweep, ExperimentConfig, OutputFormat,
};
use leveltrig::Error;

#[derive(Parser)]
#[command(name = "leveltrig", version, about = "Level-triggered vs periodic sampling Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single experiment.
    Run(RunArgs),
    /// Run an (n, p) grid of level-triggered experiments.
    Sweep(RunArgs),
    /// Cost ratio per norm against periodic sampling.
    Fig1(FigArgs),
    /// Cost ratio per norm against the 2-norm trigger.
    Fig2(FigArgs),
    /// Run the built-in analytic and Monte Carlo self-checks.
    Check,
}

#[derive(Args)]
struct RunArgs {
    /// Config document (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<u64>,
    /// Euler-Maruyama step size.
    #[arg(long)]
    h: Option<f64>,
    /// Worker threads. Results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct FigArgs {
    /// Stored result rows (CSV, or JSON by `.json` extension).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Run(args) => {
            let mut cfg = parse_experiment(&read_config(args.config.as_deref())?)?;
            apply_overrides(&mut cfg, &args)?;
            let row = with_threads(args.threads, || run_experiment(&cfg))?;
            emit(&[row], &args)?;
        }
        Command::Sweep(args) => {
            let (spec, mut base) = parse_sweep(&read_config(args.config.as_deref())?)?;
            apply_overrides(&mut base, &args)?;
            let rows = with_threads(args.threads, || run_sweep(&spec, &base))?;
            emit(&rows, &args)?;
        }
        Command::Fig1(args) => {
            let rows = harness::read_rows(&args.input)?;
            write_or_print(args.out.as_deref(), &harness::fig1_csv(&rows)?)?;
        }
        Command::Fig2(args) => {
            let rows = harness::read_rows(&args.input)?;
            write_or_print(args.out.as_deref(), &harness::fig2_csv(&rows)?)?;
        }
        Command::Check => {
            let outcomes = harness::selfcheck::run_checks();
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            for o in &outcomes {
                println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
            }
            if failed > 0 {
                println!("{failed} of {} checks failed", outcomes.len());
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn read_config(path: Option<&Path>) -> Result<String, Error> {
    match path {
        None => Ok(String::new()),
        Some(p) => fs::read_to_string(p).map_err(|source| Error::Io {
            path: p.to_owned(),
            source,
        }),
    }
}

fn apply_overrides(cfg: &mut ExperimentConfig, args: &RunArgs) -> Result<(), Error> {
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
    if let Some(h) = args.h {
        cfg.h = h;
    }
    if args.threads == Some(0) {
        return Err(Error::Config {
            key: "threads".into(),
            line: 0,
            message: "must be positive".into(),
        });
    }
    cfg.validate()
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    job: impl FnOnce() -> Result<T, Error> + Send,
) -> Result<T, Error> {
    match threads {
        None => job(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Config {
                key: "threads".into(),
                line: 0,
                message: e.to_string(),
            })?
            .install(job),
    }
}

fn emit(rows: &[harness::ResultRow], args: &RunArgs) -> Result<(), Error> {
    let format = match (args.format, args.out.as_deref()) {
        (Some(Format::Csv), _) => OutputFormat::Csv,
        (Some(Format::Json), _) => OutputFormat::Json,
        (None, Some(path)) => OutputFormat::from_path(path),
        (None, None) => OutputFormat::Csv,
    };
    write_or_print(args.out.as_deref(), &render_rows(rows, format))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => write_text(path, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}
