use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, ValueEnum};
use inclusion_lab::{parse_config, run_driver, Driver, Error, ExperimentConfig, RunManifest};

const EXIT_ERROR: u8 = 1;
const EXIT_ASSERTION: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    GapScan,
    Squeeze,
    Lifting,
    Wegner,
    Ise,
    CombesThomas,
    Suitability,
    ProjectorDecay,
    Dynamics,
    Selftest,
}

impl Command {
    fn driver(self) -> Driver {
        self.to_possible_value()
            .expect("every command has a name")
            .get_name()
            .parse()
            .expect("every command names a driver")
    }
}

/// Numerical experiments on random high-contrast inclusion media.
#[derive(Debug, Parser)]
#[command(name = "inclusion-lab", version)]
struct Cli {
    /// Experiment driver to run.
    #[arg(value_enum)]
    command: Command,

    /// Flat `key = value` configuration file; defaults are used for missing keys.
    #[arg(long, short)]
    config: Option<PathBuf>,

    /// Directory receiving the JSON report, CSV records and TSV plot data.
    #[arg(long, short, default_value = "out")]
    out: PathBuf,

    /// Use the dense eigensolver instead of the sparse engine (small grids only).
    #[arg(long)]
    oracle_dense: bool,

    /// Override `run.master_seed`.
    #[arg(long)]
    seed: Option<u64>,

    /// Override `run.realizations`.
    #[arg(long)]
    realizations: Option<usize>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } => EXIT_CONFIG,
        Error::Assertion(_) => EXIT_ASSERTION,
        _ => EXIT_ERROR,
    }
}

fn manifest(cli: &Cli) -> Result<RunManifest, Error> {
    let mut manifest = match &cli.config {
        Some(path) => parse_config(path)?,
        None => RunManifest::new(ExperimentConfig::default()),
    };
    let cfg = &mut manifest.config;
    if cli.oracle_dense {
        cfg.run.oracle_dense = true;
    }
    if let Some(seed) = cli.seed {
        cfg.run.master_seed = seed;
    }
    if let Some(r) = cli.realizations {
        cfg.run.realizations = r;
    }
    if let Err(issue) = cfg.validate() {
        return Err(Error::Config {
            line: 0,
            message: format!("{}: {}", issue.key, issue.message),
        });
    }
    manifest.output_dir = Some(cli.out.display().to_string());
    Ok(manifest)
}

fn run(cli: &Cli) -> Result<u8, Error> {
    let manifest = manifest(cli)?;
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    let driver = cli.command.driver();
    let report = run_driver(driver, &manifest)?;
    let written = report.write_all(Path::new(&cli.out))?;
    println!(
        "{}: {} records, {} flagged, {:.2} s",
        driver.subcommand(),
        report.records.len(),
        report.flagged.len(),
        report.wall_clock_seconds
    );
    for a in &report.assertions {
        println!("  {} {}: {}", if a.passed { "ok  " } else { "FAIL" }, a.name, a.detail);
    }
    for path in &written {
        println!("  wrote {}", path.display());
    }
    Ok(if report.passed() { 0 } else { EXIT_ASSERTION })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_CONFIG),
            };
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
