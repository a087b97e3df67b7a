//! `dualdiv`: batch estimation, simulation and verification runs driven by a
//! TOML config.

mod commands;
mod config;
mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::LevelFilter;

use commands::Failure;
use config::{Format, RunConfig};

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NON_CONVERGENCE: u8 = 4;
const EXIT_VERIFY_FAILED: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "dualdiv", version, about = "Minimum dual phi-divergence estimation and verification")]
struct Args {
    /// Run configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Report destination; overrides `output.path`. Defaults to stdout.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Report format; overrides `output.format`.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    #[arg(long, value_name = "LEVEL", default_value = "warn")]
    log_level: LevelFilter,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let args = Args::parse();
    env_logger::Builder::new().filter_level(args.log_level).format_timestamp(None).init();
    match run(&args) {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("dualdiv: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(args: &Args) -> Result<u8, (u8, String)> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err((EXIT_CONFIG, "--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| (EXIT_CONFIG, e.to_string()))?;
    }
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| (EXIT_CONFIG, format!("cannot read {}: {e}", args.config.display())))?;
    let base = args.config.parent().map(PathBuf::from).unwrap_or_default();
    let cfg = RunConfig::parse(&text, &base).map_err(|e| (EXIT_CONFIG, format!("{}: {e}", args.config.display())))?;
    let format = match args.format {
        Some(FormatArg::Json) => Format::Json,
        Some(FormatArg::Csv) => Format::Csv,
        None => cfg.output.format.unwrap_or_default(),
    };

    let outcome = commands::run(&cfg, format).map_err(|f| match f {
        Failure::Config(m) => (EXIT_CONFIG, m),
        Failure::Data(m) => (EXIT_DATA, m),
    })?;

    let io_err = |e: std::io::Error| (EXIT_IO, format!("writing report: {e}"));
    match args.output.as_ref().or(cfg.output.path.as_ref()) {
        Some(path) => {
            let file = File::create(path).map_err(|e| (EXIT_IO, format!("{}: {e}", path.display())))?;
            let mut out = BufWriter::new(file);
            outcome.report.write(format, &mut out).map_err(io_err)?;
            out.flush().map_err(io_err)?;
        }
        None => {
            let stdout = std::io::stdout();
            outcome.report.write(format, &mut stdout.lock()).map_err(io_err)?;
        }
    }

    Ok(if outcome.checks_failed {
        EXIT_VERIFY_FAILED
    } else if outcome.non_converged {
        EXIT_NON_CONVERGENCE
    } else {
        0
    })
}
