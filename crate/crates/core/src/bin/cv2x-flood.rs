use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use cv2x_flood::calibrate::{calibrate, load_targets, CalibrateError};
use cv2x_flood::runner::{queue_trace_csv, run_scenario_with, RunOptions};
use cv2x_flood::suite::{parse_values, run_suite, sweep, sweep_csv};
use cv2x_flood::{load_scenario, metrics};

#[derive(Parser)]
#[command(name = "cv2x-flood", version, about = "Flooding attacks against a C-V2X receiver and its FCW application")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Also write the CBR and queue traces (needs --out).
        #[arg(long, requires = "out")]
        trace: bool,
    },
    /// Run every scenario of a directory.
    Suite {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rerun a scenario once per value of one numeric parameter.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Dotted path, e.g. `attacks.0.rate_hz`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// Search the targets grid for defaults.
    Calibrate {
        #[arg(long)]
        targets: PathBuf,
    },
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, name: &str, contents: &str) -> Result<()> {
    match out {
        Some(dir) => write(dir, name, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            format,
            trace,
        } => {
            let mut s = load_scenario(&scenario)?;
            if let Some(seed) = seed {
                s.seed = seed;
                s.channel.seed = None;
            }
            let output = run_scenario_with(&s, RunOptions { queue_trace: trace })?;
            let (name, body) = match format {
                Format::Csv => ("report.csv", output.report.to_csv()),
                Format::Json => ("report.json", serde_json::to_string_pretty(&output.report)? + "\n"),
            };
            emit(out.as_deref(), name, &body)?;
            if let (true, Some(dir)) = (trace, out.as_deref()) {
                write(dir, "cbr_trace.csv", &output.report.cbr_csv(output.windows()))?;
                write(dir, "queue_trace.csv", &queue_trace_csv(&output.queue_trace))?;
            }
        }
        Command::Suite { dir, out } => {
            let table = run_suite(&dir)?;
            eprint!("{}", table.render_text());
            emit(out.as_deref(), "suite.csv", &table.to_csv())?;
            if !table.errors.is_empty() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Sweep {
            scenario,
            param,
            values,
        } => {
            let base = load_scenario(&scenario)?;
            let values = parse_values(&values).map_err(anyhow::Error::msg)?;
            print!("{}", sweep_csv(&sweep(&base, &param, &values)?));
        }
        Command::Calibrate { targets } => {
            let targets = load_targets(&targets)?;
            match calibrate(&targets) {
                Ok(c) => {
                    println!("{}", serde_json::to_string_pretty(&c.chosen)?);
                    eprintln!("{}", c.provenance);
                    eprint!("{}", metrics::render_csv(&c.rows));
                }
                Err(e @ CalibrateError::Infeasible(_)) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(2));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
