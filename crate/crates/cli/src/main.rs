use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

mod commands;
mod data;
mod error;
mod output;
mod simulate;

use error::{usage, CliResult};
use output::{read_record, sidecar_path, write_file, Format, RunRecord};

/// Equivalence tests, critical constants, power envelopes and simulation.
#[derive(Debug, Parser)]
#[command(name = "eqtest", version)]
struct Cli {
    /// Write the report here instead of stdout (also writes `<out>.run.json`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; json for `critical` and `test`, csv otherwise.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Master seed for `simulate` (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Critical constant C(α, δ, σ) of the optimal test.
    Critical(commands::CriticalArgs),
    /// Run a test on a data file.
    Test(commands::TestArgs),
    /// Analytic power curves and envelopes.
    Power(commands::PowerArgs),
    /// Monte Carlo size and power.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["config", "replay"])))]
struct SimulateArgs {
    /// TOML configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Rerun from a `.run.json` record.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Worker threads (does not change the output).
    #[arg(long)]
    threads: Option<usize>,
}

fn name(c: &Command) -> &'static str {
    match c {
        Command::Critical(_) => "critical",
        Command::Test(_) => "test",
        Command::Power(_) => "power",
        Command::Simulate(_) => "simulate",
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let start = Instant::now();
    let mut out = cli.out.clone();
    let mut format = cli.format;
    let mut seed = cli.seed;
    let (config, report) = match &cli.command {
        Command::Critical(a) => commands::critical(a)?,
        Command::Test(a) => commands::test(a)?,
        Command::Power(a) => commands::power(a)?,
        Command::Simulate(a) => {
            let file = match (&a.config, &a.replay) {
                (Some(path), None) => simulate::read_config(path)?,
                (None, Some(path)) => {
                    let record = read_record(path)?;
                    if record.command != "simulate" {
                        return Err(usage(format!(
                            "{} is a `{}` record",
                            path.display(),
                            record.command
                        )));
                    }
                    format = format.or(Some(record.format));
                    out = out.or_else(|| record.outputs.first().cloned());
                    seed = seed.or(record.seed);
                    simulate::from_record(&record.config)?
                }
                _ => unreachable!("input group is exclusive and required"),
            };
            let file = simulate::resolve(file, seed, a.threads)?;
            seed = file.seed;
            simulate::run(&file)?
        }
    };
    let format = format.unwrap_or(match cli.command {
        Command::Critical(_) | Command::Test(_) => Format::Json,
        Command::Power(_) | Command::Simulate(_) => Format::Csv,
    });
    let text = report.render(format);
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes());
        }
        Some(path) => {
            write_file(&path, &text)?;
            let record = RunRecord {
                command: name(&cli.command).to_string(),
                config,
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed: if matches!(cli.command, Command::Simulate(_)) {
                    seed
                } else {
                    None
                },
                format,
                outputs: vec![path.clone()],
                duration_seconds: start.elapsed().as_secs_f64(),
            };
            let json = serde_json::to_string_pretty(&record).expect("record serializes") + "\n";
            write_file(&sidecar_path(&path), &json)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eqtest: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
