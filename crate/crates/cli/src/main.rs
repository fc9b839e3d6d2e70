use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use ricciwave::harness::{
    emit, to_csv_string, to_json_string, Experiment, ExperimentConfig, Format,
};
use ricciwave::Error;

#[derive(Parser)]
#[command(
    name = "ricciwave",
    version,
    about = "Wave approximation of backward heat flows on Ricci flow backgrounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its table.
    Run {
        experiment: String,
        /// TOML config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<String>,
        /// Override a config key, e.g. `--set ns=[8,16]`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Also write a plot script next to the output file.
        #[arg(long)]
        plot: bool,
    },
    /// List the registered experiments.
    List,
}

fn run(
    experiment: &str,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    format: Option<String>,
    mut set: Vec<String>,
    plot: bool,
) -> Result<bool, Error> {
    let experiment = Experiment::from_str(experiment)?;
    let text = config
        .map(|p| fs::read_to_string(&p).map_err(|e| Error::Config(format!("{}: {e}", p.display()))))
        .transpose()?;
    if let Some(f) = format {
        set.push(format!("format=\"{f}\""));
    }
    if plot {
        set.push("plot=true".into());
    }
    let mut cfg = ExperimentConfig::load(experiment, text.as_deref(), &set)?;
    if out.is_some() {
        cfg.out = out;
    }
    let table = ricciwave::run_experiment(&cfg)?;
    match &cfg.out {
        Some(path) => emit(&table, cfg.format, path, cfg.plot)?,
        None => {
            let text = match cfg.format {
                Format::Csv => to_csv_string(&table)?,
                Format::Json => to_json_string(&table)?,
            };
            io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok((0..table.rows.len()).any(|i| table.is_diverged(i)))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli.command {
        Command::List => {
            for e in Experiment::ALL {
                println!("{:<18} {}", e.name(), e.description());
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            experiment,
            config,
            out,
            format,
            set,
            plot,
        } => match run(&experiment, config, out, format, set, plot) {
            Ok(false) => ExitCode::SUCCESS,
            Ok(true) => {
                eprintln!("error: at least one sweep member diverged");
                ExitCode::from(1)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(if e.is_numerical() { 1 } else { 2 })
            }
        },
    }
}
