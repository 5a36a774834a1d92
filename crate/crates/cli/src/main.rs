use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rdblow_cli::analyze::analyze_dir;
use rdblow_cli::config::load_config;
use rdblow_cli::output::{write_json, ERROR_JSON};
use rdblow_cli::run::execute;
use rdblow_cli::semigroup::{semigroup_test, SemigroupConfig};
use rdblow_cli::sweep::{execute_sweep, parse_sweep};
use rdblow_cli::{resolve_out, CliError};

#[derive(Parser)]
#[command(name = "rdblow", version, about = "Blow-up experiments for radial reaction-diffusion systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write its series and reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every cell of a parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Recompute the analyses of a configuration on an existing run directory.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smoothing ratios of the Ornstein–Uhlenbeck semigroup on indicators.
    SemigroupTest {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::config_at("config", format!("cannot read {}: {e}", path.display())))
}

/// Runs the command; the output directory, once known, receives `error.json`
/// on failure.
fn dispatch(cmd: Command, out_dir: &mut Option<PathBuf>) -> Result<String, CliError> {
    match cmd {
        Command::Run { config, out } => {
            *out_dir = out.clone();
            let cfg = load_config(&config)?;
            let dir = resolve_out(out.as_deref(), cfg.output_dir.as_deref())?;
            *out_dir = Some(dir.clone());
            let m = execute(&cfg, &dir)?;
            Ok(format!("run finished: {:?} at t = {} after {} steps", m.stop, m.t_stop, m.steps))
        }
        Command::Sweep { config, out, parallel } => {
            *out_dir = out.clone();
            let sweep = parse_sweep(&read(&config)?)?;
            let dir = resolve_out(out.as_deref(), sweep.output_dir.as_deref())?;
            *out_dir = Some(dir.clone());
            let s = execute_sweep(&sweep, config.parent(), &dir, parallel)?;
            let failed = s.rows.iter().filter(|r| r.status != "ok").count();
            Ok(format!("sweep finished: {} cells, {failed} failed", s.rows.len()))
        }
        Command::Analyze { config, out } => {
            *out_dir = out.clone();
            let cfg = load_config(&config)?;
            let dir = resolve_out(out.as_deref(), cfg.output_dir.as_deref())?;
            *out_dir = Some(dir.clone());
            let reports = analyze_dir(&cfg, &dir)?;
            Ok(format!("wrote {} reports", reports.len()))
        }
        Command::SemigroupTest { config, out } => {
            *out_dir = Some(out.clone());
            let cfg = match config {
                Some(p) => SemigroupConfig::parse(&read(&p)?)?,
                None => SemigroupConfig::default(),
            };
            let report = semigroup_test(&cfg)?;
            write_json(&out.join("semigroup_report.json"), &report)?;
            Ok(format!("flow error {:e}, ok = {}", report.flow_max_error, report.flow_ok))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out_dir = None;
    match dispatch(cli.command, &mut out_dir) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(dir) = out_dir {
                if let Err(w) = write_json(&dir.join(ERROR_JSON), &e.report()) {
                    eprintln!("error: {w}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
