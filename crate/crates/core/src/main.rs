use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use vibronic_dimer::runner::{self, RunError, RunOptions};
use vibronic_dimer::scenario::{parse_layers, parse_range, preset, ParseError, Scenario, PRESET_NAMES};

#[derive(Parser)]
#[command(version, about = "Exciton dimer dynamics with one exact vibrational mode")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the scenario (or its coupling sweep) and write CSV reports.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Preset loaded underneath the config file.
        #[arg(long)]
        figure: Option<String>,
        /// Output directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fock truncation (overrides model.n_max).
        #[arg(long)]
        truncation: Option<usize>,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Rerun every point with this many extra Fock states and require
        /// max |Δp| < 1e-6.
        #[arg(long)]
        convergence_delta: Option<usize>,
    },
    /// Tabulate adiabatic doublet splittings and spectral-density sampling.
    Adiabatic {
        #[arg(long)]
        config: PathBuf,
        /// Coupling grid `start:stop:step` in rad/ps.
        #[arg(long)]
        g_grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of doublets (n = 0..levels).
        #[arg(long, default_value_t = 2)]
        levels: usize,
    },
}

fn load(config: &PathBuf, figure: Option<&str>) -> Result<Scenario, RunError> {
    let text = std::fs::read_to_string(config).map_err(|source| RunError::Io {
        path: config.clone(),
        source,
    })?;
    let base = match figure {
        None => "",
        Some(name) => preset(name).ok_or_else(|| ParseError {
            line: 0,
            message: format!("unknown figure `{name}` (known: {})", PRESET_NAMES.join(", ")),
        })?,
    };
    Ok(parse_layers(&[base, &text])?)
}

fn execute(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Simulate {
            config,
            figure,
            out,
            truncation,
            jobs,
            convergence_delta,
        } => {
            let mut s = load(&config, figure.as_deref())?;
            if let Some(n) = truncation {
                s.model = s.model.with_n_max(n).map_err(|e| ParseError {
                    line: 0,
                    message: format!("--truncation: {e}"),
                })?;
            }
            let out = out.unwrap_or_else(|| s.output_dir.clone());
            let results = runner::run(&s, &out, RunOptions { jobs, convergence_delta })?;
            info!("wrote {} trajectories to {}", results.len(), out.display());
        }
        Command::Adiabatic {
            config,
            g_grid,
            out,
            levels,
        } => {
            let s = load(&config, None)?;
            let grid = parse_range(&g_grid).map_err(|message| ParseError {
                line: 0,
                message: format!("--g-grid: {message}"),
            })?;
            let out = out.unwrap_or_else(|| s.output_dir.clone());
            let path = runner::report_adiabatic(&s, &grid, levels, &out)?;
            info!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
