use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mbprop_cli::commands::{self, Globals};

/// Maxwell-Bloch simulation of coherence retention and two-photon readout.
///
/// Exit status: 0 success, 1 configuration or input error, 2 numerical
/// failure (including failed checks).
#[derive(Parser)]
#[command(name = "mbprop", version)]
struct Cli {
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps and the validation suite
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,
    /// Logarithmic y axis in plots
    #[arg(long, global = true)]
    logy: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single propagation run
    Run {
        /// INI configuration; reference values when omitted
        config: Option<PathBuf>,
    },
    /// Integrated signal versus read delay
    DelayScan {
        config: Option<PathBuf>,
        /// start:stop:step in fs
        #[arg(long)]
        taus: Option<String>,
        /// Exponential fit window from:to in fs
        #[arg(long)]
        fit: Option<String>,
    },
    /// Integrated signal and peak |rho_BA| versus initial B population
    PopulationScan {
        config: Option<PathBuf>,
        /// Comma-separated rho_BB(0) values
        #[arg(long = "rho-bb")]
        rho_bb: Option<String>,
        /// Read delay in fs
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<f64>,
    },
    /// Power spectrum of a field CSV or of a configuration's exit signal
    Spectrum { input: PathBuf },
    /// Run with a signal-band seed pulse
    SeedRun {
        config: Option<PathBuf>,
        /// Seed center relative to the pump center, fs
        #[arg(long, allow_hyphen_values = true)]
        delay: Option<f64>,
    },
    /// Compare a run against a refined grid
    Convergence {
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        factor: usize,
    },
    /// Run the invariant and oracle suite
    Validate {
        /// Flip the sign of the AC-Stark term (the suite must then fail)
        #[arg(long)]
        inject_fault: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = Globals { out: cli.out, jobs: cli.jobs as usize, logy: cli.logy };
    let result = match &cli.command {
        Command::Run { config } => commands::run(&g, config.as_deref()),
        Command::DelayScan { config, taus, fit } => {
            commands::delay_scan(&g, config.as_deref(), taus.as_deref(), fit.as_deref())
        }
        Command::PopulationScan { config, rho_bb, tau } => {
            commands::population_scan(&g, config.as_deref(), rho_bb.as_deref(), *tau)
        }
        Command::Spectrum { input } => commands::spectrum(&g, input),
        Command::SeedRun { config, delay } => commands::seed_run(&g, config.as_deref(), *delay),
        Command::Convergence { config, factor } => commands::convergence(&g, config.as_deref(), *factor),
        Command::Validate { inject_fault } => commands::run_validate(&g, *inject_fault),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
